#pragma once

#include <cmath>
#include <random>
#include <string>

#include "meshmotion/nn/ops.hpp"
#include "meshmotion/nn/tape.hpp"

namespace meshmotion::nn {

template <class T>
Matrix<T> xavier_uniform(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> uni(-a, a);
  Matrix<T> w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(uni(rng));
  return w;
}

template <class T>
struct Linear {
  Parameter<T>* weight = nullptr;
  Parameter<T>* bias = nullptr;

  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, Eigen::Index in, Eigen::Index out,
         std::mt19937_64& rng, bool zero_init = false) {
    weight = &store.add(name + ".weight", zero_init ? Matrix<T>::Zero(in, out) : xavier_uniform<T>(in, out, rng));
    bias = &store.add(name + ".bias", Matrix<T>::Zero(1, out));
  }

  Eigen::Index in_features() const { return weight->value.rows(); }
  Eigen::Index out_features() const { return weight->value.cols(); }

  Var<T> operator()(Var<T> x) const {
    Tape<T>& t = *x.tape;
    return linear(x, t.parameter(*weight), t.parameter(*bias));
  }
};

template <class T>
struct LayerNorm {
  Parameter<T>* gamma = nullptr;
  Parameter<T>* beta = nullptr;

  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& store, const std::string& name, Eigen::Index dim) {
    gamma = &store.add(name + ".gamma", Matrix<T>::Ones(1, dim));
    beta = &store.add(name + ".beta", Matrix<T>::Zero(1, dim));
  }

  Var<T> operator()(Var<T> x) const {
    Tape<T>& t = *x.tape;
    return layer_norm(x, t.parameter(*gamma), t.parameter(*beta));
  }
};

template <class T>
struct Mlp {
  Linear<T> fc1, fc2;

  Mlp() = default;
  Mlp(ParameterStore<T>& store, const std::string& name, Eigen::Index dim, Eigen::Index hidden,
      std::mt19937_64& rng)
      : fc1(store, name + ".fc1", dim, hidden, rng), fc2(store, name + ".fc2", hidden, dim, rng) {}

  Var<T> operator()(Var<T> x) const { return fc2(gelu(fc1(x))); }
};

/// Multi-head attention with separate query and key/value input widths.
/// Output width equals the query width.
template <class T>
struct MultiHeadAttention {
  Linear<T> to_q, to_k, to_v, to_out;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore<T>& store, const std::string& name, Eigen::Index q_dim,
                     Eigen::Index kv_dim, int heads_, std::mt19937_64& rng)
      : to_q(store, name + ".q", q_dim, q_dim, rng),
        to_k(store, name + ".k", kv_dim, q_dim, rng),
        to_v(store, name + ".v", kv_dim, q_dim, rng),
        to_out(store, name + ".out", q_dim, q_dim, rng),
        heads(heads_) {
    if (q_dim % heads_ != 0) throw std::invalid_argument(name + ": width not divisible by heads");
  }

  Var<T> operator()(Var<T> x, Var<T> context, int groups = 1) const {
    return to_out(attention(to_q(x), to_k(context), to_v(context), heads, groups));
  }
};

/// Pre-norm transformer block: x + Attn(LN x); x + MLP(LN x).
template <class T>
struct SelfAttentionBlock {
  LayerNorm<T> norm1, norm2;
  MultiHeadAttention<T> attn;
  Mlp<T> mlp;

  SelfAttentionBlock() = default;
  SelfAttentionBlock(ParameterStore<T>& store, const std::string& name, Eigen::Index dim, int heads,
                     std::mt19937_64& rng, int mlp_ratio = 4)
      : norm1(store, name + ".norm1", dim),
        norm2(store, name + ".norm2", dim),
        attn(store, name + ".attn", dim, dim, heads, rng),
        mlp(store, name + ".mlp", dim, dim * mlp_ratio, rng) {}

  Var<T> operator()(Var<T> x, int groups = 1) const {
    Var<T> h = norm1(x);
    x = add(x, attn(h, h, groups));
    return add(x, mlp(norm2(x)));
  }
};

/// Pre-norm cross-attention block: queries attend to a normalized context.
/// Each query row is processed independently of the other queries.
template <class T>
struct CrossAttentionBlock {
  LayerNorm<T> norm_q, norm_kv, norm2;
  MultiHeadAttention<T> attn;
  Mlp<T> mlp;

  CrossAttentionBlock() = default;
  CrossAttentionBlock(ParameterStore<T>& store, const std::string& name, Eigen::Index q_dim,
                      Eigen::Index kv_dim, int heads, std::mt19937_64& rng, int mlp_ratio = 4)
      : norm_q(store, name + ".norm_q", q_dim),
        norm_kv(store, name + ".norm_kv", kv_dim),
        norm2(store, name + ".norm2", q_dim),
        attn(store, name + ".attn", q_dim, kv_dim, heads, rng),
        mlp(store, name + ".mlp", q_dim, q_dim * mlp_ratio, rng) {}

  Var<T> operator()(Var<T> x, Var<T> context, int groups = 1) const {
    x = add(x, attn(norm_q(x), norm_kv(context), groups));
    return add(x, mlp(norm2(x)));
  }
};

}  // namespace meshmotion::nn
