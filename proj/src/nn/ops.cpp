#include "meshmotion/nn/ops.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace meshmotion::nn {

namespace {

template <class T>
void require_same_tape(Var<T> a, Var<T> b) {
  if (a.tape != b.tape || a.tape == nullptr) throw std::invalid_argument("ops: vars on different tapes");
}

template <class T>
void require_same_shape(Var<T> a, Var<T> b, const char* op) {
  require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix<T> out = a.value() * b.value();
  return a.tape->emit(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

template <class T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  require_same_tape(x, weight);
  require_same_tape(x, bias);
  if (x.cols() != weight.rows()) throw std::invalid_argument("linear: input width mismatch");
  if (bias.rows() != 1 || bias.cols() != weight.cols()) throw std::invalid_argument("linear: bad bias shape");
  Matrix<T> out = x.value() * weight.value();
  out.rowwise() += bias.value().row(0);
  return x.tape->emit(std::move(out), {x, weight, bias}, [x, weight, bias](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(x)) t.accumulate(x, g * weight.value().transpose());
    if (t.requires_grad(weight)) t.accumulate(weight, x.value().transpose() * g);
    if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
  });
}

template <class T>
Var<T> linear(Var<T> x, Var<T> weight) {
  return matmul(x, weight);
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "add");
  Matrix<T> out = a.value() + b.value();
  return a.tape->emit(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "sub");
  Matrix<T> out = a.value() - b.value();
  return a.tape->emit(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "mul");
  Matrix<T> out = a.value().cwiseProduct(b.value());
  return a.tape->emit(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

template <class T>
Var<T> scale(Var<T> a, T s) {
  Matrix<T> out = a.value() * s;
  return a.tape->emit(std::move(out), {a}, [a, s](Tape<T>& t, const Matrix<T>& g) { t.accumulate(a, g * s); });
}

template <class T>
Var<T> add_row(Var<T> a, Var<T> row) {
  require_same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: bad row shape");
  Matrix<T> out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape->emit(std::move(out), {a, row}, [a, row](Tape<T>& t, const Matrix<T>& g) {
    t.accumulate(a, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

template <class T>
Var<T> mul_constant(Var<T> a, const Matrix<T>& c) {
  if (c.rows() != a.rows() || c.cols() != a.cols()) throw std::invalid_argument("mul_constant: shape mismatch");
  Matrix<T> out = a.value().cwiseProduct(c);
  auto held = std::make_shared<Matrix<T>>(c);
  return a.tape->emit(std::move(out), {a}, [a, held](Tape<T>& t, const Matrix<T>& g) {
    t.accumulate(a, g.cwiseProduct(*held));
  });
}

template <class T>
Var<T> gelu(Var<T> x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T c = T(0.044715);
  const auto& xv = x.value().array();
  Matrix<T> inner_tanh = (k * (xv + c * xv.cube())).tanh().matrix();
  Matrix<T> out = (T(0.5) * xv * (T(1) + inner_tanh.array())).matrix();
  auto th = std::make_shared<Matrix<T>>(std::move(inner_tanh));
  return x.tape->emit(std::move(out), {x}, [x, th, k, c](Tape<T>& t, const Matrix<T>& g) {
    const auto& xa = x.value().array();
    const auto& ta = th->array();
    auto d = T(0.5) * (T(1) + ta) + T(0.5) * xa * (T(1) - ta.square()) * k * (T(1) + T(3) * c * xa.square());
    t.accumulate(x, (g.array() * d).matrix());
  });
}

template <class T>
Var<T> silu(Var<T> x) {
  Matrix<T> sig = (T(1) / (T(1) + (-x.value().array()).exp())).matrix();
  Matrix<T> out = x.value().cwiseProduct(sig);
  auto s = std::make_shared<Matrix<T>>(std::move(sig));
  return x.tape->emit(std::move(out), {x}, [x, s](Tape<T>& t, const Matrix<T>& g) {
    const auto& sa = s->array();
    auto d = sa * (T(1) + x.value().array() * (T(1) - sa));
    t.accumulate(x, (g.array() * d).matrix());
  });
}

template <class T>
Var<T> exp(Var<T> x) {
  Matrix<T> out = x.value().array().exp().matrix();
  auto y = std::make_shared<Matrix<T>>(out);
  return x.tape->emit(std::move(out), {x}, [x, y](Tape<T>& t, const Matrix<T>& g) {
    t.accumulate(x, g.cwiseProduct(*y));
  });
}

template <class T>
Var<T> clamp(Var<T> x, T lo, T hi) {
  Matrix<T> out = x.value().cwiseMax(lo).cwiseMin(hi);
  return x.tape->emit(std::move(out), {x}, [x, lo, hi](Tape<T>& t, const Matrix<T>& g) {
    const auto& xa = x.value().array();
    t.accumulate(x, ((xa >= lo && xa <= hi).template cast<T>() * g.array()).matrix());
  });
}

namespace {

template <class T>
struct NormStats {
  Matrix<T> xhat;
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std;
};

template <class T>
std::shared_ptr<NormStats<T>> normalize_rows(const Matrix<T>& x, T eps) {
  auto st = std::make_shared<NormStats<T>>();
  const Eigen::Index n = x.cols();
  st->xhat.resize(x.rows(), n);
  st->inv_std.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mu = x.row(r).mean();
    auto centered = x.row(r).array() - mu;
    const T var = centered.square().sum() / static_cast<T>(n);
    const T inv = T(1) / std::sqrt(var + eps);
    st->inv_std[r] = inv;
    st->xhat.row(r) = (centered * inv).matrix();
  }
  return st;
}

// dx for y = xhat given upstream dxhat.
template <class T>
Matrix<T> normalize_backward(const NormStats<T>& st, const Matrix<T>& dxhat) {
  Matrix<T> dx(dxhat.rows(), dxhat.cols());
  const T inv_n = T(1) / static_cast<T>(dxhat.cols());
  for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
    const T m1 = dxhat.row(r).sum() * inv_n;
    const T m2 = dxhat.row(r).dot(st.xhat.row(r)) * inv_n;
    dx.row(r) = ((dxhat.row(r).array() - m1 - st.xhat.row(r).array() * m2) * st.inv_std[r]).matrix();
  }
  return dx;
}

}  // namespace

template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  require_same_tape(x, gamma);
  require_same_tape(x, beta);
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 || beta.cols() != x.cols())
    throw std::invalid_argument("layer_norm: bad affine shape");
  auto st = normalize_rows(x.value(), eps);
  Matrix<T> out = st->xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  return x.tape->emit(std::move(out), {x, gamma, beta}, [x, gamma, beta, st](Tape<T>& t, const Matrix<T>& g) {
    if (t.requires_grad(gamma)) t.accumulate(gamma, g.cwiseProduct(st->xhat).colwise().sum());
    if (t.requires_grad(beta)) t.accumulate(beta, g.colwise().sum());
    if (t.requires_grad(x)) {
      Matrix<T> dxhat = g.array().rowwise() * gamma.value().row(0).array();
      t.accumulate(x, normalize_backward(*st, dxhat));
    }
  });
}

template <class T>
Var<T> layer_norm(Var<T> x, T eps) {
  auto st = normalize_rows(x.value(), eps);
  Matrix<T> out = st->xhat;
  return x.tape->emit(std::move(out), {x}, [x, st](Tape<T>& t, const Matrix<T>& g) {
    t.accumulate(x, normalize_backward(*st, g));
  });
}

template <class T>
Var<T> modulate(Var<T> x, Var<T> scale_row, Var<T> shift_row) {
  require_same_tape(x, scale_row);
  require_same_tape(x, shift_row);
  if (scale_row.rows() != 1 || scale_row.cols() != x.cols() || shift_row.rows() != 1 ||
      shift_row.cols() != x.cols())
    throw std::invalid_argument("modulate: bad scale/shift shape");
  Matrix<T> out = x.value().array().rowwise() * (scale_row.value().row(0).array() + T(1));
  out.rowwise() += shift_row.value().row(0);
  return x.tape->emit(std::move(out), {x, scale_row, shift_row},
                      [x, scale_row, shift_row](Tape<T>& t, const Matrix<T>& g) {
                        if (t.requires_grad(x))
                          t.accumulate(x, (g.array().rowwise() * (scale_row.value().row(0).array() + T(1))).matrix());
                        if (t.requires_grad(scale_row))
                          t.accumulate(scale_row, g.cwiseProduct(x.value()).colwise().sum());
                        if (t.requires_grad(shift_row)) t.accumulate(shift_row, g.colwise().sum());
                      });
}

template <class T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, int heads, int groups) {
  require_same_tape(q, k);
  require_same_tape(q, v);
  const Eigen::Index width = q.cols();
  if (k.cols() != width || v.cols() != width) throw std::invalid_argument("attention: width mismatch");
  if (k.rows() != v.rows()) throw std::invalid_argument("attention: key/value row mismatch");
  if (heads < 1 || width % heads != 0) throw std::invalid_argument("attention: width not divisible by heads");
  if (groups < 1 || q.rows() % groups != 0 || k.rows() % groups != 0)
    throw std::invalid_argument("attention: rows not divisible by groups");
  const Eigen::Index dh = width / heads;
  const Eigen::Index sq = q.rows() / groups;
  const Eigen::Index sk = k.rows() / groups;
  const T sc = T(1) / std::sqrt(static_cast<T>(dh));

  const Matrix<T>& Q = q.value();
  const Matrix<T>& K = k.value();
  const Matrix<T>& V = v.value();
  Matrix<T> out(q.rows(), width);
  const bool keep = q.tape->recording();
  auto probs = std::make_shared<std::vector<Matrix<T>>>();
  if (keep) probs->reserve(static_cast<size_t>(groups * heads));

  Matrix<T> s(sq, sk);
  for (int gi = 0; gi < groups; ++gi) {
    for (int h = 0; h < heads; ++h) {
      const auto qb = Q.block(gi * sq, h * dh, sq, dh);
      const auto kb = K.block(gi * sk, h * dh, sk, dh);
      const auto vb = V.block(gi * sk, h * dh, sk, dh);
      s.noalias() = qb * kb.transpose();
      s *= sc;
      for (Eigen::Index r = 0; r < sq; ++r) {
        const T mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp().matrix();
        s.row(r) /= s.row(r).sum();
      }
      out.block(gi * sq, h * dh, sq, dh).noalias() = s * vb;
      if (keep) probs->push_back(s);
    }
  }

  return q.tape->emit(std::move(out), {q, k, v}, [q, k, v, heads, groups, dh, sq, sk, sc, probs](
                                                         Tape<T>& t, const Matrix<T>& g) {
    const Matrix<T>& Q = q.value();
    const Matrix<T>& K = k.value();
    const Matrix<T>& V = v.value();
    const bool gq = t.requires_grad(q), gk = t.requires_grad(k), gv = t.requires_grad(v);
    Matrix<T>* dQ = gq ? &t.grad_buffer(q) : nullptr;
    Matrix<T>* dK = gk ? &t.grad_buffer(k) : nullptr;
    Matrix<T>* dV = gv ? &t.grad_buffer(v) : nullptr;
    Matrix<T> dp(sq, sk);
    for (int gi = 0; gi < groups; ++gi) {
      for (int h = 0; h < heads; ++h) {
        const Matrix<T>& p = (*probs)[static_cast<size_t>(gi * heads + h)];
        const auto gb = g.block(gi * sq, h * dh, sq, dh);
        if (gv) dV->block(gi * sk, h * dh, sk, dh).noalias() += p.transpose() * gb;
        if (!gq && !gk) continue;
        dp.noalias() = gb * V.block(gi * sk, h * dh, sk, dh).transpose();
        for (Eigen::Index r = 0; r < sq; ++r) {
          const T dot = dp.row(r).dot(p.row(r));
          dp.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
        }
        dp *= sc;
        if (gq) dQ->block(gi * sq, h * dh, sq, dh).noalias() += dp * K.block(gi * sk, h * dh, sk, dh);
        if (gk) dK->block(gi * sk, h * dh, sk, dh).noalias() += dp.transpose() * Q.block(gi * sq, h * dh, sq, dh);
      }
    }
  });
}

template <class T>
Var<T> gather_rows(Var<T> x, std::vector<int> index) {
  const Matrix<T>& xv = x.value();
  Matrix<T> out(static_cast<Eigen::Index>(index.size()), xv.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= xv.rows()) throw std::invalid_argument("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = xv.row(index[i]);
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(index));
  return x.tape->emit(std::move(out), {x}, [x, idx](Tape<T>& t, const Matrix<T>& g) {
    Matrix<T>& dx = t.grad_buffer(x);
    for (size_t i = 0; i < idx->size(); ++i) dx.row((*idx)[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

template <class T>
Var<T> gather_elements(Var<T> x, Eigen::Index rows, Eigen::Index cols, std::vector<int> index) {
  if (static_cast<Eigen::Index>(index.size()) != rows * cols)
    throw std::invalid_argument("gather_elements: index count does not match output shape");
  const Matrix<T>& xv = x.value();
  Matrix<T> out(rows, cols);
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= xv.size()) throw std::invalid_argument("gather_elements: index out of range");
    out.data()[i] = xv.data()[index[i]];
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(index));
  return x.tape->emit(std::move(out), {x}, [x, idx](Tape<T>& t, const Matrix<T>& g) {
    Matrix<T>& dx = t.grad_buffer(x);
    for (size_t i = 0; i < idx->size(); ++i) dx.data()[(*idx)[i]] += g.data()[i];
  });
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const auto& p : parts) {
    require_same_tape(parts.front(), p);
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: width mismatch");
    rows += p.rows();
  }
  Matrix<T> out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    offsets.push_back(r);
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  auto ps = std::make_shared<std::vector<Var<T>>>(parts);
  return parts.front().tape->emit(std::move(out), parts, [ps, offsets](Tape<T>& t, const Matrix<T>& g) {
    for (size_t i = 0; i < ps->size(); ++i) {
      const Var<T>& p = (*ps)[i];
      if (t.requires_grad(p)) t.accumulate(p, g.middleRows(offsets[i], p.rows()));
    }
  });
}

template <class T>
Var<T> slice_rows(Var<T> x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.rows()) throw std::invalid_argument("slice_rows: out of range");
  Matrix<T> out = x.value().middleRows(begin, count);
  return x.tape->emit(std::move(out), {x}, [x, begin, count](Tape<T>& t, const Matrix<T>& g) {
    t.grad_buffer(x).middleRows(begin, count) += g;
  });
}

template <class T>
Var<T> repeat_row(Var<T> row, Eigen::Index count) {
  if (row.rows() != 1) throw std::invalid_argument("repeat_row: input must be a single row");
  Matrix<T> out = row.value().replicate(count, 1);
  return row.tape->emit(std::move(out), {row}, [row](Tape<T>& t, const Matrix<T>& g) {
    t.accumulate(row, g.colwise().sum());
  });
}

template <class T>
Var<T> sum(Var<T> x) {
  Matrix<T> out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape->emit(std::move(out), {x}, [x](Tape<T>& t, const Matrix<T>& g) {
    t.accumulate(x, Matrix<T>::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

template <class T>
Var<T> mean(Var<T> x) {
  return scale(sum(x), T(1) / static_cast<T>(x.value().size()));
}

template <class T>
Var<T> scalar_node(Tape<T>& tape, T value, std::vector<std::pair<Var<T>, Matrix<T>>> local_grads) {
  Matrix<T> out(1, 1);
  out(0, 0) = value;
  std::vector<Var<T>> inputs;
  for (const auto& [v, gm] : local_grads) {
    if (v.tape != &tape) throw std::invalid_argument("scalar_node: var on a different tape");
    if (gm.rows() != v.rows() || gm.cols() != v.cols())
      throw std::invalid_argument("scalar_node: gradient shape mismatch");
    inputs.push_back(v);
  }
  auto lg = std::make_shared<std::vector<std::pair<Var<T>, Matrix<T>>>>(std::move(local_grads));
  return tape.emit(std::move(out), inputs, [lg](Tape<T>& t, const Matrix<T>& g) {
    for (const auto& [v, gm] : *lg)
      if (t.requires_grad(v)) t.accumulate(v, gm * g(0, 0));
  });
}

#define MESHMOTION_INSTANTIATE_OPS(T)                                                          \
  template Var<T> matmul(Var<T>, Var<T>);                                                      \
  template Var<T> linear(Var<T>, Var<T>, Var<T>);                                              \
  template Var<T> linear(Var<T>, Var<T>);                                                      \
  template Var<T> add(Var<T>, Var<T>);                                                         \
  template Var<T> sub(Var<T>, Var<T>);                                                         \
  template Var<T> mul(Var<T>, Var<T>);                                                         \
  template Var<T> scale(Var<T>, T);                                                            \
  template Var<T> add_row(Var<T>, Var<T>);                                                     \
  template Var<T> mul_constant(Var<T>, const Matrix<T>&);                                      \
  template Var<T> gelu(Var<T>);                                                                \
  template Var<T> silu(Var<T>);                                                                \
  template Var<T> exp(Var<T>);                                                                 \
  template Var<T> clamp(Var<T>, T, T);                                                         \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                                       \
  template Var<T> layer_norm(Var<T>, T);                                                       \
  template Var<T> modulate(Var<T>, Var<T>, Var<T>);                                            \
  template Var<T> attention(Var<T>, Var<T>, Var<T>, int, int);                                 \
  template Var<T> gather_rows(Var<T>, std::vector<int>);                                       \
  template Var<T> gather_elements(Var<T>, Eigen::Index, Eigen::Index, std::vector<int>);       \
  template Var<T> concat_rows(const std::vector<Var<T>>&);                                     \
  template Var<T> slice_rows(Var<T>, Eigen::Index, Eigen::Index);                              \
  template Var<T> repeat_row(Var<T>, Eigen::Index);                                            \
  template Var<T> sum(Var<T>);                                                                 \
  template Var<T> mean(Var<T>);                                                                \
  template Var<T> scalar_node(Tape<T>&, T, std::vector<std::pair<Var<T>, Matrix<T>>>);

MESHMOTION_INSTANTIATE_OPS(float)
MESHMOTION_INSTANTIATE_OPS(double)

}  // namespace meshmotion::nn
