#pragma once

#include <utility>
#include <vector>

#include "meshmotion/nn/tape.hpp"

namespace meshmotion::nn {

// Differentiable ops on 2-D matrices. All inputs must live on the same tape.
// Instantiated for float and double.

template <class T> Var<T> matmul(Var<T> a, Var<T> b);
/// x·W + b, with W stored in×out and b as 1×out.
template <class T> Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias);
template <class T> Var<T> linear(Var<T> x, Var<T> weight);

template <class T> Var<T> add(Var<T> a, Var<T> b);
template <class T> Var<T> sub(Var<T> a, Var<T> b);
template <class T> Var<T> mul(Var<T> a, Var<T> b);
template <class T> Var<T> scale(Var<T> a, T s);
/// Adds a 1×C row to every row of `a`.
template <class T> Var<T> add_row(Var<T> a, Var<T> row);
/// Elementwise product with a constant matrix of the same shape.
template <class T> Var<T> mul_constant(Var<T> a, const Matrix<T>& c);

template <class T> Var<T> gelu(Var<T> x);
template <class T> Var<T> silu(Var<T> x);
template <class T> Var<T> exp(Var<T> x);
/// Clamps to [lo, hi]; the gradient is zero outside the interval.
template <class T> Var<T> clamp(Var<T> x, T lo, T hi);

/// Per-row normalization; gamma and beta are 1×C.
template <class T> Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5));
/// Per-row normalization without affine parameters.
template <class T> Var<T> layer_norm(Var<T> x, T eps = T(1e-5));
/// x ⊙ (1 + scale) + shift with 1×C scale/shift broadcast over rows.
template <class T> Var<T> modulate(Var<T> x, Var<T> scale, Var<T> shift);

/// Grouped multi-head scaled dot-product attention. Rows of q split into
/// `groups` equal blocks, as do rows of k and v; block g of q attends only to
/// block g of k/v. Columns split evenly into `heads`.
template <class T> Var<T> attention(Var<T> q, Var<T> k, Var<T> v, int heads, int groups = 1);

/// out.row(i) = x.row(index[i]).
template <class T> Var<T> gather_rows(Var<T> x, std::vector<int> index);
/// Flat (row-major) element gather: out has shape rows×cols, out[i] = x[index[i]].
template <class T> Var<T> gather_elements(Var<T> x, Eigen::Index rows, Eigen::Index cols,
                                          std::vector<int> index);
template <class T> Var<T> concat_rows(const std::vector<Var<T>>& parts);
template <class T> Var<T> slice_rows(Var<T> x, Eigen::Index begin, Eigen::Index count);
/// Stacks a 1×C row `count` times.
template <class T> Var<T> repeat_row(Var<T> row, Eigen::Index count);

template <class T> Var<T> sum(Var<T> x);
template <class T> Var<T> mean(Var<T> x);

/// A 1×1 node with a precomputed value and local gradients d(value)/d(input).
template <class T> Var<T> scalar_node(Tape<T>& tape, T value,
                                      std::vector<std::pair<Var<T>, Matrix<T>>> local_grads);

}  // namespace meshmotion::nn
