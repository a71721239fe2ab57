//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hbgsa/nn/graph.hpp"

// Differentiable primitives. Sequence tensors use a [length, channels] layout
// throughout; "x[C, L]" in the usual convolution notation corresponds to the
// transpose of what is passed here.
namespace hbgsa::nn {

template <class T>
Var add(Graph<T> &g, Var a, Var b);

template <class T>
Var scale(Graph<T> &g, Var a, T factor);

// Elementwise product of equal-shape tensors.
template <class T>
Var mul(Graph<T> &g, Var a, Var b);

template <class T>
Var sum(Graph<T> &g, Var a);

// a[M, K] * b[K, N]
template <class T>
Var matmul(Graph<T> &g, Var a, Var b);

// a[M, K] * b[N, K]^T
template <class T>
Var matmul_nt(Graph<T> &g, Var a, Var b);

// y = x W + b over the last dimension of x. `bias` may be an invalid Var.
// x: [..., in], weight: [in, out], bias: [out].
template <class T>
Var linear(Graph<T> &g, Var x, Var weight, Var bias);

// Same-length 1-D cross-correlation with zero padding.
// x: [L, C_in], kernels: [C_out, C_in, K] with K odd, bias: [C_out] or
// invalid. Output [L, C_out]; tap k reads position t + (k - (K-1)/2) *
// dilation.
template <class T>
Var conv1d(Graph<T> &g, Var x, Var kernels, Var bias, int dilation);

// Per-row normalization over the last dimension (population variance).
template <class T>
Var layer_norm(Graph<T> &g, Var x, Var gamma, Var beta, T eps = T(1e-5));

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <class T>
Var gelu(Graph<T> &g, Var x);

template <class T>
Var relu(Graph<T> &g, Var x);

// slope: single-element trainable tensor.
template <class T>
Var prelu(Graph<T> &g, Var x, Var slope);

// Row-wise softmax over the last dimension, max-subtracted.
template <class T>
Var softmax_rows(Graph<T> &g, Var x);

// Inverted dropout: survivors are scaled by 1/(1-p). With p == 0 this is
// the identity and no mask is drawn.
template <class T>
Var dropout(Graph<T> &g, Var x, double p, std::mt19937_64 &rng);

// x: [L, C] -> [C], per-channel maximum. Gradient goes to the first
// (lowest-index) maximizing position. A nonzero `rows` restricts the
// maximum to the leading rows.
template <class T>
Var adaptive_max_pool(Graph<T> &g, Var x, std::size_t rows = 0);

// table: [V, D]; returns [indices.size(), D].
template <class T>
Var embedding(Graph<T> &g, Var table, std::span<const std::int32_t> indices);

// Concatenates rank-1 tensors.
template <class T>
Var concat(Graph<T> &g, std::span<const Var> parts);

// Stacks single-element tensors into a vector.
template <class T>
Var stack(Graph<T> &g, std::span<const Var> scalars);

// out[i] = sum over j in neighbors[i] of h[j], summed in list order.
// This is A * H for a binary adjacency A given as neighbor lists.
template <class T>
Var neighbor_sum(Graph<T> &g, Var h,
                 const std::vector<std::vector<int>> &neighbors);

// Single-head self-attention with residual:
// softmax((x Wq)(x Wk)^T / sqrt(D)) (x Wv) + x.
template <class T>
Var self_attention_1d(Graph<T> &g, Var x, Var wq, Var wk, Var wv);

}  // namespace hbgsa::nn
