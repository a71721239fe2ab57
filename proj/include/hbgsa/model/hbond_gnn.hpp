//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <random>
#include <vector>

#include "hbgsa/nn/graph.hpp"
#include "hbgsa/nn/param_store.hpp"

namespace hbgsa {

using NeighborLists = std::vector<std::vector<int>>;

struct KnnOptions {
  int k = 5;
  // Rows at index >= n_real neither pick nor get picked as neighbours and
  // are left out of pooling.
  bool mask_padded = false;
  // Adds j->i whenever i->j exists.
  bool symmetrize = false;
};

// Directed k nearest neighbours by Euclidean distance, no self loops, ties
// broken by the smaller index. Each list is ordered by (distance, index).
// Throws ConfigError unless 1 <= k <= n - 1. n_real < 0 means all rows are
// real.
NeighborLists knn_graph(const std::vector<std::array<double, 3>> &points,
                        const KnnOptions &options = {}, int n_real = -1);

// Dense 0/1 adjacency for inspection and tests.
std::vector<std::vector<int>> adjacency_matrix(const NeighborLists &lists);

// Midpoint columns (6..8) of a [n, 9] feature matrix.
template <class T>
std::vector<std::array<double, 3>> midpoints_of(const nn::Tensor<T> &hbond);

// Leading rows that are not all zero; real bond rows are never all zero
// because their two endpoints differ.
template <class T>
int count_real_rows(const nn::Tensor<T> &hbond);

struct HBondGnnConfig {
  int in_dim = 9;
  int hidden = 128;
  KnnOptions knn;
  // Scale A*H by 1/deg(i).
  bool normalize = false;
};

template <class T>
void add_hbond_gnn_params(nn::ParamStore<T> &params, const HBondGnnConfig &cfg,
                          std::mt19937_64 &rng);

// Row-wise Linear(9 -> hidden).
template <class T>
nn::Var embed_nodes(nn::Graph<T> &g, nn::Var x, nn::ParamStore<T> &params);

// H1 = GELU(LN(Linear(A H0))), H2 = GELU(H1 + LN(Linear(A H1))), then a
// column-wise max over the (unmasked) rows. `hbond` is the [n, 9] input.
template <class T>
nn::Var gcn_forward(nn::Graph<T> &g, const nn::Tensor<T> &hbond,
                    nn::ParamStore<T> &params, const HBondGnnConfig &cfg);

}  // namespace hbgsa
