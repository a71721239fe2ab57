//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/model/hbond_gnn.hpp"

#include <algorithm>
#include <tuple>

#include "hbgsa/error.hpp"
#include "hbgsa/nn/ops.hpp"

namespace hbgsa {
namespace {

double dist2(const std::array<double, 3> &a, const std::array<double, 3> &b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

NeighborLists knn_graph(const std::vector<std::array<double, 3>> &points,
                        const KnnOptions &options, int n_real) {
  const int n = static_cast<int>(points.size());
  if (options.k < 1 || options.k > n - 1)
    throw ConfigError("knn_graph: k = " + std::to_string(options.k)
                      + " outside [1, " + std::to_string(n - 1) + "]");
  const int limit = (options.mask_padded && n_real >= 0) ? std::min(n_real, n) : n;

  NeighborLists out(static_cast<std::size_t>(n));
  std::vector<std::pair<double, int>> cand;
  for (int i = 0; i < limit; ++i) {
    cand.clear();
    for (int j = 0; j < limit; ++j)
      if (j != i)
        cand.emplace_back(dist2(points[i], points[j]), j);
    const auto take = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(options.k));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
    for (std::size_t t = 0; t < take; ++t)
      out[i].push_back(cand[t].second);
  }

  if (options.symmetrize) {
    NeighborLists sym = out;
    for (int i = 0; i < n; ++i)
      for (int j: out[i])
        if (std::find(sym[j].begin(), sym[j].end(), i) == sym[j].end())
          sym[j].push_back(i);
    for (int i = 0; i < n; ++i)
      std::sort(sym[i].begin(), sym[i].end(), [&](int a, int b) {
        return std::make_pair(dist2(points[i], points[a]), a)
               < std::make_pair(dist2(points[i], points[b]), b);
      });
    out = std::move(sym);
  }
  return out;
}

std::vector<std::vector<int>> adjacency_matrix(const NeighborLists &lists) {
  const std::size_t n = lists.size();
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (int j: lists[i])
      a[i][static_cast<std::size_t>(j)] = 1;
  return a;
}

template <class T>
std::vector<std::array<double, 3>> midpoints_of(const nn::Tensor<T> &hbond) {
  if (hbond.rank() != 2 || hbond.cols() != 9)
    throw ShapeError("hydrogen-bond features must be [n, 9], got "
                     + nn::shape_str(hbond.shape()));
  std::vector<std::array<double, 3>> m(hbond.rows());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k)
      m[i][k] = static_cast<double>(hbond.at(i, 6 + k));
  return m;
}

template <class T>
int count_real_rows(const nn::Tensor<T> &hbond) {
  int n = 0;
  for (std::size_t i = 0; i < hbond.rows(); ++i) {
    bool any = false;
    for (std::size_t c = 0; c < hbond.cols(); ++c)
      any = any || hbond.at(i, c) != T(0);
    if (!any)
      break;
    ++n;
  }
  return n;
}

template <class T>
void add_hbond_gnn_params(nn::ParamStore<T> &params, const HBondGnnConfig &cfg,
                          std::mt19937_64 &rng) {
  const auto in = static_cast<std::size_t>(cfg.in_dim);
  const auto h = static_cast<std::size_t>(cfg.hidden);
  params.add_fan_in_uniform("hb.embed.w", { in, h }, in, rng);
  params.add_fan_in_uniform("hb.embed.b", { h }, in, rng);
  for (const char *layer: { "hb.gcn1", "hb.gcn2" }) {
    const std::string p = layer;
    params.add_fan_in_uniform(p + ".w", { h, h }, h, rng);
    params.add_fan_in_uniform(p + ".b", { h }, h, rng);
    params.add_constant(p + ".ln.gamma", { h }, T(1));
    params.add_constant(p + ".ln.beta", { h }, T(0));
  }
}

template <class T>
nn::Var embed_nodes(nn::Graph<T> &g, nn::Var x, nn::ParamStore<T> &params) {
  return nn::linear(g, x, g.param(params.get("hb.embed.w")),
                    g.param(params.get("hb.embed.b")));
}

template <class T>
nn::Var gcn_forward(nn::Graph<T> &g, const nn::Tensor<T> &hbond,
                    nn::ParamStore<T> &params, const HBondGnnConfig &cfg) {
  const int n_real = count_real_rows(hbond);
  const NeighborLists lists = knn_graph(midpoints_of(hbond), cfg.knn, n_real);

  auto aggregate = [&](nn::Var h) {
    nn::Var a = nn::neighbor_sum(g, h, lists);
    if (!cfg.normalize)
      return a;
    nn::Tensor<T> w(g.shape(a));
    for (std::size_t i = 0; i < lists.size(); ++i) {
      const T s = lists[i].empty() ? T(0) : T(1) / static_cast<T>(lists[i].size());
      for (std::size_t c = 0; c < w.cols(); ++c)
        w.at(i, c) = s;
    }
    return nn::mul(g, a, g.constant(std::move(w)));
  };
  auto layer = [&](const std::string &p, nn::Var h) {
    nn::Var z = nn::linear(g, aggregate(h), g.param(params.get(p + ".w")),
                           g.param(params.get(p + ".b")));
    return nn::layer_norm(g, z, g.param(params.get(p + ".ln.gamma")),
                          g.param(params.get(p + ".ln.beta")));
  };

  nn::Var h0 = embed_nodes(g, g.constant(hbond), params);
  nn::Var h1 = nn::gelu(g, layer("hb.gcn1", h0));
  nn::Var h2 = nn::gelu(g, nn::add(g, h1, layer("hb.gcn2", h1)));

  const bool masked = cfg.knn.mask_padded && n_real > 0;
  return nn::adaptive_max_pool(g, h2, masked ? static_cast<std::size_t>(n_real) : 0);
}

#define HBGSA_INSTANTIATE_GNN(T)                                                  \
  template std::vector<std::array<double, 3>> midpoints_of<T>(const nn::Tensor<T> &); \
  template int count_real_rows<T>(const nn::Tensor<T> &);                         \
  template void add_hbond_gnn_params<T>(nn::ParamStore<T> &,                      \
                                        const HBondGnnConfig &, std::mt19937_64 &); \
  template nn::Var embed_nodes<T>(nn::Graph<T> &, nn::Var, nn::ParamStore<T> &);  \
  template nn::Var gcn_forward<T>(nn::Graph<T> &, const nn::Tensor<T> &,          \
                                  nn::ParamStore<T> &, const HBondGnnConfig &);

HBGSA_INSTANTIATE_GNN(float)
HBGSA_INSTANTIATE_GNN(double)

}  // namespace hbgsa
