//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hbgsa/error.hpp"
#include "hbgsa/model/hbond_gnn.hpp"
#include "hbgsa/nn/grad_check.hpp"
#include "hbgsa/nn/ops.hpp"
#include "oracles.hpp"

namespace hbgsa {
namespace {

using nn::Graph;
using nn::Tensor;
using nn::Var;

using Points = std::vector<std::array<double, 3>>;

Tensor<double> random_hbonds(std::mt19937_64 &rng, std::size_t n_real,
                             std::size_t n_total = 20) {
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  Tensor<double> t({ n_total, 9 });
  for (std::size_t i = 0; i < n_real; ++i)
    for (std::size_t c = 0; c < 9; ++c)
      t.at(i, c) = u(rng);
  return t;
}

TEST(Knn, CollinearNearest) {
  const Points pts { { 0, 0, 0 }, { 1, 0, 0 }, { 3, 0, 0 }, { 7, 0, 0 } };
  const auto lists = knn_graph(pts, { .k = 1 });
  EXPECT_EQ(lists, (NeighborLists { { 1 }, { 0 }, { 1 }, { 2 } }));
  const auto a = adjacency_matrix(lists);
  EXPECT_EQ(a[2], (std::vector<int> { 0, 1, 0, 0 }));
}

TEST(Knn, AllCoincidentBreaksTiesByIndex) {
  const Points pts(20, { 0, 0, 0 });
  const auto lists = knn_graph(pts, { .k = 5 });
  EXPECT_EQ(lists[0], (std::vector<int> { 1, 2, 3, 4, 5 }));
  EXPECT_EQ(lists[7], (std::vector<int> { 0, 1, 2, 3, 4 }));
}

TEST(Knn, RejectsBadK) {
  const Points pts(4, { 0, 0, 0 });
  EXPECT_THROW(knn_graph(pts, { .k = 0 }), ConfigError);
  EXPECT_THROW(knn_graph(pts, { .k = 4 }), ConfigError);
  EXPECT_NO_THROW(knn_graph(pts, { .k = 3 }));
}

TEST(Knn, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-5, 5);
    const std::size_t n = 6 + rng() % 30;
    Points pts(n);
    for (auto &p: pts)
      p = { u(rng), u(rng), u(rng) };
    const int k = 1 + static_cast<int>(rng() % 5);
    EXPECT_EQ(knn_graph(pts, { .k = k }), testing_oracles::brute_force_knn(pts, k))
        << "seed " << seed;
  }
}

TEST(Knn, MaskExcludesPaddedRows) {
  const Points pts { { 0, 0, 0 }, { 2, 0, 0 }, { 5, 0, 0 }, { 0, 0, 0 }, { 0, 0, 0 } };
  const auto lists = knn_graph(pts, { .k = 2, .mask_padded = true }, 3);
  EXPECT_EQ(lists[0], (std::vector<int> { 1, 2 }));
  EXPECT_TRUE(lists[3].empty());
  EXPECT_TRUE(lists[4].empty());
}

TEST(Knn, SymmetrizeAddsReverseEdges) {
  const Points pts { { 0, 0, 0 }, { 1, 0, 0 }, { 3, 0, 0 }, { 7, 0, 0 } };
  const auto lists = knn_graph(pts, { .k = 1, .symmetrize = true });
  const auto a = adjacency_matrix(lists);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_EQ(a[i][j], a[j][i]);
  EXPECT_EQ(lists[1], (std::vector<int> { 0, 2 }));
}

TEST(HBondGnn, ParameterCount) {
  nn::ParamStore<float> ps;
  std::mt19937_64 rng(0);
  add_hbond_gnn_params(ps, HBondGnnConfig {}, rng);
  EXPECT_EQ(ps.element_count(), 34816u);
}

TEST(HBondGnn, EmbedZeroRowGivesBias) {
  nn::ParamStore<double> ps;
  std::mt19937_64 rng(1);
  add_hbond_gnn_params(ps, HBondGnnConfig {}, rng);
  Graph<double> g;
  Var h = embed_nodes(g, g.constant(Tensor<double>({ 2, 9 })), ps);
  const auto &b = ps.get("hb.embed.b").value;
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 128; ++c)
      EXPECT_EQ(g.value(h).at(r, c), b[c]);
}

TEST(HBondGnn, EmbedIdentityWeights) {
  nn::ParamStore<double> ps;
  std::mt19937_64 rng(1);
  add_hbond_gnn_params(ps, HBondGnnConfig {}, rng);
  auto &w = ps.get("hb.embed.w").value;
  std::fill(w.values().begin(), w.values().end(), 0.0);
  for (std::size_t i = 0; i < 9; ++i)
    w.at(i, i) = 1.0;
  std::fill(ps.get("hb.embed.b").value.values().begin(),
            ps.get("hb.embed.b").value.values().end(), 0.0);
  Tensor<double> x({ 1, 9 });
  std::iota(x.values().begin(), x.values().end(), 1.0);
  Graph<double> g;
  Var h = embed_nodes(g, g.constant(x), ps);
  for (std::size_t c = 0; c < 128; ++c)
    EXPECT_EQ(g.value(h).at(0, c), c < 9 ? static_cast<double>(c + 1) : 0.0);
}

TEST(HBondGnn, OutputIs128Vector) {
  nn::ParamStore<float> ps;
  std::mt19937_64 rng(2);
  add_hbond_gnn_params(ps, HBondGnnConfig {}, rng);
  Graph<float> g(false);
  std::mt19937_64 data(5);
  Var s = gcn_forward(g, random_hbonds(data, 7).cast<float>(), ps, HBondGnnConfig {});
  EXPECT_EQ(g.shape(s), (nn::Shape { 128 }));
}

TEST(HBondGnn, AllPaddedInputIsFinite) {
  nn::ParamStore<double> ps;
  std::mt19937_64 rng(2);
  add_hbond_gnn_params(ps, HBondGnnConfig {}, rng);
  Graph<double> g(false);
  for (bool mask: { false, true }) {
    HBondGnnConfig cfg;
    cfg.knn.mask_padded = mask;
    Var s = gcn_forward(g, Tensor<double>({ 20, 9 }), ps, cfg);
    for (double v: g.value(s).values())
      EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(HBondGnn, RowPermutationInvariantBitwise) {
  nn::ParamStore<float> ps;
  std::mt19937_64 rng(3);
  add_hbond_gnn_params(ps, HBondGnnConfig {}, rng);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 data(seed);
    const Tensor<float> x = random_hbonds(data, 20).cast<float>();
    std::vector<std::size_t> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), data);
    Tensor<float> xp(x.shape());
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t c = 0; c < 9; ++c)
        xp.at(i, c) = x.at(perm[i], c);
    Graph<float> g(false);
    const Tensor<float> a = g.value(gcn_forward(g, x, ps, HBondGnnConfig {}));
    const Tensor<float> b = g.value(gcn_forward(g, xp, ps, HBondGnnConfig {}));
    for (std::size_t c = 0; c < 128; ++c)
      EXPECT_EQ(a[c], b[c]) << "seed " << seed << " col " << c;
  }
}

TEST(HBondGnn, MaskIgnoresPaddedRows) {
  nn::ParamStore<double> ps;
  std::mt19937_64 rng(4);
  add_hbond_gnn_params(ps, HBondGnnConfig {}, rng);
  std::mt19937_64 data(8);
  const Tensor<double> x = random_hbonds(data, 6, 20);
  Tensor<double> compact({ 6, 9 });
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 9; ++c)
      compact.at(i, c) = x.at(i, c);
  HBondGnnConfig cfg;
  cfg.knn.k = 5;
  cfg.knn.mask_padded = true;
  Graph<double> g(false);
  const Tensor<double> padded = g.value(gcn_forward(g, x, ps, cfg));
  const Tensor<double> direct = g.value(gcn_forward(g, compact, ps, cfg));
  for (std::size_t c = 0; c < 128; ++c)
    EXPECT_NEAR(padded[c], direct[c], 1e-12);
}

TEST(HBondGnn, GradientMatchesFiniteDifferences) {
  for (bool normalize: { false, true }) {
    nn::ParamStore<double> ps;
    std::mt19937_64 rng(6);
    HBondGnnConfig cfg;
    cfg.hidden = 16;
    cfg.normalize = normalize;
    add_hbond_gnn_params(ps, cfg, rng);
    std::mt19937_64 data(7);
    const Tensor<double> x = random_hbonds(data, 12);
    std::mt19937_64 wr(9);
    Tensor<double> w({ 16 });
    std::normal_distribution<double> d;
    for (auto &v: w.values())
      v = d(wr);
    const auto report = nn::grad_check(
        [&](Graph<double> &g) {
          Var s = gcn_forward(g, x, ps, cfg);
          return nn::sum(g, nn::mul(g, s, g.constant(w)));
        },
        ps);
    EXPECT_LT(report.max_rel_error, 1e-5)
        << report.worst_param << "[" << report.worst_index << "]";
  }
}

}  // namespace
}  // namespace hbgsa
