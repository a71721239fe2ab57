//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "hbgsa/error.hpp"
#include "hbgsa/nn/ops.hpp"

namespace hbgsa {
namespace {

constexpr double kCorrEps = 1e-8;

void check_pair(std::size_t a, std::size_t b, std::size_t min_len,
                const char *what) {
  if (a != b)
    throw ShapeError(std::string(what) + ": prediction length "
                     + std::to_string(a) + " != target length "
                     + std::to_string(b));
  if (a < min_len)
    throw DataError(std::string(what) + ": needs at least "
                    + std::to_string(min_len) + " samples, got "
                    + std::to_string(a));
}

template <class T>
std::size_t vector_len(const nn::Graph<T> &g, nn::Var v, const char *what) {
  const auto &t = g.value(v);
  if (t.rank() != 1)
    throw ShapeError(std::string(what) + ": expected a vector, got "
                     + nn::shape_str(t.shape()));
  return t.size();
}

double huber(double e) {
  const double a = std::abs(e);
  return a <= 1.0 ? 0.5 * e * e : a - 0.5;
}

double huber_slope(double e) { return std::clamp(e, -1.0, 1.0); }

// Centered copies and norms shared by the Pearson value and gradient.
struct Corr {
  std::vector<double> ca, cb;
  double na = 0.0, nb = 0.0, r = 0.0;
  bool degenerate = true;
};

template <class A, class B>
Corr correlate(const A &a, const B &b, std::size_t n) {
  Corr c;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += static_cast<double>(a[i]);
    mb += static_cast<double>(b[i]);
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  c.ca.resize(n);
  c.cb.resize(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c.ca[i] = static_cast<double>(a[i]) - ma;
    c.cb[i] = static_cast<double>(b[i]) - mb;
    sab += c.ca[i] * c.cb[i];
    saa += c.ca[i] * c.ca[i];
    sbb += c.cb[i] * c.cb[i];
  }
  c.na = std::sqrt(saa);
  c.nb = std::sqrt(sbb);
  if (c.na < kCorrEps || c.nb < kCorrEps)
    return c;
  c.degenerate = false;
  c.r = std::clamp(sab / (c.na * c.nb), -1.0, 1.0);
  return c;
}

}  // namespace

template <class T>
nn::Var smooth_l1(nn::Graph<T> &g, nn::Var pred, nn::Var target) {
  const std::size_t n = vector_len(g, pred, "smooth_l1");
  check_pair(n, vector_len(g, target, "smooth_l1"), 1, "smooth_l1");
  const auto &p = g.value(pred);
  const auto &y = g.value(target);
  std::vector<double> slope(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = static_cast<double>(y[i]) - static_cast<double>(p[i]);
    total += huber(e);
    slope[i] = huber_slope(e) / static_cast<double>(n);
  }
  return g.emplace(
      nn::Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(n))),
      { pred, target },
      [pred, target, slope = std::move(slope)](nn::Graph<T> &gr, nn::Var self) {
        const T up = gr.grad(self)[0];
        if (gr.requires_grad(pred)) {
          auto &gp = gr.grad(pred);
          for (std::size_t i = 0; i < slope.size(); ++i)
            gp[i] -= up * static_cast<T>(slope[i]);
        }
        if (gr.requires_grad(target)) {
          auto &gt = gr.grad(target);
          for (std::size_t i = 0; i < slope.size(); ++i)
            gt[i] += up * static_cast<T>(slope[i]);
        }
      });
}

template <class T>
nn::Var pearson_loss(nn::Graph<T> &g, nn::Var pred, nn::Var target) {
  const std::size_t n = vector_len(g, pred, "pearson_loss");
  check_pair(n, vector_len(g, target, "pearson_loss"), 2, "pearson_loss");
  Corr c = correlate(g.value(pred), g.value(target), n);
  const double value = 1.0 - c.r;
  return g.emplace(
      nn::Tensor<T>::scalar(static_cast<T>(value)), { pred, target },
      [pred, target, c = std::move(c)](nn::Graph<T> &gr, nn::Var self) {
        if (c.degenerate)
          return;
        const double up = static_cast<double>(gr.grad(self)[0]);
        const double nab = c.na * c.nb;
        // d(1 - r)/da_i = -(cb_i / (na nb) - r ca_i / na^2)
        if (gr.requires_grad(pred)) {
          auto &gp = gr.grad(pred);
          for (std::size_t i = 0; i < c.ca.size(); ++i)
            gp[i] += static_cast<T>(
                -up * (c.cb[i] / nab - c.r * c.ca[i] / (c.na * c.na)));
        }
        if (gr.requires_grad(target)) {
          auto &gt = gr.grad(target);
          for (std::size_t i = 0; i < c.cb.size(); ++i)
            gt[i] += static_cast<T>(
                -up * (c.ca[i] / nab - c.r * c.cb[i] / (c.nb * c.nb)));
        }
      });
}

template <class T>
LossVars hybrid_loss(nn::Graph<T> &g, nn::Var pred, nn::Var target, T lambda) {
  LossVars out;
  out.reg = smooth_l1(g, pred, target);
  out.pearson = pearson_loss(g, pred, target);
  out.total = nn::add(g, out.reg, nn::scale(g, out.pearson, lambda));
  return out;
}

LossWithGrad hybrid_loss_grad(std::span<const double> pred,
                              std::span<const double> target, double lambda) {
  check_pair(pred.size(), target.size(), 2, "hybrid_loss");
  const std::size_t n = pred.size();
  LossWithGrad out;
  out.loss.lambda = lambda;
  out.d_pred.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = target[i] - pred[i];
    out.loss.reg += huber(e);
    out.d_pred[i] = -huber_slope(e) / static_cast<double>(n);
  }
  out.loss.reg /= static_cast<double>(n);
  const Corr c = correlate(pred, target, n);
  out.loss.pearson = 1.0 - c.r;
  if (!c.degenerate)
    for (std::size_t i = 0; i < n; ++i)
      out.d_pred[i] -= lambda
                       * (c.cb[i] / (c.na * c.nb) - c.r * c.ca[i] / (c.na * c.na));
  out.loss.total = out.loss.reg + lambda * out.loss.pearson;
  return out;
}

double rmse(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred.size(), target.size(), 1, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred.size(), target.size(), 1, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

double pearson_r(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred.size(), target.size(), 2, "pearson_r");
  return correlate(pred, target, pred.size()).r;
}

double concordance_index(std::span<const double> pred,
                         std::span<const double> target, bool strict) {
  check_pair(pred.size(), target.size(), 2, "concordance_index");
  const std::size_t n = pred.size();

  // Dense ranks of the predictions for a Fenwick tree of counts.
  std::vector<double> levels(pred.begin(), pred.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i)
    rank[i] = static_cast<std::size_t>(
                  std::lower_bound(levels.begin(), levels.end(), pred[i])
                  - levels.begin())
              + 1;
  std::vector<std::uint64_t> tree(levels.size() + 1, 0);
  auto add = [&](std::size_t r) {
    for (; r < tree.size(); r += r & (~r + 1))
      ++tree[r];
  };
  auto prefix = [&](std::size_t r) {
    std::uint64_t s = 0;
    for (; r > 0; r -= r & (~r + 1))
      s += tree[r];
    return s;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return target[a] < target[b];
  });

  // Walk targets in ascending order; everything already in the tree has a
  // strictly smaller target than the current group.
  double concordant = 0.0, ties = 0.0, pairs = 0.0;
  std::size_t inserted = 0;
  for (std::size_t g0 = 0; g0 < n;) {
    std::size_t g1 = g0;
    while (g1 < n && target[order[g1]] == target[order[g0]])
      ++g1;
    for (std::size_t t = g0; t < g1; ++t) {
      const std::size_t r = rank[order[t]];
      const std::uint64_t below = prefix(r - 1);
      const std::uint64_t equal = prefix(r) - below;
      concordant += static_cast<double>(below);
      ties += static_cast<double>(equal);
      pairs += static_cast<double>(inserted);
    }
    for (std::size_t t = g0; t < g1; ++t)
      add(rank[order[t]]);
    inserted += g1 - g0;
    g0 = g1;
  }
  if (pairs == 0.0)
    throw NumericError("concordance_index: no comparable pairs (all targets equal)");
  return (concordant + (strict ? 0.0 : 0.5 * ties)) / pairs;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["rmse"] = rmse;
  j["mae"] = mae;
  j["pearson_r"] = pearson_r;
  j["ci"] = ci;
  j["n"] = n;
  return j.dump();
}

MetricsReport MetricsReport::from_json(const std::string &text) {
  try {
    const auto j = nlohmann::json::parse(text);
    // to_json writes NaN (an undefined metric) as null.
    auto num = [&](const char *key) {
      const auto &v = j.at(key);
      return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    MetricsReport m;
    m.rmse = num("rmse");
    m.mae = num("mae");
    m.pearson_r = num("pearson_r");
    m.ci = num("ci");
    m.n = j.at("n").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("invalid metrics JSON: ") + e.what());
  }
}

MetricsReport evaluate_metrics(std::span<const double> pred,
                               std::span<const double> target, bool strict_ci) {
  MetricsReport m;
  m.n = pred.size();
  m.rmse = rmse(pred, target);
  m.mae = mae(pred, target);
  m.pearson_r = pearson_r(pred, target);
  m.ci = concordance_index(pred, target, strict_ci);
  return m;
}

#define HBGSA_INSTANTIATE_OBJECTIVE(T)                                       \
  template nn::Var smooth_l1<T>(nn::Graph<T> &, nn::Var, nn::Var);           \
  template nn::Var pearson_loss<T>(nn::Graph<T> &, nn::Var, nn::Var);        \
  template LossVars hybrid_loss<T>(nn::Graph<T> &, nn::Var, nn::Var, T);

HBGSA_INSTANTIATE_OBJECTIVE(float)
HBGSA_INSTANTIATE_OBJECTIVE(double)

}  // namespace hbgsa
