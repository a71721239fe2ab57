//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>
#include <string>
#include <vector>

#include "hbgsa/nn/graph.hpp"

namespace hbgsa {

// Differentiable losses over prediction/target vectors of equal length.

// mean of 0.5 e^2 (|e| <= 1) or |e| - 0.5, e = target - pred.
template <class T>
nn::Var smooth_l1(nn::Graph<T> &g, nn::Var pred, nn::Var target);

// 1 - r over the vector. When either side's centered norm is below 1e-8
// the correlation is taken as 0 (loss 1) and no gradient flows.
template <class T>
nn::Var pearson_loss(nn::Graph<T> &g, nn::Var pred, nn::Var target);

struct LossVars {
  nn::Var total;
  nn::Var reg;
  nn::Var pearson;
};

template <class T>
LossVars hybrid_loss(nn::Graph<T> &g, nn::Var pred, nn::Var target, T lambda);

struct LossBreakdown {
  double total = 0.0;
  double reg = 0.0;
  double pearson = 0.0;
  double lambda = 0.0;
};

// Loss values with the gradient with respect to each prediction, computed
// without a tape. d_pred has the length of pred.
struct LossWithGrad {
  LossBreakdown loss;
  std::vector<double> d_pred;
};

LossWithGrad hybrid_loss_grad(std::span<const double> pred,
                              std::span<const double> target, double lambda);

// Metrics, all reduced in double precision.
double rmse(std::span<const double> pred, std::span<const double> target);
double mae(std::span<const double> pred, std::span<const double> target);
// Zero-variance input yields 0.
double pearson_r(std::span<const double> pred, std::span<const double> target);
// Pairs with target_i > target_j; prediction ties count 0.5 unless strict.
// Throws NumericError when all targets are equal.
double concordance_index(std::span<const double> pred,
                         std::span<const double> target, bool strict = false);

struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  double pearson_r = 0.0;
  double ci = 0.0;
  std::size_t n = 0;

  std::string to_json() const;
  static MetricsReport from_json(const std::string &text);
};

MetricsReport evaluate_metrics(std::span<const double> pred,
                               std::span<const double> target,
                               bool strict_ci = false);

}  // namespace hbgsa
