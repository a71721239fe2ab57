//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "hbgsa/nn/graph.hpp"
#include "hbgsa/nn/param_store.hpp"

namespace hbgsa::nn {

struct GradCheckOptions {
  double eps = 1e-4;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|,
  // floor); the floor keeps vanishing gradients from amplifying round-off.
  double floor = 1e-6;
  // 0 checks every entry. Otherwise each parameter contributes its entry
  // with the largest analytic gradient plus randomly drawn others.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Builds a scalar on the given graph. Must be a deterministic function of
// the parameters (dropout disabled).
using ScalarFn = std::function<Var(Graph<double> &)>;

// Compares reverse-mode gradients of f with central differences
// (f(theta + eps) - f(theta - eps)) / (2 eps) for parameter entries of
// `params`. Throws NumericError naming the parameter when a non-finite value
// shows up.
GradCheckReport grad_check(const ScalarFn &f, ParamStore<double> &params,
                           const GradCheckOptions &options = {});

}  // namespace hbgsa::nn
