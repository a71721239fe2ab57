//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace hbgsa::nn {
namespace {

double evaluate(const ScalarFn &f, const std::string &context) {
  Graph<double> g(false);
  Var y = f(g);
  const auto &v = g.value(y);
  if (v.size() != 1)
    throw ShapeError("grad_check: function must return a single element, got "
                     + shape_str(v.shape()));
  if (!std::isfinite(v[0]))
    throw NumericError("grad_check: non-finite value while perturbing "
                       + context);
  return v[0];
}

std::vector<std::size_t> pick_entries(const Tensor<double> &analytic,
                                      std::size_t limit, std::mt19937_64 &rng) {
  std::vector<std::size_t> all(analytic.size());
  std::iota(all.begin(), all.end(), 0);
  if (limit == 0 || limit >= all.size())
    return all;
  std::vector<std::size_t> picked;
  auto largest = std::max_element(
      all.begin(), all.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(analytic[a]) < std::abs(analytic[b]);
      });
  picked.push_back(*largest);
  std::uniform_int_distribution<std::size_t> dist(0, all.size() - 1);
  while (picked.size() < limit) {
    std::size_t i = dist(rng);
    if (std::find(picked.begin(), picked.end(), i) == picked.end())
      picked.push_back(i);
  }
  return picked;
}

}  // namespace

GradCheckReport grad_check(const ScalarFn &f, ParamStore<double> &params,
                           const GradCheckOptions &options) {
  GradCheckReport report;
  if (params.size() == 0)
    return report;

  params.zero_grad();
  {
    Graph<double> g(true);
    Var y = f(g);
    if (g.value(y).size() != 1)
      throw ShapeError("grad_check: function must return a single element");
    if (!std::isfinite(g.value(y)[0]))
      throw NumericError("grad_check: non-finite function value");
    g.backward(y);
  }

  std::mt19937_64 rng(options.seed);
  for (auto &pp: params) {
    Parameter<double> &p = *pp;
    Tensor<double> analytic = p.grad.shape() == p.value.shape()
                                  ? p.grad
                                  : Tensor<double>(p.value.shape());
    for (std::size_t i = 0; i < analytic.size(); ++i)
      if (!std::isfinite(analytic[i]))
        throw NumericError("grad_check: non-finite gradient in parameter '"
                           + p.name + "'");

    for (std::size_t i:
         pick_entries(analytic, options.max_entries_per_param, rng)) {
      const double orig = p.value[i];
      const std::string context = "'" + p.name + "'[" + std::to_string(i) + "]";
      p.value[i] = orig + options.eps;
      const double up = evaluate(f, context);
      p.value[i] = orig - options.eps;
      const double down = evaluate(f, context);
      p.value[i] = orig;

      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = analytic[i];
      const double denom =
          std::max({ std::abs(a), std::abs(numeric), options.floor });
      const double rel = std::abs(a - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        report.max_rel_error = std::max(rel, report.max_rel_error);
        if (rel >= report.max_rel_error) {
          report.worst_param = p.name;
          report.worst_index = i;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  params.zero_grad();
  return report;
}

}  // namespace hbgsa::nn
