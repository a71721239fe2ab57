//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hbgsa/data/synthetic.hpp"
#include "hbgsa/error.hpp"
#include "hbgsa/nn/ops.hpp"

namespace hbgsa {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kCorrEps = 1e-8;

// splitmix64 finalizer; spreads (seed, counter) pairs over the state space.
std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> targets_of(std::span<const EncodedSample> samples) {
  std::vector<double> y;
  y.reserve(samples.size());
  for (const auto &s: samples) {
    if (!s.affinity)
      throw DataError("sample '" + s.id + "' has no affinity label");
    y.push_back(*s.affinity);
  }
  return y;
}

// Metrics that tolerate sets too small or too uniform for a correlation or
// concordance; undefined entries are NaN (null in JSON).
MetricsReport partial_metrics(std::span<const double> pred, std::span<const double> y,
                              bool strict_ci) {
  MetricsReport m;
  m.n = pred.size();
  m.rmse = rmse(pred, y);
  m.mae = mae(pred, y);
  m.pearson_r = std::numeric_limits<double>::quiet_NaN();
  m.ci = std::numeric_limits<double>::quiet_NaN();
  if (pred.size() >= 2) {
    m.pearson_r = pearson_r(pred, y);
    if (std::any_of(y.begin(), y.end(), [&](double v) { return v != y[0]; }))
      m.ci = concordance_index(pred, y, strict_ci);
  }
  return m;
}

ordered_json metrics_json(const MetricsReport &m) {
  return ordered_json::parse(m.to_json());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1)
    throw ConfigError("batch_size must be positive");
  if (lambda < 0.0)
    throw ConfigError("lambda must be non-negative");
  if (lambda > 0.0 && batch_size < kMinPearsonBatch)
    throw ConfigError("batch_size " + std::to_string(batch_size)
                      + " is below the minimum of 16 required when lambda > 0");
  if (max_epochs < 1)
    throw ConfigError("max_epochs must be positive");
  if (early_stop_patience < 1)
    throw ConfigError("early_stop_patience must be at least 1");
  if (!(learning_rate > 0.0))
    throw ConfigError("learning_rate must be positive");
  if (clip_norm < 0.0)
    throw ConfigError("clip_norm must be non-negative");
  if (train_eval_every < 0)
    throw ConfigError("train_eval_every must be non-negative");
}

std::string TrainConfig::to_json() const {
  ordered_json j;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["learning_rate"] = learning_rate;
  j["optimizer"] = optimizer == OptimizerKind::kAdam ? "adam" : "sgd";
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["adam_eps"] = adam_eps;
  j["momentum"] = momentum;
  j["early_stop_patience"] = early_stop_patience;
  j["seed"] = seed;
  j["lambda"] = lambda;
  j["clip_norm"] = clip_norm;
  j["strict_ci"] = strict_ci;
  return j.dump();
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) { }

void Adam::step(nn::ParamStore<float> &params) {
  if (m_.empty()) {
    for (const auto &p: params) {
      m_.emplace_back(p->value.size(), 0.0f);
      v_.emplace_back(p->value.size(), 0.0f);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto &p = params[i];
    if (p.grad.empty())
      continue;
    auto &m = m_[i];
    auto &v = v_[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      const float g = p.grad[j];
      m[j] = b1 * m[j] + (1.0f - b1) * g;
      v[j] = b2 * v[j] + (1.0f - b2) * g * g;
      const double mhat = m[j] / c1, vhat = v[j] / c2;
      p.value[j] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

Sgd::Sgd(double lr, double momentum): lr_(lr), momentum_(momentum) { }

void Sgd::step(nn::ParamStore<float> &params) {
  if (velocity_.empty())
    for (const auto &p: params)
      velocity_.emplace_back(p->value.size(), 0.0f);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto &p = params[i];
    if (p.grad.empty())
      continue;
    auto &vel = velocity_[i];
    for (std::size_t j = 0; j < vel.size(); ++j) {
      vel[j] = static_cast<float>(momentum_ * vel[j] + p.grad[j]);
      p.value[j] -= static_cast<float>(lr_ * vel[j]);
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig &cfg) {
  if (cfg.optimizer == OptimizerKind::kAdam)
    return std::make_unique<Adam>(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  return std::make_unique<Sgd>(cfg.learning_rate, cfg.momentum);
}

double clip_grad_norm(nn::ParamStore<float> &params, double max_norm) {
  double sq = 0.0;
  for (const auto &p: params)
    for (float g: p->grad.values())
      sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto s = static_cast<float>(max_norm / norm);
    for (auto &p: params)
      for (float &g: p->grad.values())
        g *= s;
  }
  return norm;
}

EarlyStopper::EarlyStopper(int patience): patience_(patience) {
  if (patience < 1)
    throw ConfigError("patience must be at least 1");
}

bool EarlyStopper::update(int epoch, double value) {
  if (!seen_ || value < best_) {
    seen_ = true;
    best_ = value;
    best_epoch_ = epoch;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

std::uint64_t sample_seed(std::uint64_t batch_seed, std::size_t index) {
  return mix(batch_seed, index);
}

LossBreakdown batch_gradient(nn::ParamStore<float> &params,
                             std::span<const EncodedSample *const> batch,
                             const HbgsaConfig &model, double lambda,
                             std::uint64_t dropout_seed) {
  const std::size_t b = batch.size();
  if (b == 0)
    throw DataError("batch_gradient: empty batch");
  if (lambda > 0.0 && b < 2)
    throw DataError("batch_gradient: the correlation term needs at least 2 samples");
  std::vector<double> y(b);
  for (std::size_t i = 0; i < b; ++i) {
    if (!batch[i]->affinity)
      throw DataError("sample '" + batch[i]->id + "' has no affinity label");
    y[i] = *batch[i]->affinity;
  }
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(b);

  std::vector<std::size_t> offset(params.size() + 1, 0);
  for (std::size_t k = 0; k < params.size(); ++k)
    offset[k + 1] = offset[k] + params[k].value.size();
  const std::size_t total = offset.back();
  const bool corr = lambda > 0.0;
  std::vector<double> g_slope(total, 0.0), g_target, g_pred, g_one;
  if (corr) {
    g_target.assign(total, 0.0);
    g_pred.assign(total, 0.0);
    g_one.assign(total, 0.0);
  }

  std::vector<double> pred(b);
  for (std::size_t i = 0; i < b; ++i) {
    params.zero_grad();
    std::mt19937_64 rng(sample_seed(dropout_seed, i));
    nn::Graph<float> g;
    nn::Var out = forward_sample(g, *batch[i], params, model, Mode::kTrain,
                                 model.dropout_p > 0.0 ? &rng : nullptr);
    pred[i] = static_cast<double>(g.value(out)[0]);
    if (!std::isfinite(pred[i]))
      throw NumericError("non-finite prediction for sample '" + batch[i]->id + "'");
    g.backward(out);

    const double c = std::clamp(pred[i] - y[i], -1.0, 1.0) / static_cast<double>(b);
    const double bt = y[i] - ybar;
    for (std::size_t k = 0; k < params.size(); ++k) {
      const auto &grad = params[k].grad;
      if (grad.empty())
        continue;
      const std::size_t base = offset[k];
      for (std::size_t j = 0; j < grad.size(); ++j) {
        const double jac = grad[j];
        g_slope[base + j] += c * jac;
        if (corr) {
          g_target[base + j] += bt * jac;
          g_pred[base + j] += pred[i] * jac;
          g_one[base + j] += jac;
        }
      }
    }
  }

  const LossWithGrad lg = hybrid_loss_grad(pred, y, lambda);
  double u = 0.0, v = 0.0, w = 0.0;
  if (corr) {
    const double abar = std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(b);
    double saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      saa += (pred[i] - abar) * (pred[i] - abar);
      sbb += (y[i] - ybar) * (y[i] - ybar);
    }
    const double na = std::sqrt(saa), nb = std::sqrt(sbb);
    if (na >= kCorrEps && nb >= kCorrEps) {
      const double r = 1.0 - lg.loss.pearson;
      u = -lambda / (na * nb);
      v = lambda * r / (na * na);
      w = -v * abar;
    }
  }

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto &p = params[k];
    if (p.grad.empty())
      p.grad = nn::Tensor<float>(p.value.shape());
    const std::size_t base = offset[k];
    for (std::size_t j = 0; j < p.grad.size(); ++j) {
      double gj = g_slope[base + j];
      if (corr)
        gj += u * g_target[base + j] + v * g_pred[base + j] + w * g_one[base + j];
      p.grad[j] = static_cast<float>(gj);
    }
  }
  return lg.loss;
}

std::string EpochLog::to_json() const {
  ordered_json j;
  j["epoch"] = epoch;
  j["batches"] = batches;
  j["train_loss"] = train_loss.total;
  j["train_reg"] = train_loss.reg;
  j["train_pearson"] = train_loss.pearson;
  j["lambda"] = train_loss.lambda;
  j["grad_norm"] = grad_norm;
  j["val"] = val ? metrics_json(*val) : ordered_json(nullptr);
  j["train_r"] = train_r ? ordered_json(*train_r) : ordered_json(nullptr);
  return j.dump();
}

std::vector<double> predict_parallel(std::span<const EncodedSample> samples,
                                     nn::ParamStore<float> &params,
                                     const HbgsaConfig &model, int threads) {
  const std::size_t n = samples.size();
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1)
    return predict(samples, params, model);
  std::vector<double> out(n);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers)
          out[i] = predict(samples.subspan(i, 1), params, model)[0];
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t: pool)
    t.join();
  for (auto &e: errors)
    if (e)
      std::rethrow_exception(e);
  return out;
}

MetricsReport evaluate(nn::ParamStore<float> &params, const HbgsaConfig &model,
                       std::span<const EncodedSample> samples, bool strict_ci,
                       int threads) {
  const auto y = targets_of(samples);
  const auto pred = predict_parallel(samples, params, model, threads);
  return evaluate_metrics(pred, y, strict_ci);
}

TrainResult train(nn::ParamStore<float> params, const HbgsaConfig &model,
                  std::span<const EncodedSample> train_set,
                  std::span<const EncodedSample> val_set, const TrainConfig &cfg,
                  std::ostream *log_stream) {
  cfg.validate();
  model.validate();
  if (train_set.empty())
    throw DataError("training set is empty");
  if (cfg.lambda > 0.0 && train_set.size() < static_cast<std::size_t>(kMinPearsonBatch))
    throw DataError("training set has " + std::to_string(train_set.size())
                    + " samples; at least 16 are needed when lambda > 0");
  const auto train_y = targets_of(train_set);
  const auto val_y = targets_of(val_set);

  auto opt = make_optimizer(cfg);
  EarlyStopper stopper(cfg.early_stop_patience);
  TrainResult res;
  res.best_params = params;

  std::vector<std::size_t> order(train_set.size());
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(mix(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog log;
    log.epoch = epoch;
    log.train_loss.lambda = cfg.lambda;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t len = std::min(bs, order.size() - start);
      if (cfg.lambda > 0.0 && len < static_cast<std::size_t>(kMinPearsonBatch))
        break;
      std::vector<const EncodedSample *> batch;
      for (std::size_t i = 0; i < len; ++i)
        batch.push_back(&train_set[order[start + i]]);
      const std::uint64_t dseed =
          mix(mix(cfg.seed, static_cast<std::uint64_t>(epoch)), start);
      const LossBreakdown loss =
          batch_gradient(params, batch, model, cfg.lambda, dseed);
      if (!std::isfinite(loss.total))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch)
                           + ", batch " + std::to_string(log.batches + 1));
      log.grad_norm += clip_grad_norm(params, cfg.clip_norm);
      opt->step(params);
      log.train_loss.total += loss.total;
      log.train_loss.reg += loss.reg;
      log.train_loss.pearson += loss.pearson;
      ++log.batches;
    }
    if (log.batches > 0) {
      const double nb = log.batches;
      log.train_loss.total /= nb;
      log.train_loss.reg /= nb;
      log.train_loss.pearson /= nb;
      log.grad_norm /= nb;
    }

    if (!val_set.empty()) {
      const auto pred = predict(val_set, params, model);
      log.val = partial_metrics(pred, val_y, cfg.strict_ci);
      if (stopper.update(epoch, log.val->rmse)) {
        res.best_params = params;
        res.best_epoch = epoch;
      }
    }
    if (cfg.train_eval_every > 0 && epoch % cfg.train_eval_every == 0) {
      const auto pred = predict(train_set, params, model);
      log.train_r = train_set.size() >= 2 ? pearson_r(pred, train_y) : 0.0;
    }

    res.epochs_run = epoch;
    if (log_stream)
      *log_stream << log.to_json() << '\n' << std::flush;
    spdlog::debug("epoch {} loss {:.6f}", epoch, log.train_loss.total);
    res.log.push_back(std::move(log));

    if (!val_set.empty() && stopper.should_stop()) {
      res.early_stopped = true;
      break;
    }
    if (cfg.stop_at_train_r > 0.0 && res.log.back().train_r
        && *res.log.back().train_r >= cfg.stop_at_train_r) {
      res.reached_train_r = true;
      break;
    }
  }
  if (val_set.empty()) {
    res.best_params = std::move(params);
    res.best_epoch = res.epochs_run;
  }
  return res;
}

std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, int k,
                                                     std::uint64_t seed) {
  if (k < 2)
    throw ConfigError("k must be at least 2, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > n)
    throw ConfigError("k = " + std::to_string(k) + " exceeds the dataset size "
                      + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix(seed, 0x6b666f6c64ULL));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return folds;
}

CvSummary summarize_folds(std::vector<FoldResult> folds) {
  CvSummary s;
  s.folds = std::move(folds);
  if (s.folds.empty())
    return s;
  const double k = static_cast<double>(s.folds.size());
  // Deviations from the first fold keep identical folds at exactly zero spread.
  auto stat = [&](auto get, double &mean, double &sd) {
    const double x0 = get(s.folds.front().metrics);
    double shift = 0.0;
    for (const auto &f: s.folds)
      shift += get(f.metrics) - x0;
    shift /= k;
    double var = 0.0;
    for (const auto &f: s.folds) {
      const double d = get(f.metrics) - x0 - shift;
      var += d * d;
    }
    mean = x0 + shift;
    sd = std::sqrt(var / k);
  };
  stat([](const MetricsReport &m) { return m.rmse; }, s.mean.rmse, s.std.rmse);
  stat([](const MetricsReport &m) { return m.mae; }, s.mean.mae, s.std.mae);
  stat([](const MetricsReport &m) { return m.pearson_r; }, s.mean.pearson_r, s.std.pearson_r);
  stat([](const MetricsReport &m) { return m.ci; }, s.mean.ci, s.std.ci);
  for (const auto &f: s.folds)
    s.mean.n += f.metrics.n;
  s.std.n = s.mean.n;
  return s;
}

CvSummary kfold_cv(std::span<const EncodedSample> dataset, int k,
                   const HbgsaConfig &model, const TrainConfig &cfg) {
  const auto folds = fold_partition(dataset.size(), k, cfg.seed);
  std::vector<FoldResult> results;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<EncodedSample> test, rest;
    for (std::size_t i: folds[f])
      test.push_back(dataset[i]);
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f)
        for (std::size_t i: folds[g])
          rest.push_back(dataset[i]);
    const std::size_t n_val = std::max<std::size_t>(1, rest.size() / 10);
    std::vector<EncodedSample> val(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<EncodedSample> tr(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = mix(cfg.seed, f + 1);
    auto params = build_params<float>(model, fold_cfg.seed);
    TrainResult r = train(std::move(params), model, tr, val, fold_cfg);
    FoldResult fr;
    fr.fold = static_cast<int>(f);
    fr.best_epoch = r.best_epoch;
    fr.metrics = evaluate(r.best_params, model, test, cfg.strict_ci);
    spdlog::info("fold {}: rmse {:.4f} pearson {:.4f} ci {:.4f}", f, fr.metrics.rmse,
                 fr.metrics.pearson_r, fr.metrics.ci);
    results.push_back(fr);
  }
  return summarize_folds(std::move(results));
}

std::vector<SweepRow> lambda_sweep(std::span<const EncodedSample> train_set,
                                   std::span<const EncodedSample> val_set,
                                   std::span<const EncodedSample> test_set,
                                   std::span<const double> lambdas,
                                   const HbgsaConfig &model, const TrainConfig &cfg) {
  const auto eval_set = test_set.empty() ? val_set : test_set;
  if (eval_set.empty())
    throw DataError("lambda sweep needs a test or validation set");
  const auto init = build_params<float>(model, cfg.seed);
  std::vector<SweepRow> rows;
  for (double lambda: lambdas) {
    TrainConfig c = cfg;
    c.lambda = lambda;
    TrainResult r = train(init, model, train_set, val_set, c);
    rows.push_back({ lambda, evaluate(r.best_params, model, eval_set, cfg.strict_ci) });
    spdlog::info("lambda {}: rmse {:.4f}", lambda, rows.back().metrics.rmse);
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "lambda,rmse,mae,pearson_r,ci\n";
  for (const auto &r: rows)
    out += fmt(r.lambda) + "," + fmt(r.metrics.rmse) + "," + fmt(r.metrics.mae) + ","
           + fmt(r.metrics.pearson_r) + "," + fmt(r.metrics.ci) + "\n";
  return out;
}

std::vector<AblationRow> ablation_study(std::span<const std::string> variants,
                                        std::span<const EncodedSample> train_set,
                                        std::span<const EncodedSample> val_set,
                                        std::span<const EncodedSample> test_set,
                                        const HbgsaConfig &base, const TrainConfig &cfg) {
  const auto eval_set = test_set.empty() ? val_set : test_set;
  if (eval_set.empty())
    throw DataError("ablation needs a test or validation set");
  std::vector<AblationRow> rows;
  for (const auto &name: variants) {
    const HbgsaConfig model = ablation_variant(base, name);
    auto params = build_params<float>(model, cfg.seed);
    AblationRow row;
    row.variant = name;
    row.params = param_count(params);
    TrainResult r = train(std::move(params), model, train_set, val_set, cfg);
    row.metrics = evaluate(r.best_params, model, eval_set, cfg.strict_ci);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::string out = "variant,params,rmse,mae,pearson_r,ci\n";
  for (const auto &r: rows)
    out += r.variant + "," + std::to_string(r.params) + "," + fmt(r.metrics.rmse) + ","
           + fmt(r.metrics.mae) + "," + fmt(r.metrics.pearson_r) + "," + fmt(r.metrics.ci)
           + "\n";
  return out;
}

nn::GradCheckReport model_grad_check(const HbgsaConfig &model,
                                     const ModelGradCheckOptions &options) {
  HbgsaConfig cfg = model;
  cfg.protein_len = options.protein_len;
  cfg.pocket_len = options.pocket_len;
  cfg.smiles_len = options.smiles_len;
  const auto samples = synthetic_samples(cfg, static_cast<std::size_t>(options.batch),
                                         options.seed, SyntheticLabels::kRandom);
  auto params = build_params<double>(cfg, mix(options.seed, 1));
  nn::Tensor<double> y({ samples.size() });
  for (std::size_t i = 0; i < samples.size(); ++i)
    y[i] = *samples[i].affinity;
  nn::GradCheckOptions gc;
  gc.eps = options.eps;
  gc.max_entries_per_param = options.entries_per_param;
  gc.seed = options.seed;
  return nn::grad_check(
      [&](nn::Graph<double> &g) {
        nn::Var pred = forward_batch(g, std::span<const EncodedSample>(samples), params,
                                     cfg, Mode::kEval);
        return hybrid_loss(g, pred, g.constant(y), options.lambda).total;
      },
      params, gc);
}

}  // namespace hbgsa
