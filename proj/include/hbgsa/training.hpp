//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hbgsa/model/hbgsa_model.hpp"
#include "hbgsa/nn/grad_check.hpp"
#include "hbgsa/nn/param_store.hpp"
#include "hbgsa/objective.hpp"

namespace hbgsa {

enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
  int batch_size = 64;
  int max_epochs = 300;
  double learning_rate = 1e-4;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double momentum = 0.9;  // sgd only
  int early_stop_patience = 30;
  std::uint64_t seed = 0;
  double lambda = 50.0;
  // Global gradient norm cap; 0 disables clipping.
  double clip_norm = 5.0;
  bool strict_ci = false;
  // Every `train_eval_every` epochs the training set is re-predicted in eval
  // mode and its Pearson R logged; 0 disables. Training stops early once
  // that R reaches `stop_at_train_r` (when positive).
  int train_eval_every = 0;
  double stop_at_train_r = 0.0;

  // Throws ConfigError, e.g. batch_size < 16 while lambda > 0.
  void validate() const;
  std::string to_json() const;
};

inline constexpr int kMinPearsonBatch = 16;

class Optimizer {
public:
  virtual ~Optimizer() = default;
  // Applies one update using the gradients held in `params`.
  virtual void step(nn::ParamStore<float> &params) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig &cfg);

class Adam final : public Optimizer {
public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(nn::ParamStore<float> &params) override;

private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

class Sgd final : public Optimizer {
public:
  explicit Sgd(double lr, double momentum = 0.0);
  void step(nn::ParamStore<float> &params) override;

private:
  double lr_, momentum_;
  std::vector<std::vector<float>> velocity_;
};

// Scales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(nn::ParamStore<float> &params, double max_norm);

// Stops once more than `patience` consecutive epochs fail to improve on the
// best value seen (strictly lower is better).
class EarlyStopper {
public:
  explicit EarlyStopper(int patience);
  // Returns true when this value is a new best.
  bool update(int epoch, double value);
  bool should_stop() const { return bad_epochs_ > patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

private:
  int patience_;
  int bad_epochs_ = 0;
  int best_epoch_ = 0;
  double best_ = 0.0;
  bool seen_ = false;
};

// Seed of the dropout generator used for sample `index` of a batch whose
// gradient is computed with `batch_seed`.
std::uint64_t sample_seed(std::uint64_t batch_seed, std::size_t index);

// Batch gradient of the hybrid loss, accumulated one sample at a time.
//
// The per-sample Jacobians J_i of the prediction are combined as
//   grad = sum_i c_i J_i + u * sum_i b_i J_i + v * sum_i a_i J_i + w * sum_i J_i
// where c_i is the SmoothL1 slope / B, b_i the centered target and a_i the
// prediction; u, v and w depend on batch statistics known only after the
// last sample. Four running sums make this exact without holding B tapes.
//
// Leaves the gradient in params[*].grad and returns the loss of the batch.
LossBreakdown batch_gradient(nn::ParamStore<float> &params,
                             std::span<const EncodedSample *const> batch,
                             const HbgsaConfig &model, double lambda,
                             std::uint64_t dropout_seed);

struct EpochLog {
  int epoch = 0;
  int batches = 0;
  LossBreakdown train_loss;  // mean over batches
  double grad_norm = 0.0;    // mean pre-clip norm
  std::optional<MetricsReport> val;
  std::optional<double> train_r;

  std::string to_json() const;
};

struct TrainResult {
  nn::ParamStore<float> best_params;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  int epochs_run = 0;
  bool early_stopped = false;
  bool reached_train_r = false;
};

// Mini-batch training with per-epoch validation. An empty validation set
// disables early stopping and the final parameters are returned. Each
// epoch's log line is also written to `log_stream` when given.
TrainResult train(nn::ParamStore<float> params, const HbgsaConfig &model,
                  std::span<const EncodedSample> train_set,
                  std::span<const EncodedSample> val_set,
                  const TrainConfig &cfg, std::ostream *log_stream = nullptr);

MetricsReport evaluate(nn::ParamStore<float> &params, const HbgsaConfig &model,
                       std::span<const EncodedSample> samples, bool strict_ci,
                       int threads = 1);

// Eval-mode predictions, optionally split over worker threads. Output order
// follows the input and does not depend on the thread count.
std::vector<double> predict_parallel(std::span<const EncodedSample> samples,
                                     nn::ParamStore<float> &params,
                                     const HbgsaConfig &model, int threads);

// Seeded shuffle of 0..n-1 cut into k contiguous folds (sizes differ by at
// most one). Throws ConfigError when k < 2 or k > n.
std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, int k,
                                                     std::uint64_t seed);

struct FoldResult {
  int fold = 0;
  MetricsReport metrics;
  int best_epoch = 0;
};

struct CvSummary {
  std::vector<FoldResult> folds;
  MetricsReport mean;
  MetricsReport std;  // population standard deviation per metric
};

// Each fold is held out once; 10% of the remaining samples (at least one)
// become the validation set for early stopping.
CvSummary kfold_cv(std::span<const EncodedSample> dataset, int k,
                   const HbgsaConfig &model, const TrainConfig &cfg);

CvSummary summarize_folds(std::vector<FoldResult> folds);

struct SweepRow {
  double lambda = 0.0;
  MetricsReport metrics;
};

inline const std::vector<double> kDefaultLambdas { 1, 25, 50, 75, 100, 125, 150 };

// One training run per lambda from the same initial parameters, evaluated on
// `test_set`.
std::vector<SweepRow> lambda_sweep(std::span<const EncodedSample> train_set,
                                   std::span<const EncodedSample> val_set,
                                   std::span<const EncodedSample> test_set,
                                   std::span<const double> lambdas,
                                   const HbgsaConfig &model, const TrainConfig &cfg);

// Header lambda,rmse,mae,pearson_r,ci.
std::string sweep_csv(std::span<const SweepRow> rows);

struct AblationRow {
  std::string variant;
  std::size_t params = 0;
  MetricsReport metrics;
};

std::vector<AblationRow> ablation_study(std::span<const std::string> variants,
                                        std::span<const EncodedSample> train_set,
                                        std::span<const EncodedSample> val_set,
                                        std::span<const EncodedSample> test_set,
                                        const HbgsaConfig &base, const TrainConfig &cfg);

std::string ablation_csv(std::span<const AblationRow> rows);

struct ModelGradCheckOptions {
  int batch = 16;
  // Short inputs keep the 64-bit passes affordable; widths stay at the
  // configured values.
  int protein_len = 16;
  int pocket_len = 8;
  int smiles_len = 16;
  std::size_t entries_per_param = 2;
  // Max pooling is only piecewise smooth, so the step must stay below the
  // typical gap between the largest and second largest position.
  double eps = 1e-5;
  double lambda = 50.0;
  std::uint64_t seed = 0;
};

// Finite-difference check of the full model plus hybrid loss on a random
// batch, in double precision.
nn::GradCheckReport model_grad_check(const HbgsaConfig &model,
                                     const ModelGradCheckOptions &options = {});

}  // namespace hbgsa
