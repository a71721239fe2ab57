//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hbgsa/data/synthetic.hpp"
#include "hbgsa/error.hpp"
#include "hbgsa/nn/checkpoint.hpp"
#include "hbgsa/nn/ops.hpp"
#include "hbgsa/training.hpp"
#include "samples.hpp"

namespace hbgsa {
namespace {

using nn::Graph;
using nn::Var;
using testing_samples::short_config;

nn::ParamStore<float> scalar_store(float value, float grad) {
  nn::ParamStore<float> ps;
  auto &p = ps.add("x", nn::Tensor<float>::scalar(value));
  p.grad = nn::Tensor<float>::scalar(grad);
  return ps;
}

TEST(Optimizer, SgdStepOnQuadratic) {
  // f(x) = x^2 / 2 at x = 1 has gradient 1.
  auto ps = scalar_store(1.0f, 1.0f);
  Sgd sgd(0.1);
  sgd.step(ps);
  EXPECT_FLOAT_EQ(ps[0].value[0], 0.9f);
}

TEST(Optimizer, SgdMomentumAccumulates) {
  auto ps = scalar_store(0.0f, 1.0f);
  Sgd sgd(1.0, 0.5);
  sgd.step(ps);
  sgd.step(ps);
  // Velocities 1 and 1.5.
  EXPECT_FLOAT_EQ(ps[0].value[0], -2.5f);
}

TEST(Optimizer, AdamFirstStepIsLearningRate) {
  auto ps = scalar_store(1.0f, 3.0f);
  Adam adam(0.01);
  adam.step(ps);
  EXPECT_NEAR(ps[0].value[0], 0.99f, 1e-6);
}

TEST(Optimizer, AdamZeroGradientLeavesValue) {
  auto ps = scalar_store(2.0f, 0.0f);
  Adam adam(0.1);
  for (int i = 0; i < 5; ++i)
    adam.step(ps);
  EXPECT_EQ(ps[0].value[0], 2.0f);
}

TEST(Optimizer, ClipScalesToMaxNorm) {
  nn::ParamStore<float> ps;
  auto &a = ps.add("a", nn::Tensor<float>({ 2 }));
  a.grad = nn::Tensor<float>({ 2 }, { 3.0f, 4.0f });
  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 1.0), 5.0);
  EXPECT_FLOAT_EQ(ps[0].grad[0], 0.6f);
  EXPECT_FLOAT_EQ(ps[0].grad[1], 0.8f);
  EXPECT_NEAR(clip_grad_norm(ps, 10.0), 1.0, 1e-6);
  EXPECT_FLOAT_EQ(ps[0].grad[0], 0.6f);
}

TEST(EarlyStop, PatienceOne) {
  EarlyStopper s(1);
  EXPECT_TRUE(s.update(1, 1.0));
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.update(2, 1.5));
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.update(3, 2.0));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 1);
  EXPECT_DOUBLE_EQ(s.best_value(), 1.0);
}

TEST(EarlyStop, ImprovementResetsCounter) {
  EarlyStopper s(2);
  s.update(1, 3.0);
  s.update(2, 4.0);
  s.update(3, 4.0);
  EXPECT_TRUE(s.update(4, 2.0));
  s.update(5, 2.0);  // ties do not count as improvement
  s.update(6, 2.5);
  EXPECT_FALSE(s.should_stop());
  s.update(7, 2.5);
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 4);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 8;
  EXPECT_THROW(c.validate(), ConfigError);
  c.lambda = 0.0;
  EXPECT_NO_THROW(c.validate());
  c.early_stop_patience = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

// Reference: the whole batch on one tape, each sample using the generator
// that batch_gradient gives it.
std::vector<float> tape_gradient(nn::ParamStore<float> &ps, const HbgsaConfig &cfg,
                                 const std::vector<EncodedSample> &samples, double lambda,
                                 std::uint64_t seed) {
  ps.zero_grad();
  Graph<float> g;
  std::vector<Var> preds;
  nn::Tensor<float> y({ samples.size() });
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::mt19937_64 rng(sample_seed(seed, i));
    preds.push_back(forward_sample(g, samples[i], ps, cfg, Mode::kTrain,
                                   cfg.dropout_p > 0.0 ? &rng : nullptr));
    y[i] = static_cast<float>(*samples[i].affinity);
  }
  Var pred = nn::stack(g, std::span<const Var>(preds));
  g.backward(hybrid_loss(g, pred, g.constant(y), static_cast<float>(lambda)).total);
  std::vector<float> out;
  for (const auto &p: ps)
    for (float v: p->grad.values())
      out.push_back(v);
  return out;
}

void expect_batch_gradient_matches_tape(double dropout, double lambda) {
  HbgsaConfig cfg = short_config();
  cfg.dropout_p = dropout;
  const auto samples = synthetic_samples(cfg, 16, 31, SyntheticLabels::kRandom);
  auto ps = build_params<float>(cfg, 9);
  const std::uint64_t seed = 77;
  const auto expected = tape_gradient(ps, cfg, samples, lambda, seed);

  std::vector<const EncodedSample *> batch;
  for (const auto &s: samples)
    batch.push_back(&s);
  batch_gradient(ps, batch, cfg, lambda, seed);
  std::vector<float> got;
  for (const auto &p: ps)
    for (float v: p->grad.values())
      got.push_back(v);
  ASSERT_EQ(got.size(), expected.size());
  double scale = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    scale = std::max(scale, std::abs(static_cast<double>(expected[i])));
    worst = std::max(worst, std::abs(static_cast<double>(got[i]) - expected[i]));
  }
  ASSERT_GT(scale, 0.0);
  EXPECT_LT(worst / scale, 1e-3) << "dropout " << dropout << " lambda " << lambda;
}

TEST(BatchGradient, MatchesWholeBatchTape) {
  expect_batch_gradient_matches_tape(0.0, 50.0);
  expect_batch_gradient_matches_tape(0.0, 0.0);
}

TEST(BatchGradient, MatchesWholeBatchTapeWithDropout) {
  expect_batch_gradient_matches_tape(0.5, 50.0);
}

TEST(BatchGradient, ReturnsLossOfBatch) {
  const auto cfg = short_config();
  const auto samples = synthetic_samples(cfg, 16, 3, SyntheticLabels::kRandom);
  HbgsaConfig eval_cfg = cfg;
  eval_cfg.dropout_p = 0.0;
  auto ps = build_params<float>(eval_cfg, 2);
  std::vector<const EncodedSample *> batch;
  std::vector<double> y;
  for (const auto &s: samples) {
    batch.push_back(&s);
    y.push_back(*s.affinity);
  }
  const auto loss = batch_gradient(ps, batch, eval_cfg, 50.0, 0);
  const auto pred = predict(samples, ps, eval_cfg);
  const auto ref = hybrid_loss_grad(pred, y, 50.0).loss;
  EXPECT_NEAR(loss.total, ref.total, 1e-9 * std::max(1.0, std::abs(ref.total)));
}

TEST(Folds, PartitionSizesAndCoverage) {
  const auto folds = fold_partition(10, 5, 4);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen;
  for (const auto &f: folds) {
    EXPECT_EQ(f.size(), 2u);
    seen.insert(f.begin(), f.end());
  }
  EXPECT_EQ(seen.size(), 10u);
  const auto uneven = fold_partition(11, 3, 4);
  EXPECT_EQ(uneven[0].size() + uneven[1].size() + uneven[2].size(), 11u);
  EXPECT_EQ(fold_partition(10, 5, 4), folds);
  EXPECT_NE(fold_partition(10, 5, 5), folds);
  EXPECT_THROW(fold_partition(10, 1, 0), ConfigError);
  EXPECT_THROW(fold_partition(3, 4, 0), ConfigError);
}

TEST(Folds, IdenticalFoldsHaveZeroSpread) {
  MetricsReport m { 1.5, 1.2, 0.7, 0.8, 4 };
  std::vector<FoldResult> folds(3, FoldResult { 0, m, 1 });
  const auto s = summarize_folds(folds);
  EXPECT_DOUBLE_EQ(s.mean.rmse, 1.5);
  EXPECT_DOUBLE_EQ(s.mean.ci, 0.8);
  EXPECT_DOUBLE_EQ(s.std.rmse, 0.0);
  EXPECT_DOUBLE_EQ(s.std.pearson_r, 0.0);
}

TEST(Folds, PopulationStandardDeviation) {
  std::vector<FoldResult> folds;
  for (double r: { 1.0, 3.0 })
    folds.push_back({ 0, MetricsReport { r, r, 0.5, 0.5, 2 }, 1 });
  const auto s = summarize_folds(folds);
  EXPECT_DOUBLE_EQ(s.mean.rmse, 2.0);
  EXPECT_DOUBLE_EQ(s.std.rmse, 1.0);
}

TrainConfig tiny_train_config() {
  TrainConfig c;
  c.batch_size = 16;
  c.max_epochs = 2;
  c.learning_rate = 1e-3;
  c.seed = 3;
  return c;
}

TEST(Train, SameSeedGivesIdenticalLogsAndCheckpoints) {
  const auto cfg = short_config();
  const auto data = synthetic_samples(cfg, 20, 5);
  const auto val = synthetic_samples(cfg, 4, 6);
  const auto tc = tiny_train_config();
  std::ostringstream log_a, log_b, ck_a, ck_b;
  auto a = train(build_params<float>(cfg, 1), cfg, data, val, tc, &log_a);
  auto b = train(build_params<float>(cfg, 1), cfg, data, val, tc, &log_b);
  EXPECT_EQ(log_a.str(), log_b.str());
  EXPECT_EQ(a.log.size(), 2u);
  nn::write_checkpoint(ck_a, a.best_params);
  nn::write_checkpoint(ck_b, b.best_params);
  EXPECT_EQ(ck_a.str(), ck_b.str());

  TrainConfig other = tc;
  other.seed = 4;
  std::ostringstream log_c;
  train(build_params<float>(cfg, 1), cfg, data, val, other, &log_c);
  EXPECT_NE(log_a.str(), log_c.str());
}

TEST(Train, CheckpointRoundTripPreservesPredictions) {
  const auto cfg = short_config();
  const auto data = synthetic_samples(cfg, 16, 5);
  auto r = train(build_params<float>(cfg, 1), cfg, data, {}, tiny_train_config());
  const auto path = std::filesystem::temp_directory_path() / "hbgsa_training_test.ckpt";
  nn::save_checkpoint(path, r.best_params);
  auto loaded = nn::load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(predict(data, r.best_params, cfg), predict(data, loaded, cfg));
}

TEST(Train, LossDecreasesOnLearnableLabels) {
  const auto cfg = short_config();
  const auto data = synthetic_samples(cfg, 32, 8);
  TrainConfig tc = tiny_train_config();
  tc.max_epochs = 6;
  auto r = train(build_params<float>(cfg, 1), cfg, data, {}, tc);
  ASSERT_EQ(r.log.size(), 6u);
  EXPECT_LT(r.log.back().train_loss.total, r.log.front().train_loss.total);
  EXPECT_EQ(r.log.front().batches, 2);
}

TEST(Train, EarlyStopReturnsBestEpochParameters) {
  const auto cfg = short_config();
  const auto data = synthetic_samples(cfg, 16, 5);
  const auto val = synthetic_samples(cfg, 3, 9);
  TrainConfig tc = tiny_train_config();
  // A huge step makes validation worse after the first epoch.
  tc.learning_rate = 0.05;
  tc.clip_norm = 0.0;
  tc.max_epochs = 10;
  tc.early_stop_patience = 1;
  auto r = train(build_params<float>(cfg, 1), cfg, data, val, tc);
  ASSERT_TRUE(r.early_stopped);
  double best = r.log.front().val->rmse;
  int best_epoch = 1;
  for (const auto &l: r.log)
    if (l.val->rmse < best) {
      best = l.val->rmse;
      best_epoch = l.epoch;
    }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_EQ(r.epochs_run, best_epoch + 2);
  std::vector<double> y;
  for (const auto &s: val)
    y.push_back(*s.affinity);
  EXPECT_DOUBLE_EQ(rmse(predict(val, r.best_params, cfg), y), best);
}

TEST(Train, SmallLastBatchIsDroppedWithCorrelationTerm) {
  const auto cfg = short_config();
  const auto data = synthetic_samples(cfg, 20, 5);
  TrainConfig tc = tiny_train_config();
  tc.max_epochs = 1;
  EXPECT_EQ(train(build_params<float>(cfg, 1), cfg, data, {}, tc).log[0].batches, 1);
  tc.lambda = 0.0;
  EXPECT_EQ(train(build_params<float>(cfg, 1), cfg, data, {}, tc).log[0].batches, 2);
}

TEST(Train, RejectsUnlabeledAndTooSmallSets) {
  const auto cfg = short_config();
  auto data = synthetic_samples(cfg, 8, 5);
  EXPECT_THROW(train(build_params<float>(cfg, 1), cfg, data, {}, tiny_train_config()),
               DataError);
  data = synthetic_samples(cfg, 16, 5);
  data[3].affinity.reset();
  EXPECT_THROW(train(build_params<float>(cfg, 1), cfg, data, {}, tiny_train_config()),
               DataError);
}

TEST(Train, EpochLogJsonHasNullForUndefinedMetrics) {
  const auto cfg = short_config();
  const auto data = synthetic_samples(cfg, 16, 5);
  const auto val = synthetic_samples(cfg, 1, 6);
  TrainConfig tc = tiny_train_config();
  tc.max_epochs = 1;
  auto r = train(build_params<float>(cfg, 1), cfg, data, val, tc);
  const std::string line = r.log[0].to_json();
  EXPECT_NE(line.find("\"pearson_r\":null"), std::string::npos) << line;
  const auto back = MetricsReport::from_json(
      r.log[0].val->to_json());
  EXPECT_TRUE(std::isnan(back.pearson_r));
  EXPECT_DOUBLE_EQ(back.rmse, r.log[0].val->rmse);
}

TEST(Predict, ThreadCountDoesNotChangeOutput) {
  const auto cfg = short_config();
  const auto data = synthetic_samples(cfg, 7, 5);
  auto ps = build_params<float>(cfg, 1);
  const auto one = predict_parallel(data, ps, cfg, 1);
  EXPECT_EQ(predict_parallel(data, ps, cfg, 3), one);
  EXPECT_EQ(predict(data, ps, cfg), one);
}

TEST(Sweep, OneRowPerLambdaIncludingZero) {
  const auto cfg = short_config();
  const auto tr = synthetic_samples(cfg, 16, 5);
  const auto te = synthetic_samples(cfg, 4, 6);
  TrainConfig tc = tiny_train_config();
  tc.max_epochs = 1;
  const std::vector<double> lambdas { 0.0, 50.0 };
  const auto rows = lambda_sweep(tr, {}, te, lambdas, cfg, tc);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].lambda, 0.0);
  EXPECT_NE(rows[0].metrics.rmse, rows[1].metrics.rmse);
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda,rmse,mae,pearson_r,ci");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Ablation, RowsCarryParameterCounts) {
  const auto cfg = short_config();
  const auto tr = synthetic_samples(cfg, 16, 5);
  const auto te = synthetic_samples(cfg, 4, 6);
  TrainConfig tc = tiny_train_config();
  tc.max_epochs = 1;
  const std::vector<std::string> names { "SEQ", "FULL" };
  const auto rows = ablation_study(names, tr, {}, te, cfg, tc);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(rows[0].params, rows[1].params);
  EXPECT_EQ(rows[1].params, param_count(build_params<float>(cfg, 0)));
  EXPECT_EQ(ablation_csv(rows).substr(0, 8), "variant,");
}

TEST(CrossValidation, FoldsCoverDataset) {
  const auto cfg = short_config();
  const auto data = synthetic_samples(cfg, 12, 5);
  TrainConfig tc = tiny_train_config();
  tc.max_epochs = 1;
  tc.lambda = 0.0;
  tc.batch_size = 4;
  const auto s = kfold_cv(data, 3, cfg, tc);
  ASSERT_EQ(s.folds.size(), 3u);
  EXPECT_EQ(s.mean.n, 12u);
  for (const auto &f: s.folds)
    EXPECT_TRUE(std::isfinite(f.metrics.rmse));
}

}  // namespace
}  // namespace hbgsa
