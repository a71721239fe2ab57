//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hbgsa/model/hbond_gnn.hpp"
#include "hbgsa/nn/graph.hpp"
#include "hbgsa/nn/param_store.hpp"

namespace hbgsa {

struct HbgsaConfig {
  // Width of every branch output; the fused vector is 4 * feature_dim.
  int feature_dim = 128;
  // Width of the convolutional trunks before the output projection.
  int conv_channels = 256;
  int protein_len = 1000;
  int pocket_len = 63;
  int smiles_len = 150;
  int hbond_n = 20;
  int hbond_k = 5;
  std::vector<int> dilations { 1, 2, 4, 8 };
  int conv_kernel = 3;
  int pocket_layers = 3;
  int attention_heads = 1;
  double dropout_p = 0.5;
  double lambda_pearson = 50.0;

  bool use_pocket = true;
  bool use_smiles = true;
  bool use_hbond_gnn = true;
  bool use_attention = true;

  // Drop disabled branches from the fused vector instead of zero-filling.
  bool shrink_head = false;
  bool mask_padded_hbonds = false;
  bool normalize_adjacency = false;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  int enabled_branches() const;
  int fused_dim() const;
  HBondGnnConfig gnn_config() const;

  // "key = value" lines, '#' comments. Unknown keys are rejected.
  std::string to_text() const;
  static HbgsaConfig from_text(std::string_view text);
  void save(const std::string &path) const;
  static HbgsaConfig load(const std::string &path);

  bool operator==(const HbgsaConfig &) const = default;
};

// Names accepted by ablation_variant(), in table order.
std::span<const std::string_view> ablation_names();

// Copy of `base` with the branch flags of the named configuration. Accepts
// the short aliases "+self-attention", "+H-BondGNN" and "HBGSA" for the
// three richest rows. Throws ConfigError for anything else.
HbgsaConfig ablation_variant(const HbgsaConfig &base, std::string_view name);

// Model inputs for one complex, already at the configured fixed shapes.
struct EncodedSample {
  std::string id;
  nn::Tensor<float> protein;          // [protein_len, 40]
  nn::Tensor<float> pocket;           // [pocket_len, 40]
  std::vector<std::int32_t> smiles;   // [smiles_len]
  nn::Tensor<float> hbond;            // [hbond_n, 9]
  std::optional<double> affinity;

  bool operator==(const EncodedSample &) const = default;
};

// Throws ShapeError naming the sample and block when a shape is off.
void check_sample_shapes(const EncodedSample &s, const HbgsaConfig &cfg);

enum class Mode { kTrain, kEval };

// Creates the parameters for every enabled branch plus the head.
template <class T>
nn::ParamStore<T> build_params(const HbgsaConfig &cfg, std::uint64_t seed);

std::size_t param_count(const nn::ParamStore<float> &params);

// Scalar prediction node ([1]) for one sample. In kTrain mode `rng` drives
// dropout and must be non-null when dropout_p > 0; in kEval mode it must be
// null.
template <class T>
nn::Var forward_sample(nn::Graph<T> &g, const EncodedSample &sample,
                       nn::ParamStore<T> &params, const HbgsaConfig &cfg,
                       Mode mode, std::mt19937_64 *rng = nullptr);

// Predictions for a batch, stacked into a [n] node.
template <class T>
nn::Var forward_batch(nn::Graph<T> &g, std::span<const EncodedSample> batch,
                      nn::ParamStore<T> &params, const HbgsaConfig &cfg,
                      Mode mode, std::mt19937_64 *rng = nullptr);

// Eval-mode predictions without recording a tape.
std::vector<double> predict(std::span<const EncodedSample> samples,
                            nn::ParamStore<float> &params,
                            const HbgsaConfig &cfg);

}  // namespace hbgsa
