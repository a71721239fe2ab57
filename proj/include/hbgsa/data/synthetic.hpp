//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <vector>

#include "hbgsa/model/hbgsa_model.hpp"

namespace hbgsa {

enum class SyntheticLabels {
  // Fixed linear function of bond count, protein length and pocket length.
  kLinear,
  // Uniform on [4, 10], independent of the inputs.
  kRandom,
};

// Encoded samples at the shapes of `cfg` built from random sequences, a
// small pool of drug-like SMILES and random bond geometry. Deterministic in
// (cfg shapes, n, seed, labels).
std::vector<EncodedSample> synthetic_samples(const HbgsaConfig &cfg, std::size_t n,
                                             std::uint64_t seed,
                                             SyntheticLabels labels = SyntheticLabels::kLinear);

}  // namespace hbgsa
