//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <random>
#include <string>
#include <vector>

#include "hbgsa/features/residues.hpp"
#include "hbgsa/features/smiles.hpp"
#include "hbgsa/model/hbgsa_model.hpp"

namespace testing_samples {

inline const std::vector<std::string> &smiles_pool() {
  static const std::vector<std::string> pool {
    "CC(=O)Nc1nnc(s1)S(=O)(=O)N",
    "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
    "CC(=O)Oc1ccccc1C(=O)O",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "OC1C(O)C(O)C(CO)OC1O",
    "c1ccc2c(c1)cc[nH]2",
    "NCCc1ccc(O)c(O)c1",
    "CCN(CC)CCNC(=O)c1ccc(N)cc1",
  };
  return pool;
}

inline std::string random_sequence(std::mt19937_64 &rng, std::size_t len) {
  static const std::string aa = "ACDEFGHIKLMNPQRSTVWY";
  std::string s(len, 'A');
  for (auto &ch: s)
    ch = aa[rng() % aa.size()];
  return s;
}

// A random sample at the shapes of `cfg`. Bond rows are filled for a random
// prefix and zero afterwards.
inline hbgsa::EncodedSample random_sample(std::mt19937_64 &rng,
                                          const hbgsa::HbgsaConfig &cfg,
                                          const std::string &id) {
  hbgsa::EncodedSample s;
  s.id = id;
  const auto plen = static_cast<std::size_t>(cfg.protein_len);
  s.protein = hbgsa::encode_protein(random_sequence(rng, 1 + rng() % plen), cfg.protein_len);
  const auto klen = static_cast<std::size_t>(cfg.pocket_len);
  s.pocket = hbgsa::encode_pocket(random_sequence(rng, 1 + rng() % klen), cfg.pocket_len);
  const auto &pool = smiles_pool();
  s.smiles = hbgsa::encode_smiles(pool[rng() % pool.size()], cfg.smiles_len);
  const auto n = static_cast<std::size_t>(cfg.hbond_n);
  s.hbond = hbgsa::nn::Tensor<float>({ n, 9 });
  std::uniform_real_distribution<float> u(-4.0f, 4.0f);
  const auto k = static_cast<std::size_t>(cfg.hbond_k);
  const std::size_t real = k + 1 + rng() % (n - k);
  for (std::size_t i = 0; i < real && i < n; ++i) {
    for (std::size_t c = 0; c < 6; ++c)
      s.hbond.at(i, c) = u(rng);
    for (std::size_t c = 0; c < 3; ++c)
      s.hbond.at(i, 6 + c) = 0.5f * (s.hbond.at(i, c) + s.hbond.at(i, 3 + c));
  }
  s.affinity = 4.0 + 6.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return s;
}

inline std::vector<hbgsa::EncodedSample> random_samples(std::uint64_t seed, std::size_t n,
                                                        const hbgsa::HbgsaConfig &cfg) {
  std::mt19937_64 rng(seed);
  std::vector<hbgsa::EncodedSample> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(random_sample(rng, cfg, "s" + std::to_string(i)));
  return out;
}

// Default architecture with short inputs, for tests that run many passes.
inline hbgsa::HbgsaConfig short_config() {
  hbgsa::HbgsaConfig cfg;
  cfg.protein_len = 32;
  cfg.pocket_len = 12;
  cfg.smiles_len = 24;
  return cfg;
}

}  // namespace testing_samples
