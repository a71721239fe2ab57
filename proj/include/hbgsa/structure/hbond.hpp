//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "hbgsa/structure/pdb.hpp"

namespace hbgsa {

struct HBondCriteria {
  double max_distance = 3.5;
  double min_angle_deg = 120.0;
  // A hydrogen within this distance of a heavy atom is treated as bonded
  // to it.
  double covalent_h_cutoff = 1.2;

  void validate() const;
};

struct HydrogenBond {
  Vec3 protein_end {};
  Vec3 ligand_end {};
  Vec3 midpoint {};
  double distance = 0.0;
  std::optional<double> angle_deg;
  int protein_atom_serial = 0;
  int ligand_atom_serial = 0;
};

inline constexpr int kHBondFeatureDim = 9;

struct HBondFeatureMatrix {
  // Row i holds p_i, l_i, m_i; rows at and beyond n_real are zero.
  std::vector<std::array<double, kHBondFeatureDim>> rows;
  int n_real = 0;

  std::vector<double> flatten() const;
};

// Coordinates are handled on the 0.001 A grid used by the PDB format:
// positions are snapped to integer milli-angstroms before any distance or
// angle is computed, so the accept/reject decision and the output order do
// not depend on the global frame. Distances compare exactly against
// round(max_distance * 1000).
//
// A candidate is every (protein N/O/S, ligand N/O/S) pair within
// max_distance. When either atom carries a covalently bonded hydrogen in
// the input, the pair also needs some D-H...A angle >= min_angle_deg;
// otherwise the distance alone decides and angle_deg stays empty. Output is
// ordered by (distance, protein serial, ligand serial).
std::vector<HydrogenBond> detect_hbonds(const Complex &complex,
                                        const HBondCriteria &criteria = {});

// The n shortest bonds, zero-padded to n rows.
HBondFeatureMatrix select_top_n(std::vector<HydrogenBond> bonds, int n = 20);

// Subtracts the ligand centroid (all ligand atoms) from every real row.
// Arithmetic is exact on the milli-angstrom grid, so rigidly translating a
// complex by a grid vector leaves the result bit-identical.
HBondFeatureMatrix center_features(const HBondFeatureMatrix &matrix,
                                   const Complex &complex);

double hbond_density(int n_hbond, int n_ligand);

struct HBondCountStats {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // population
  int p95 = 0;       // nearest rank
  double coverage_at_20 = 0.0;
  std::size_t n = 0;
};

HBondCountStats hbond_count_stats(const std::vector<int> &counts);

// count -> number of samples with that count, for 0..max(counts).
std::vector<std::size_t> hbond_count_histogram(const std::vector<int> &counts);

}  // namespace hbgsa
