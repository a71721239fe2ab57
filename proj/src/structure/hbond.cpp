//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/structure/hbond.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "hbgsa/error.hpp"

namespace hbgsa {
namespace {

constexpr double kGrid = 1000.0;
using IVec3 = std::array<std::int64_t, 3>;

IVec3 snap(const Vec3 &v) {
  return { std::llround(v[0] * kGrid), std::llround(v[1] * kGrid),
           std::llround(v[2] * kGrid) };
}

std::int64_t dist2(const IVec3 &a, const IVec3 &b) {
  std::int64_t s = 0;
  for (int k = 0; k < 3; ++k)
    s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

Vec3 to_double(const IVec3 &v) {
  return { v[0] / kGrid, v[1] / kGrid, v[2] / kGrid };
}

// Angle at h between h->d and h->a, degrees.
double angle_at(const IVec3 &d, const IVec3 &h, const IVec3 &a) {
  double u[3], w[3], uu = 0, ww = 0, uw = 0;
  for (int k = 0; k < 3; ++k) {
    u[k] = static_cast<double>(d[k] - h[k]);
    w[k] = static_cast<double>(a[k] - h[k]);
    uu += u[k] * u[k];
    ww += w[k] * w[k];
    uw += u[k] * w[k];
  }
  if (uu == 0.0 || ww == 0.0)
    return 0.0;
  const double c = std::clamp(uw / std::sqrt(uu * ww), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

struct Site {
  const Atom *atom;
  IVec3 pos;
  std::vector<IVec3> hydrogens;
};

std::vector<Site> polar_sites(const std::vector<Atom> &atoms,
                              std::int64_t h_cut2) {
  std::vector<IVec3> hs;
  for (const Atom &a: atoms)
    if (a.is_hydrogen())
      hs.push_back(snap(a.position));
  std::vector<Site> sites;
  for (const Atom &a: atoms) {
    if (!a.is_polar())
      continue;
    Site s { &a, snap(a.position), {} };
    for (const IVec3 &h: hs)
      if (dist2(s.pos, h) <= h_cut2)
        s.hydrogens.push_back(h);
    sites.push_back(std::move(s));
  }
  return sites;
}

}  // namespace

void HBondCriteria::validate() const {
  if (!(max_distance > 0.0))
    throw ConfigError("max_distance must be positive");
  if (!(min_angle_deg >= 0.0 && min_angle_deg <= 180.0))
    throw ConfigError("min_angle_deg must lie in [0, 180]");
  if (!(covalent_h_cutoff > 0.0))
    throw ConfigError("covalent_h_cutoff must be positive");
}

std::vector<double> HBondFeatureMatrix::flatten() const {
  std::vector<double> out;
  out.reserve(rows.size() * kHBondFeatureDim);
  for (const auto &r: rows)
    out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<HydrogenBond> detect_hbonds(const Complex &complex,
                                        const HBondCriteria &criteria) {
  criteria.validate();
  const std::int64_t max_d = std::llround(criteria.max_distance * kGrid);
  const std::int64_t h_cut = std::llround(criteria.covalent_h_cutoff * kGrid);
  const auto protein = polar_sites(complex.protein_atoms, h_cut * h_cut);
  const auto ligand = polar_sites(complex.ligand_atoms, h_cut * h_cut);

  std::vector<HydrogenBond> bonds;
  for (const Site &p: protein) {
    for (const Site &l: ligand) {
      const std::int64_t d2 = dist2(p.pos, l.pos);
      if (d2 > max_d * max_d)
        continue;
      HydrogenBond b;
      if (!p.hydrogens.empty() || !l.hydrogens.empty()) {
        double best = -1.0;
        for (const IVec3 &h: p.hydrogens)
          best = std::max(best, angle_at(p.pos, h, l.pos));
        for (const IVec3 &h: l.hydrogens)
          best = std::max(best, angle_at(l.pos, h, p.pos));
        if (best < criteria.min_angle_deg)
          continue;
        b.angle_deg = best;
      }
      b.protein_end = to_double(p.pos);
      b.ligand_end = to_double(l.pos);
      for (int k = 0; k < 3; ++k)
        b.midpoint[k] = (b.protein_end[k] + b.ligand_end[k]) / 2.0;
      b.distance = std::sqrt(static_cast<double>(d2)) / kGrid;
      b.protein_atom_serial = p.atom->serial;
      b.ligand_atom_serial = l.atom->serial;
      bonds.push_back(b);
    }
  }
  std::sort(bonds.begin(), bonds.end(),
            [](const HydrogenBond &a, const HydrogenBond &b) {
              return std::tie(a.distance, a.protein_atom_serial,
                              a.ligand_atom_serial)
                     < std::tie(b.distance, b.protein_atom_serial,
                                b.ligand_atom_serial);
            });
  return bonds;
}

HBondFeatureMatrix select_top_n(std::vector<HydrogenBond> bonds, int n) {
  if (n < 0)
    throw ConfigError("select_top_n: n must be non-negative");
  std::stable_sort(bonds.begin(), bonds.end(),
                   [](const HydrogenBond &a, const HydrogenBond &b) {
                     return std::tie(a.distance, a.protein_atom_serial,
                                     a.ligand_atom_serial)
                            < std::tie(b.distance, b.protein_atom_serial,
                                       b.ligand_atom_serial);
                   });
  HBondFeatureMatrix m;
  m.rows.assign(static_cast<std::size_t>(n), {});
  m.n_real = std::min(n, static_cast<int>(bonds.size()));
  for (int i = 0; i < m.n_real; ++i) {
    const auto &b = bonds[static_cast<std::size_t>(i)];
    auto &r = m.rows[static_cast<std::size_t>(i)];
    for (int k = 0; k < 3; ++k) {
      r[k] = b.protein_end[k];
      r[3 + k] = b.ligand_end[k];
      r[6 + k] = b.midpoint[k];
    }
  }
  return m;
}

HBondFeatureMatrix center_features(const HBondFeatureMatrix &matrix,
                                   const Complex &complex) {
  HBondFeatureMatrix out = matrix;
  if (matrix.n_real == 0 || complex.ligand_atoms.empty())
    return out;
  const auto n = static_cast<std::int64_t>(complex.ligand_atoms.size());
  IVec3 sum { 0, 0, 0 };
  for (const Atom &a: complex.ligand_atoms) {
    const IVec3 q = snap(a.position);
    for (int k = 0; k < 3; ++k)
      sum[k] += q[k];
  }
  // x - centroid = (n*x - sum) / n, evaluated as one rounding of an exact
  // integer ratio.
  for (int i = 0; i < matrix.n_real; ++i) {
    auto &r = out.rows[static_cast<std::size_t>(i)];
    for (int k = 0; k < 3; ++k) {
      const std::int64_t p = std::llround(r[k] * kGrid);
      const std::int64_t l = std::llround(r[3 + k] * kGrid);
      r[k] = static_cast<double>(n * p - sum[k]) / static_cast<double>(n * 1000);
      r[3 + k] = static_cast<double>(n * l - sum[k]) / static_cast<double>(n * 1000);
      r[6 + k] = static_cast<double>(n * (p + l) - 2 * sum[k])
                 / static_cast<double>(n * 2000);
    }
  }
  return out;
}

double hbond_density(int n_hbond, int n_ligand) {
  if (n_ligand == 0)
    throw NumericError("hbond_density: ligand atom count is zero");
  if (n_ligand < 0 || n_hbond < 0)
    throw DataError("hbond_density: counts must be non-negative");
  return static_cast<double>(n_hbond) / static_cast<double>(n_ligand);
}

HBondCountStats hbond_count_stats(const std::vector<int> &counts) {
  if (counts.empty())
    throw DataError("hbond_count_stats: no counts given");
  std::vector<int> s = counts;
  std::sort(s.begin(), s.end());
  HBondCountStats st;
  st.n = s.size();
  const double n = static_cast<double>(s.size());
  st.mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double ss = 0.0;
  for (int c: s)
    ss += (c - st.mean) * (c - st.mean);
  st.std = std::sqrt(ss / n);
  const std::size_t mid = s.size() / 2;
  st.median = s.size() % 2 ? s[mid] : 0.5 * (s[mid - 1] + s[mid]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * n));
  st.p95 = s[std::max<std::size_t>(rank, 1) - 1];
  st.coverage_at_20 =
      static_cast<double>(std::count_if(s.begin(), s.end(),
                                        [](int c) { return c <= 20; }))
      / n;
  return st;
}

std::vector<std::size_t> hbond_count_histogram(const std::vector<int> &counts) {
  if (counts.empty())
    return {};
  const int hi = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> hist(static_cast<std::size_t>(std::max(hi, 0)) + 1, 0);
  for (int c: counts)
    if (c >= 0)
      ++hist[static_cast<std::size_t>(c)];
  return hist;
}

}  // namespace hbgsa
