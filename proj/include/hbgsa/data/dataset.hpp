//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hbgsa/model/hbgsa_model.hpp"
#include "hbgsa/structure/hbond.hpp"
#include "hbgsa/structure/pdb.hpp"

namespace hbgsa {

struct ManifestEntry {
  std::string id;
  // Resolved against the manifest's directory; empty when the row has none.
  std::filesystem::path pdb_path;
  std::optional<std::string> ligand_resname;
  std::string smiles;
  std::string protein_seq;
  std::string pocket_seq;
  std::optional<double> affinity;
  int row = 0;  // 1-based line number in the manifest, header is line 1
};

inline constexpr std::string_view kManifestHeader =
    "id,pdb_path,ligand_resname,smiles,protein_seq,pocket_seq,affinity";

// CSV with the columns of kManifestHeader in any order; extra columns are
// ignored. Fields may be double-quoted. Throws DataError for a missing
// column, a duplicate id (citing both rows) or a malformed affinity.
std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::filesystem::path &base_dir = {});
std::vector<ManifestEntry> load_manifest(const std::filesystem::path &path);
std::string format_manifest(std::span<const ManifestEntry> entries);

// PDBbind index file: '#' comments, data lines "code resolution year
// affinity ...". Maps the code to the affinity column.
std::map<std::string, double> parse_pdbbind_index(std::string_view text);
std::map<std::string, double> load_pdbbind_index(const std::filesystem::path &path);

// One id per line (first whitespace-separated token); '#' starts a comment.
std::vector<std::string> parse_id_list(std::string_view text);
std::vector<std::string> load_id_list(const std::filesystem::path &path);

struct SplitSpec {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  // Throws DataError when an id appears in two sets or twice in one.
  void check_disjoint() const;
  std::string to_json() const;
  static SplitSpec from_json(const std::string &text);
  bool operator==(const SplitSpec &) const = default;
};

struct SplitOptions {
  std::size_t val_size = 1000;
  std::uint64_t seed = 0;
  // Removed from every set before splitting.
  std::vector<std::string> exclude;
};

// test = core; validation = seeded sample of refined minus core; train =
// the rest of general and refined, never touching core or validation. All
// lists come back sorted.
SplitSpec clean_and_split(std::span<const std::string> general,
                          std::span<const std::string> refined,
                          std::span<const std::string> core, const SplitOptions &options);

// Subset of `entries` whose ids are listed, in list order. Throws
// NotFoundError for an id missing from the manifest.
std::vector<ManifestEntry> select_entries(std::span<const ManifestEntry> entries,
                                          std::span<const std::string> ids);

struct EncodeOptions {
  HbgsaConfig shapes;  // only the input lengths and hbond_n are used
  HBondCriteria criteria;
  bool center = true;
  bool allow_missing_structure = false;
  bool strict = false;
  int threads = 1;
};

// Reads the structure of `entry`. The ligand formula atom count is the
// SMILES atom count (hydrogens included) times the number of ligand copies.
Complex load_complex(const ManifestEntry &entry);

// Featurizes one entry. A missing or empty pdb_path gives an all-zero bond
// block when allowed and NotFoundError otherwise.
EncodedSample encode_entry(const ManifestEntry &entry, const EncodeOptions &options);

// Digest of everything that changes the meaning of a cache: residue table,
// SMILES vocabulary, bond criteria, centering and input shapes.
std::uint64_t cache_schema_hash(const EncodeOptions &options);

// Binary sample cache, all integers little-endian:
//
//   "HBGC" | u32 version | u64 schema hash | u32 protein_len | u32 pocket_len |
//   u32 smiles_len | u32 hbond_n | u32 record count
//   per record: u32 id_len | id | f32 protein[protein_len*40] |
//               f32 pocket[pocket_len*40] | i32 smiles[smiles_len] |
//               f32 hbond[hbond_n*9] | u8 has_label | f64 label
inline constexpr std::uint32_t kCacheVersion = 1;

void write_cache(const std::filesystem::path &path, std::span<const EncodedSample> samples,
                 const EncodeOptions &options);
// Throws DataError if the file's schema hash differs from `options`.
std::vector<EncodedSample> read_cache(const std::filesystem::path &path,
                                      const EncodeOptions &options);
// Reads a cache written with any schema, returning the shapes it holds.
std::vector<EncodedSample> read_cache_any(const std::filesystem::path &path,
                                          HbgsaConfig *shapes = nullptr);

struct EncodeFailure {
  std::string id;
  std::string reason;
};

struct EncodeReport {
  std::size_t written = 0;
  std::vector<EncodeFailure> failures;
};

// Encodes every entry (in parallel when options.threads > 1) and writes the
// successes in manifest order. A failing entry is skipped with a warning,
// or aborts the run with DataError naming it under options.strict.
EncodeReport encode_and_cache(std::span<const ManifestEntry> entries,
                              const std::filesystem::path &cache_path,
                              const EncodeOptions &options);

}  // namespace hbgsa
