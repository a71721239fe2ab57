//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hbgsa {

using Vec3 = std::array<double, 3>;

enum class RecordKind { kAtom, kHetatm };

struct Atom {
  int serial = 0;
  std::string name;     // trimmed, e.g. "OG1"
  std::string element;  // normalized case, e.g. "N", "Cl"
  std::string residue_name;
  int residue_seq = 0;
  char chain_id = ' ';
  Vec3 position { 0.0, 0.0, 0.0 };
  RecordKind record_kind = RecordKind::kAtom;

  bool is_polar() const noexcept;
  bool is_hydrogen() const noexcept;
  bool operator==(const Atom &) const = default;
};

struct Complex {
  std::string pdb_id;
  std::vector<Atom> protein_atoms;
  std::vector<Atom> ligand_atoms;
  // Formula atom count (hydrogens included) over all ligand copies.
  std::optional<int> ligand_formula_atom_count;
};

struct Partition {
  std::vector<Atom> protein;
  std::vector<Atom> ligand;
};

bool is_water_residue(std::string_view residue_name) noexcept;

// Every non-water ATOM/HETATM record of the first model, first altloc only.
// Throws ParseError (with line number) on malformed records and DataError
// when no atoms remain.
std::vector<Atom> parse_pdb_atoms(std::string_view text);

// ATOM -> protein; HETATM -> ligand, restricted to `ligand_residue_name`
// when given (other HETATM groups are dropped). Throws NotFoundError if the
// named residue is absent.
Partition partition(const std::vector<Atom> &atoms,
                    const std::optional<std::string> &ligand_residue_name = {});

// parse_pdb_atoms + partition. pdb_id comes from the HEADER record when
// present.
Complex parse_pdb(std::string_view text,
                  const std::optional<std::string> &ligand_residue_name = {});

Complex read_pdb_file(const std::filesystem::path &path,
                      const std::optional<std::string> &ligand_residue_name = {});

// Number of distinct (chain, residue number, residue name) groups.
int count_ligand_copies(const std::vector<Atom> &ligand_atoms);

// Formula count when known, otherwise the number of ligand records.
int count_ligand_atoms(const Complex &complex);

// Fixed-width 80-column ATOM/HETATM line; coordinates to 3 decimals.
std::string format_atom_line(const Atom &atom);

}  // namespace hbgsa
