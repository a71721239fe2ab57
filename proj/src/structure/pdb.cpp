//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/structure/pdb.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "hbgsa/error.hpp"

namespace hbgsa {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// 1-based inclusive column range, clipped to the line.
std::string_view columns(std::string_view line, std::size_t first,
                         std::size_t last) {
  if (line.size() < first)
    return {};
  return line.substr(first - 1, std::min(last, line.size()) - first + 1);
}

int parse_int(std::string_view field, const char *what, int line_no) {
  field = trim(field);
  int v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(std::string("unparseable ") + what + " '"
                         + std::string(field) + "'",
                     line_no);
  return v;
}

double parse_coord(std::string_view field, const char *axis, int line_no) {
  field = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()
      || !std::isfinite(v))
    throw ParseError(std::string("unparseable ") + axis + " coordinate '"
                         + std::string(field) + "'",
                     line_no);
  return v;
}

std::string normalize_element(std::string_view sym) {
  std::string out;
  for (char c: sym)
    if (std::isalpha(static_cast<unsigned char>(c)))
      out.push_back(out.empty()
                        ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                        : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

// Two-letter elements recognized when a HETATM name starts in column 13.
// Mercury is left out on purpose: "HG1"-style hydrogen names are far more
// common than Hg ions.
bool is_two_letter_element(std::string_view upper2) {
  static const std::set<std::string_view> kTwo { "CL", "BR", "FE", "ZN",
                                                 "MG", "CA", "NA", "MN",
                                                 "CU", "CO", "NI", "SE",
                                                 "CD", "LI", "AL", "SI" };
  return kTwo.contains(upper2);
}

std::string infer_element(std::string_view raw_name, RecordKind kind) {
  if (raw_name.empty())
    return {};
  const auto alpha = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  };
  if (alpha(raw_name[0])) {
    if (kind == RecordKind::kHetatm && raw_name.size() >= 2 && alpha(raw_name[1])) {
      std::string two { static_cast<char>(std::toupper(static_cast<unsigned char>(raw_name[0]))),
                        static_cast<char>(std::toupper(static_cast<unsigned char>(raw_name[1]))) };
      if (is_two_letter_element(two))
        return normalize_element(two);
    }
    return normalize_element(raw_name.substr(0, 1));
  }
  for (char c: raw_name.substr(1))
    if (alpha(c))
      return normalize_element(std::string_view(&c, 1));
  return {};
}

}  // namespace

bool Atom::is_polar() const noexcept {
  return element == "N" || element == "O" || element == "S";
}

bool Atom::is_hydrogen() const noexcept {
  return element == "H" || element == "D";
}

bool is_water_residue(std::string_view residue_name) noexcept {
  return residue_name == "HOH" || residue_name == "WAT"
         || residue_name == "DOD" || residue_name == "H2O";
}

std::vector<Atom> parse_pdb_atoms(std::string_view text) {
  std::vector<Atom> atoms;
  // (record, chain, residue number, atom name) of atoms kept so far that
  // carried an alternate-location indicator.
  std::set<std::tuple<int, char, int, std::string>> altloc_seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);

    if (line.starts_with("ENDMDL"))
      break;
    const bool is_atom = line.starts_with("ATOM  ");
    const bool is_het = line.starts_with("HETATM");
    if (!is_atom && !is_het)
      continue;
    if (line.size() < 54)
      throw ParseError("atom record shorter than the coordinate columns ("
                           + std::to_string(line.size()) + " < 54)",
                       line_no);

    Atom a;
    a.record_kind = is_het ? RecordKind::kHetatm : RecordKind::kAtom;
    a.residue_name = std::string(trim(columns(line, 18, 20)));
    if (is_water_residue(a.residue_name))
      continue;
    a.serial = parse_int(columns(line, 7, 11), "serial", line_no);
    const std::string_view raw_name = columns(line, 13, 16);
    a.name = std::string(trim(raw_name));
    a.chain_id = line[21];
    a.residue_seq = parse_int(columns(line, 23, 26), "residue number", line_no);
    a.position = { parse_coord(columns(line, 31, 38), "x", line_no),
                   parse_coord(columns(line, 39, 46), "y", line_no),
                   parse_coord(columns(line, 47, 54), "z", line_no) };
    a.element = normalize_element(trim(columns(line, 77, 78)));
    if (a.element.empty())
      a.element = infer_element(raw_name, a.record_kind);
    if (a.element.empty())
      throw ParseError("cannot determine element for atom '" + a.name + "'",
                       line_no);

    const char altloc = line[16];
    if (altloc != ' ') {
      auto key = std::make_tuple(static_cast<int>(a.record_kind), a.chain_id,
                                 a.residue_seq, a.name);
      if (!altloc_seen.insert(std::move(key)).second)
        continue;
    }
    atoms.push_back(std::move(a));
  }
  if (atoms.empty())
    throw DataError("structure contains no atoms");
  return atoms;
}

Partition partition(const std::vector<Atom> &atoms,
                    const std::optional<std::string> &ligand_residue_name) {
  Partition out;
  for (const Atom &a: atoms) {
    if (is_water_residue(a.residue_name))
      continue;
    if (a.record_kind == RecordKind::kAtom)
      out.protein.push_back(a);
    else if (!ligand_residue_name || a.residue_name == *ligand_residue_name)
      out.ligand.push_back(a);
  }
  if (ligand_residue_name && out.ligand.empty())
    throw NotFoundError("ligand residue '" + *ligand_residue_name
                        + "' not found among HETATM records");
  return out;
}

Complex parse_pdb(std::string_view text,
                  const std::optional<std::string> &ligand_residue_name) {
  Complex c;
  if (text.starts_with("HEADER") && text.size() >= 66)
    c.pdb_id = std::string(trim(text.substr(62, 4)));
  auto parts = partition(parse_pdb_atoms(text), ligand_residue_name);
  c.protein_atoms = std::move(parts.protein);
  c.ligand_atoms = std::move(parts.ligand);
  return c;
}

Complex read_pdb_file(const std::filesystem::path &path,
                      const std::optional<std::string> &ligand_residue_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw NotFoundError("cannot open structure file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Complex c;
  try {
    c = parse_pdb(ss.str(), ligand_residue_name);
  } catch (const ParseError &e) {
    throw ParseError(path.filename().string() + ": " + e.what(), 0);
  }
  if (c.pdb_id.empty())
    c.pdb_id = path.stem().string();
  return c;
}

int count_ligand_copies(const std::vector<Atom> &ligand_atoms) {
  std::set<std::tuple<char, int, std::string>> groups;
  for (const Atom &a: ligand_atoms)
    groups.emplace(a.chain_id, a.residue_seq, a.residue_name);
  return static_cast<int>(groups.size());
}

int count_ligand_atoms(const Complex &complex) {
  if (complex.ligand_formula_atom_count)
    return *complex.ligand_formula_atom_count;
  return static_cast<int>(complex.ligand_atoms.size());
}

std::string format_atom_line(const Atom &a) {
  std::string name = a.name;
  if (name.size() < 4 && a.element.size() < 2)
    name = " " + name;
  name.resize(4, ' ');
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "%-6s%5d %4s %3s %c%4d    %8.3f%8.3f%8.3f%6.2f%6.2f          %2s",
                a.record_kind == RecordKind::kAtom ? "ATOM" : "HETATM",
                a.serial, name.c_str(), a.residue_name.c_str(), a.chain_id,
                a.residue_seq, a.position[0], a.position[1], a.position[2],
                1.0, 0.0, a.element.c_str());
  return buf;
}

}  // namespace hbgsa
