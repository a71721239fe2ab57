//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/data/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hbgsa/error.hpp"
#include "hbgsa/features/residues.hpp"
#include "hbgsa/features/smiles.hpp"

namespace hbgsa {
namespace {

static_assert(std::endian::native == std::endian::little,
              "cache and checkpoint I/O assume a little-endian host");

std::string read_text(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw NotFoundError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos)
      break;
    start = nl + 1;
  }
  return lines;
}

// RFC 4180 style: quotes around a field, "" inside quotes is a literal quote.
std::vector<std::string> split_csv_line(std::string_view line, int row) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && trim(cur).empty()) {
      quoted = was_quoted = true;
      cur.clear();
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted)
    throw ParseError("unterminated quoted field", row);
  out.push_back(was_quoted ? cur : std::string(trim(cur)));
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty())
    return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

// FNV-1a over raw bytes.
struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const unsigned char *>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void value(T v) {
    bytes(&v, sizeof v);
  }
};

void put_bytes(std::ostream &os, const void *p, std::size_t n) {
  os.write(static_cast<const char *>(p), static_cast<std::streamsize>(n));
}

template <class T>
void put(std::ostream &os, T v) {
  put_bytes(os, &v, sizeof v);
}

void get_bytes(std::istream &is, void *p, std::size_t n, const char *what) {
  if (!is.read(static_cast<char *>(p), static_cast<std::streamsize>(n)))
    throw DataError(std::string("cache truncated while reading ") + what);
}

template <class T>
T get(std::istream &is, const char *what) {
  T v;
  get_bytes(is, &v, sizeof v, what);
  return v;
}

constexpr std::array<char, 4> kCacheMagic { 'H', 'B', 'G', 'C' };

struct CacheHeader {
  std::uint64_t schema = 0;
  HbgsaConfig shapes;
  std::uint32_t count = 0;
};

CacheHeader read_header(std::istream &is) {
  std::array<char, 4> magic;
  if (!is.read(magic.data(), magic.size()) || magic != kCacheMagic)
    throw DataError("not a sample cache (bad magic)");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kCacheVersion)
    throw DataError("unsupported cache version " + std::to_string(version));
  CacheHeader h;
  h.schema = get<std::uint64_t>(is, "schema hash");
  h.shapes.protein_len = static_cast<int>(get<std::uint32_t>(is, "protein length"));
  h.shapes.pocket_len = static_cast<int>(get<std::uint32_t>(is, "pocket length"));
  h.shapes.smiles_len = static_cast<int>(get<std::uint32_t>(is, "smiles length"));
  h.shapes.hbond_n = static_cast<int>(get<std::uint32_t>(is, "bond rows"));
  h.count = get<std::uint32_t>(is, "record count");
  return h;
}

std::vector<EncodedSample> read_records(std::istream &is, const CacheHeader &h) {
  const auto plen = static_cast<std::size_t>(h.shapes.protein_len);
  const auto klen = static_cast<std::size_t>(h.shapes.pocket_len);
  const auto slen = static_cast<std::size_t>(h.shapes.smiles_len);
  const auto blen = static_cast<std::size_t>(h.shapes.hbond_n);
  std::vector<EncodedSample> out;
  out.reserve(h.count);
  for (std::uint32_t r = 0; r < h.count; ++r) {
    EncodedSample s;
    s.id.resize(get<std::uint32_t>(is, "id length"));
    get_bytes(is, s.id.data(), s.id.size(), "id");
    s.protein = nn::Tensor<float>({ plen, kResidueFeatureDim });
    get_bytes(is, s.protein.values().data(), s.protein.size() * 4, "protein block");
    s.pocket = nn::Tensor<float>({ klen, kResidueFeatureDim });
    get_bytes(is, s.pocket.values().data(), s.pocket.size() * 4, "pocket block");
    s.smiles.resize(slen);
    get_bytes(is, s.smiles.data(), slen * 4, "smiles block");
    s.hbond = nn::Tensor<float>({ blen, kHBondFeatureDim });
    get_bytes(is, s.hbond.values().data(), s.hbond.size() * 4, "bond block");
    const auto has_label = get<std::uint8_t>(is, "label flag");
    const auto label = get<double>(is, "label");
    if (has_label)
      s.affinity = label;
    out.push_back(std::move(s));
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw DataError("cache has trailing bytes after the last record");
  return out;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::string_view text,
                                          const std::filesystem::path &base_dir) {
  const auto lines = split_lines(text);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty())
    ++first;
  if (first == lines.size())
    throw DataError("manifest is empty (no header)");
  const int header_row = static_cast<int>(first) + 1;
  const auto header = split_csv_line(lines[first], header_row);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i)
    col.emplace(header[i], i);
  std::vector<std::size_t> idx;
  for (const auto name: { "id", "pdb_path", "ligand_resname", "smiles", "protein_seq",
                          "pocket_seq", "affinity" }) {
    const auto it = col.find(name);
    if (it == col.end())
      throw DataError(std::string("manifest is missing required column '") + name + "'");
    idx.push_back(it->second);
  }

  std::vector<ManifestEntry> out;
  std::unordered_map<std::string, int> seen;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    const int row = static_cast<int>(li) + 1;
    if (trim(lines[li]).empty())
      continue;
    const auto f = split_csv_line(lines[li], row);
    if (f.size() < header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found "
                           + std::to_string(f.size()),
                       row);
    ManifestEntry e;
    e.row = row;
    e.id = f[idx[0]];
    if (e.id.empty())
      throw ParseError("empty id", row);
    if (const auto [it, fresh] = seen.emplace(e.id, row); !fresh)
      throw DataError("duplicate id '" + e.id + "' on rows " + std::to_string(it->second)
                      + " and " + std::to_string(row));
    if (!f[idx[1]].empty()) {
      std::filesystem::path p(f[idx[1]]);
      e.pdb_path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
    if (!f[idx[2]].empty())
      e.ligand_resname = f[idx[2]];
    e.smiles = f[idx[3]];
    e.protein_seq = f[idx[4]];
    e.pocket_seq = f[idx[5]];
    if (!f[idx[6]].empty()) {
      e.affinity = parse_double(f[idx[6]]);
      if (!e.affinity)
        throw ParseError("affinity '" + f[idx[6]] + "' is not a finite number", row);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path &path) {
  return parse_manifest(read_text(path), path.parent_path());
}

std::string format_manifest(std::span<const ManifestEntry> entries) {
  auto field = [](const std::string &s) {
    if (s.find_first_of(",\"") == std::string::npos)
      return s;
    std::string q = "\"";
    for (char c: s)
      q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto &e: entries) {
    char aff[32] = "";
    if (e.affinity)
      std::snprintf(aff, sizeof aff, "%.17g", *e.affinity);
    out += field(e.id) + "," + field(e.pdb_path.string()) + ","
           + field(e.ligand_resname.value_or("")) + "," + field(e.smiles) + ","
           + field(e.protein_seq) + "," + field(e.pocket_seq) + "," + aff + "\n";
  }
  return out;
}

std::map<std::string, double> parse_pdbbind_index(std::string_view text) {
  std::map<std::string, double> out;
  const auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int row = static_cast<int>(li) + 1;
    const auto line = trim(lines[li]);
    if (line.empty() || line.front() == '#')
      continue;
    std::istringstream ss { std::string(line) };
    std::vector<std::string> tok;
    for (std::string t; ss >> t && tok.size() < 4;)
      tok.push_back(t);
    if (tok.size() < 4)
      throw ParseError("expected at least 4 fields (code resolution year affinity)", row);
    if (tok[0].size() != 4)
      throw ParseError("'" + tok[0] + "' is not a 4-character PDB code", row);
    const auto v = parse_double(tok[3]);
    if (!v)
      throw ParseError("affinity field '" + tok[3] + "' is not numeric", row);
    out[tok[0]] = *v;
  }
  return out;
}

std::map<std::string, double> load_pdbbind_index(const std::filesystem::path &path) {
  try {
    return parse_pdbbind_index(read_text(path));
  } catch (const ParseError &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> parse_id_list(std::string_view text) {
  std::vector<std::string> out;
  for (auto line: split_lines(text)) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    std::istringstream ss { std::string(line) };
    if (std::string id; ss >> id)
      out.push_back(id);
  }
  return out;
}

std::vector<std::string> load_id_list(const std::filesystem::path &path) {
  return parse_id_list(read_text(path));
}

void SplitSpec::check_disjoint() const {
  std::unordered_map<std::string, const char *> owner;
  for (const auto &[name, ids]: { std::pair<const char *, const std::vector<std::string> *> {
                                      "train", &train },
                                  { "validation", &validation },
                                  { "test", &test } }) {
    for (const auto &id: *ids) {
      const auto [it, fresh] = owner.emplace(id, name);
      if (!fresh)
        throw DataError("id '" + id + "' appears in both " + it->second + " and " + name);
    }
  }
}

std::string SplitSpec::to_json() const {
  nlohmann::ordered_json j;
  j["train"] = train;
  j["validation"] = validation;
  j["test"] = test;
  return j.dump(2);
}

SplitSpec SplitSpec::from_json(const std::string &text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SplitSpec s;
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    s.check_disjoint();
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("invalid split JSON: ") + e.what());
  }
}

SplitSpec clean_and_split(std::span<const std::string> general,
                          std::span<const std::string> refined,
                          std::span<const std::string> core, const SplitOptions &options) {
  const std::set<std::string> excluded(options.exclude.begin(), options.exclude.end());
  auto clean = [&](std::span<const std::string> ids) {
    std::set<std::string> s;
    for (const auto &id: ids)
      if (!excluded.count(id))
        s.insert(id);
    return s;
  };
  const auto core_set = clean(core);
  std::vector<std::string> refined_rest;
  for (const auto &id: clean(refined))
    if (!core_set.count(id))
      refined_rest.push_back(id);
  if (options.val_size > refined_rest.size())
    throw DataError("validation size " + std::to_string(options.val_size)
                    + " exceeds the " + std::to_string(refined_rest.size())
                    + " refined ids left after removing the core set");

  std::vector<std::string> shuffled = refined_rest;
  std::mt19937_64 rng(options.seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::set<std::string> val(shuffled.begin(),
                                  shuffled.begin() + static_cast<std::ptrdiff_t>(options.val_size));

  std::set<std::string> train;
  for (const auto &id: clean(general))
    if (!core_set.count(id) && !val.count(id))
      train.insert(id);
  for (const auto &id: refined_rest)
    if (!val.count(id))
      train.insert(id);

  SplitSpec spec;
  spec.train.assign(train.begin(), train.end());
  spec.validation.assign(val.begin(), val.end());
  spec.test.assign(core_set.begin(), core_set.end());
  spec.check_disjoint();
  return spec;
}

std::vector<ManifestEntry> select_entries(std::span<const ManifestEntry> entries,
                                          std::span<const std::string> ids) {
  std::unordered_map<std::string, const ManifestEntry *> by_id;
  for (const auto &e: entries)
    by_id.emplace(e.id, &e);
  std::vector<ManifestEntry> out;
  for (const auto &id: ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw NotFoundError("id '" + id + "' is not in the manifest");
    out.push_back(*it->second);
  }
  return out;
}

Complex load_complex(const ManifestEntry &entry) {
  Complex c = read_pdb_file(entry.pdb_path, entry.ligand_resname);
  if (c.pdb_id.empty())
    c.pdb_id = entry.id;
  if (!entry.smiles.empty() && !c.ligand_atoms.empty())
    c.ligand_formula_atom_count =
        smiles_atom_count(entry.smiles) * count_ligand_copies(c.ligand_atoms);
  return c;
}

EncodedSample encode_entry(const ManifestEntry &entry, const EncodeOptions &options) {
  const HbgsaConfig &shapes = options.shapes;
  EncodedSample s;
  s.id = entry.id;
  s.affinity = entry.affinity;
  s.protein = encode_protein(entry.protein_seq, shapes.protein_len);
  s.pocket = encode_pocket(entry.pocket_seq, shapes.pocket_len);
  s.smiles = encode_smiles(entry.smiles, shapes.smiles_len);
  const auto rows = static_cast<std::size_t>(shapes.hbond_n);
  s.hbond = nn::Tensor<float>({ rows, kHBondFeatureDim });

  const bool missing = entry.pdb_path.empty() || !std::filesystem::exists(entry.pdb_path);
  if (missing) {
    if (options.allow_missing_structure)
      return s;
    throw NotFoundError(entry.pdb_path.empty()
                            ? "no structure file given"
                            : "structure file " + entry.pdb_path.string() + " not found");
  }
  const Complex complex = load_complex(entry);
  if (complex.ligand_atoms.empty())
    throw DataError("no ligand atoms found in " + entry.pdb_path.string());
  HBondFeatureMatrix m = select_top_n(detect_hbonds(complex, options.criteria), shapes.hbond_n);
  if (options.center)
    m = center_features(m, complex);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < static_cast<std::size_t>(kHBondFeatureDim); ++c)
      s.hbond.at(r, c) = static_cast<float>(m.rows[r][c]);
  return s;
}

std::uint64_t cache_schema_hash(const EncodeOptions &options) {
  Fnv f;
  f.value(kCacheVersion);
  f.value(residue_table_checksum());
  f.value(SmilesVocabulary::standard().checksum());
  f.value(options.criteria.max_distance);
  f.value(options.criteria.min_angle_deg);
  f.value(options.criteria.covalent_h_cutoff);
  f.value(static_cast<std::uint8_t>(options.center));
  f.value(options.shapes.protein_len);
  f.value(options.shapes.pocket_len);
  f.value(options.shapes.smiles_len);
  f.value(options.shapes.hbond_n);
  return f.h;
}

void write_cache(const std::filesystem::path &path, std::span<const EncodedSample> samples,
                 const EncodeOptions &options) {
  const HbgsaConfig &shapes = options.shapes;
  for (const auto &s: samples)
    check_sample_shapes(s, shapes);
  // Write beside the target and rename so readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os)
      throw DataError("cannot write " + tmp.string());
    put_bytes(os, kCacheMagic.data(), kCacheMagic.size());
    put(os, kCacheVersion);
    put(os, cache_schema_hash(options));
    put(os, static_cast<std::uint32_t>(shapes.protein_len));
    put(os, static_cast<std::uint32_t>(shapes.pocket_len));
    put(os, static_cast<std::uint32_t>(shapes.smiles_len));
    put(os, static_cast<std::uint32_t>(shapes.hbond_n));
    put(os, static_cast<std::uint32_t>(samples.size()));
    for (const auto &s: samples) {
      put(os, static_cast<std::uint32_t>(s.id.size()));
      put_bytes(os, s.id.data(), s.id.size());
      put_bytes(os, s.protein.values().data(), s.protein.size() * 4);
      put_bytes(os, s.pocket.values().data(), s.pocket.size() * 4);
      put_bytes(os, s.smiles.data(), s.smiles.size() * 4);
      put_bytes(os, s.hbond.values().data(), s.hbond.size() * 4);
      put(os, static_cast<std::uint8_t>(s.affinity.has_value()));
      put(os, s.affinity.value_or(0.0));
    }
    if (!os.flush())
      throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<EncodedSample> read_cache(const std::filesystem::path &path,
                                      const EncodeOptions &options) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw NotFoundError("cannot open cache " + path.string());
  const CacheHeader h = read_header(is);
  if (h.schema != cache_schema_hash(options))
    throw DataError("cache " + path.string()
                    + " was written with a different schema (feature tables, bond "
                      "criteria or input shapes); re-run encode");
  return read_records(is, h);
}

std::vector<EncodedSample> read_cache_any(const std::filesystem::path &path,
                                          HbgsaConfig *shapes) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw NotFoundError("cannot open cache " + path.string());
  const CacheHeader h = read_header(is);
  if (shapes) {
    shapes->protein_len = h.shapes.protein_len;
    shapes->pocket_len = h.shapes.pocket_len;
    shapes->smiles_len = h.shapes.smiles_len;
    shapes->hbond_n = h.shapes.hbond_n;
  }
  return read_records(is, h);
}

EncodeReport encode_and_cache(std::span<const ManifestEntry> entries,
                              const std::filesystem::path &cache_path,
                              const EncodeOptions &options) {
  options.criteria.validate();
  const std::size_t n = entries.size();
  std::vector<std::optional<EncodedSample>> done(n);
  std::vector<std::string> errors(n);
  auto work = [&](std::size_t i) {
    try {
      done[i] = encode_entry(entries[i], options);
    } catch (const std::exception &e) {
      errors[i] = e.what();
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, options.threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers)
          work(i);
      });
    for (auto &t: pool)
      t.join();
  }

  EncodeReport report;
  std::vector<EncodedSample> ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) {
      ok.push_back(std::move(*done[i]));
      continue;
    }
    if (options.strict)
      throw DataError("entry '" + entries[i].id + "' (manifest row "
                      + std::to_string(entries[i].row) + "): " + errors[i]);
    spdlog::warn("skipping '{}': {}", entries[i].id, errors[i]);
    report.failures.push_back({ entries[i].id, errors[i] });
  }
  write_cache(cache_path, ok, options);
  report.written = ok.size();
  return report;
}

}  // namespace hbgsa
