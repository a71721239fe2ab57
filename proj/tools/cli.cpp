//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "hbgsa/data/dataset.hpp"
#include "hbgsa/error.hpp"
#include "hbgsa/features/smiles.hpp"
#include "hbgsa/nn/checkpoint.hpp"
#include "hbgsa/structure/hbond.hpp"
#include "hbgsa/structure/pdb.hpp"
#include "hbgsa/training.hpp"

namespace hbgsa::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_file(const fs::path &path, const std::string &text) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os || !(os << text) || !os.flush())
    throw DataError("cannot write " + path.string());
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw NotFoundError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to `path`, or to `out` when the path is empty.
void emit(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty())
    out << text;
  else
    write_file(path, text);
}

std::string config_path_for(const std::string &checkpoint) { return checkpoint + ".cfg"; }

struct Model {
  HbgsaConfig cfg;
  nn::ParamStore<float> params;
};

Model load_model(const std::string &checkpoint) {
  Model m;
  m.cfg = HbgsaConfig::load(config_path_for(checkpoint));
  m.params = nn::load_checkpoint(checkpoint);
  const auto expected = build_params<float>(m.cfg, 0);
  if (expected.size() != m.params.size())
    throw DataError("checkpoint " + checkpoint + " does not match its model config");
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (expected[i].name != m.params[i].name
        || expected[i].value.shape() != m.params[i].value.shape())
      throw DataError("checkpoint parameter '" + m.params[i].name
                      + "' does not match the model config");
  return m;
}

void save_model(const std::string &checkpoint, const nn::ParamStore<float> &params,
                const HbgsaConfig &cfg) {
  const fs::path p(checkpoint);
  if (p.has_parent_path())
    fs::create_directories(p.parent_path());
  nn::save_checkpoint(p, params);
  cfg.save(config_path_for(checkpoint));
}

// Options shared by the training-style subcommands.
struct TrainFlags {
  std::string cache;
  std::string split;
  std::string config;
  std::string variant;
  bool mask_padded = false;
  double lambda = 50.0;
  int batch_size = 64;
  int epochs = 300;
  double lr = 1e-4;
  int patience = 30;
  std::string optimizer = "adam";
  double clip = 5.0;
  std::uint64_t seed = 0;
  int threads = 1;
  bool strict_ci = false;

  void add_to(CLI::App *sub, bool with_split) {
    sub->add_option("--cache", cache, "Encoded sample cache")->required();
    if (with_split)
      sub->add_option("--split", split,
                      "Split JSON from `split`; without it every cached sample trains");
    sub->add_option("--config", config, "Model config file (key = value)");
    sub->add_option("--variant", variant, "Ablation variant applied to the model config");
    sub->add_flag("--mask-padded-hbonds", mask_padded,
                  "Exclude zero-padded bond rows from the neighbor graph and pooling");
    sub->add_option("--lambda", lambda, "Weight of the correlation loss term")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--batch-size", batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    sub->add_option("--epochs", epochs, "Maximum number of epochs")->check(CLI::PositiveNumber);
    sub->add_option("--lr", lr, "Learning rate")->check(CLI::PositiveNumber);
    sub->add_option("--patience", patience, "Early-stopping patience in epochs")
        ->check(CLI::PositiveNumber);
    sub->add_option("--optimizer", optimizer, "adam or sgd")
        ->check(CLI::IsMember({ "adam", "sgd" }));
    sub->add_option("--clip-norm", clip, "Global gradient norm cap, 0 disables")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "Seed for initialization, shuffling and dropout");
    sub->add_option("--threads", threads, "Worker threads for evaluation")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--strict-ci", strict_ci, "Count tied predictions as discordant");
  }

  TrainConfig train_config() const {
    TrainConfig c;
    c.batch_size = batch_size;
    c.max_epochs = epochs;
    c.learning_rate = lr;
    c.optimizer = optimizer == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
    c.early_stop_patience = patience;
    c.seed = seed;
    c.lambda = lambda;
    c.clip_norm = clip;
    c.strict_ci = strict_ci;
    c.validate();
    return c;
  }

  // Model config with its input lengths taken from the cache.
  HbgsaConfig model_config(const HbgsaConfig &cache_shapes) const {
    HbgsaConfig m = config.empty() ? HbgsaConfig {} : HbgsaConfig::load(config);
    if (!variant.empty())
      m = ablation_variant(m, variant);
    if (mask_padded)
      m.mask_padded_hbonds = true;
    m.lambda_pearson = lambda;
    m.protein_len = cache_shapes.protein_len;
    m.pocket_len = cache_shapes.pocket_len;
    m.smiles_len = cache_shapes.smiles_len;
    m.hbond_n = cache_shapes.hbond_n;
    m.validate();
    return m;
  }
};

struct Splits {
  std::vector<EncodedSample> train, validation, test;
};

std::vector<EncodedSample> pick(const std::vector<EncodedSample> &all,
                                const std::vector<std::string> &ids, const char *set) {
  std::unordered_map<std::string, const EncodedSample *> by_id;
  for (const auto &s: all)
    by_id.emplace(s.id, &s);
  std::vector<EncodedSample> out;
  for (const auto &id: ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      spdlog::warn("{} id '{}' is not in the cache; skipped", set, id);
      continue;
    }
    out.push_back(*it->second);
  }
  return out;
}

Splits load_splits(const std::vector<EncodedSample> &all, const std::string &split_path) {
  Splits s;
  if (split_path.empty()) {
    s.train = all;
    return s;
  }
  const SplitSpec spec = SplitSpec::from_json(read_file(split_path));
  s.train = pick(all, spec.train, "train");
  s.validation = pick(all, spec.validation, "validation");
  s.test = pick(all, spec.test, "test");
  return s;
}

std::vector<EncodedSample> load_cache(const std::string &path, HbgsaConfig &shapes) {
  auto samples = read_cache_any(path, &shapes);
  if (samples.empty())
    throw DataError("cache " + path + " holds no samples");
  return samples;
}

void print_resolved(const CLI::App &sub, std::ostream &err) {
  ordered_json j;
  j["command"] = sub.get_name();
  for (const CLI::Option *opt: sub.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help")
      continue;
    const std::string &name = opt->get_lnames()[0];
    if (opt->get_type_size() == 0 && opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto res = opt->results();
      if (res.size() == 1)
        j[name] = res[0];
      else
        j[name] = res;
    } else {
      j[name] = opt->get_default_str();
    }
  }
  err << "config: " << j.dump() << '\n';
}

std::vector<double> labels_of(std::span<const EncodedSample> samples) {
  std::vector<double> y;
  for (const auto &s: samples) {
    if (!s.affinity)
      throw DataError("sample '" + s.id + "' has no affinity label");
    y.push_back(*s.affinity);
  }
  return y;
}

// --- subcommands ---------------------------------------------------------

struct HbondExtract {
  std::string pdb, ligand, out;
  double max_distance = 3.5, min_angle = 120.0;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand("hbond-extract", "Detect hydrogen bonds; one JSON line per bond");
    sub->add_option("--pdb", pdb, "Complex in PDB format")->required()->check(CLI::ExistingFile);
    sub->add_option("--ligand", ligand, "Ligand residue name (default: largest HETATM group)");
    sub->add_option("--max-distance", max_distance, "Donor-acceptor cutoff in angstrom");
    sub->add_option("--min-angle", min_angle, "Minimum D-H...A angle in degrees");
    sub->add_option("--out", out, "Output file (default stdout)");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    HBondCriteria c;
    c.max_distance = max_distance;
    c.min_angle_deg = min_angle;
    c.validate();
    const Complex complex = read_pdb_file(
        pdb, ligand.empty() ? std::nullopt : std::optional<std::string>(ligand));
    std::string text;
    for (const auto &b: detect_hbonds(complex, c)) {
      ordered_json j;
      j["protein_serial"] = b.protein_atom_serial;
      j["ligand_serial"] = b.ligand_atom_serial;
      j["distance"] = b.distance;
      j["angle_deg"] = b.angle_deg ? ordered_json(*b.angle_deg) : ordered_json(nullptr);
      j["protein_end"] = b.protein_end;
      j["ligand_end"] = b.ligand_end;
      j["midpoint"] = b.midpoint;
      text += j.dump() + "\n";
    }
    emit(out, text, o);
  }
};

struct HbondDensity {
  std::string pdb, ligand, smiles, out;
  int n_hbond = -1, n_ligand = -1;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand(
        "hbond-density", "Hydrogen bonds per ligand atom, from a structure or from counts");
    auto *p = sub->add_option("--pdb", pdb, "Complex in PDB format")->check(CLI::ExistingFile);
    sub->add_option("--smiles", smiles, "Ligand SMILES (gives the formula atom count)")
        ->needs(p);
    sub->add_option("--ligand", ligand, "Ligand residue name")->needs(p);
    auto *nh = sub->add_option("--n-hbond", n_hbond, "Bond count (instead of --pdb)")
                   ->excludes(p)
                   ->check(CLI::NonNegativeNumber);
    sub->add_option("--n-ligand", n_ligand, "Ligand atom count (with --n-hbond)")
        ->needs(nh)
        ->check(CLI::PositiveNumber);
    nh->needs(sub->get_option("--n-ligand"));
    sub->add_option("--out", out, "Append a CSV record id,n_hbond,n_ligand,density");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    std::string id = "counts";
    int nh = n_hbond, nl = n_ligand;
    if (!pdb.empty()) {
      ManifestEntry e;
      e.id = fs::path(pdb).stem().string();
      e.pdb_path = pdb;
      if (!ligand.empty())
        e.ligand_resname = ligand;
      e.smiles = smiles;
      const Complex c = load_complex(e);
      id = e.id;
      nh = static_cast<int>(detect_hbonds(c).size());
      nl = count_ligand_atoms(c);
    } else if (n_hbond < 0) {
      throw ConfigError("give --pdb or --n-hbond with --n-ligand");
    }
    const double d = hbond_density(nh, nl);
    ordered_json j;
    j["id"] = id;
    j["n_hbond"] = nh;
    j["n_ligand"] = nl;
    j["density"] = d;
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * d);
    j["density_percent"] = pct;
    o << j.dump() << '\n';
    if (!out.empty()) {
      const bool fresh = !fs::exists(out);
      std::ofstream os(out, std::ios::app);
      if (!os)
        throw DataError("cannot write " + out);
      if (fresh)
        os << "id,n_hbond,n_ligand,density\n";
      os << id << ',' << nh << ',' << nl << ',' << num(d) << '\n';
    }
  }
};

struct HbondStats {
  std::string manifest, out;
  int threads = 1;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand(
        "hbond-stats", "Bond-count statistics over a manifest plus a histogram CSV");
    sub->add_option("--manifest", manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Histogram CSV n_hbonds,complexes");
    sub->add_option("--threads", threads, "Worker threads (accepted for uniformity)")
        ->check(CLI::PositiveNumber);
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    std::vector<int> counts;
    for (const auto &e: load_manifest(manifest)) {
      try {
        counts.push_back(static_cast<int>(detect_hbonds(load_complex(e)).size()));
      } catch (const DataError &ex) {
        spdlog::warn("skipping '{}': {}", e.id, ex.what());
      }
    }
    if (counts.empty())
      throw DataError("no readable structures in " + manifest);
    const auto s = hbond_count_stats(counts);
    ordered_json j;
    j["n"] = s.n;
    j["mean"] = s.mean;
    j["median"] = s.median;
    j["std"] = s.std;
    j["p95"] = s.p95;
    j["coverage_at_20"] = s.coverage_at_20;
    o << j.dump() << '\n';
    if (!out.empty()) {
      std::string csv = "n_hbonds,complexes\n";
      const auto hist = hbond_count_histogram(counts);
      for (std::size_t i = 0; i < hist.size(); ++i)
        csv += std::to_string(i) + "," + std::to_string(hist[i]) + "\n";
      write_file(out, csv);
    }
  }
};

struct Encode {
  std::string manifest, cache, config;
  bool strict = false, allow_missing = false, no_center = false;
  int threads = 1;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand("encode", "Featurize a manifest into a binary sample cache");
    sub->add_option("--manifest", manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--cache", cache, "Output cache file")->required();
    sub->add_option("--config", config, "Model config whose input lengths are used");
    sub->add_flag("--strict", strict, "Abort on the first entry that fails");
    sub->add_flag("--allow-missing-structure", allow_missing,
                  "Encode entries without a structure with an all-zero bond block");
    sub->add_flag("--no-center", no_center,
                  "Keep absolute bond coordinates instead of subtracting the ligand centroid");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    EncodeOptions opt;
    if (!config.empty())
      opt.shapes = HbgsaConfig::load(config);
    opt.center = !no_center;
    opt.allow_missing_structure = allow_missing;
    opt.strict = strict;
    opt.threads = threads;
    const auto entries = load_manifest(manifest);
    const auto report = encode_and_cache(entries, cache, opt);
    ordered_json j;
    j["written"] = report.written;
    j["failed"] = ordered_json::array();
    for (const auto &f: report.failures)
      j["failed"].push_back({ { "id", f.id }, { "reason", f.reason } });
    o << j.dump() << '\n';
    if (report.written == 0)
      throw DataError("no entry could be encoded");
  }
};

struct Split {
  std::string general, refined, core, out;
  std::vector<std::string> exclude;
  std::size_t val_size = 1000;
  std::uint64_t seed = 0;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand("split", "Build train/validation/test id sets from index files");
    sub->add_option("--general", general, "General-set index file")->check(CLI::ExistingFile);
    sub->add_option("--refined", refined, "Refined-set index file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--core", core, "Core-set index file (the test set)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--exclude", exclude, "Id list files removed before splitting")
        ->check(CLI::ExistingFile);
    sub->add_option("--val-size", val_size, "Validation ids drawn from the refined set");
    sub->add_option("--seed", seed, "Seed for the validation draw");
    sub->add_option("--out", out, "Split JSON (default stdout)");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  static std::vector<std::string> keys(const std::string &path) {
    std::vector<std::string> ids;
    if (path.empty())
      return ids;
    for (const auto &[id, affinity]: load_pdbbind_index(path))
      ids.push_back(id);
    return ids;
  }

  void exec(std::ostream &o) const {
    SplitOptions opt;
    opt.val_size = val_size;
    opt.seed = seed;
    for (const auto &f: exclude)
      for (auto &id: load_id_list(f))
        opt.exclude.push_back(std::move(id));
    const SplitSpec spec = clean_and_split(keys(general), keys(refined), keys(core), opt);
    spdlog::info("split: {} train, {} validation, {} test", spec.train.size(),
                 spec.validation.size(), spec.test.size());
    emit(out, spec.to_json() + "\n", o);
  }
};

struct Train {
  TrainFlags f;
  std::string out = "run";

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand(
        "train", "Train with early stopping; writes model.ckpt, model.ckpt.cfg, train_log.jsonl");
    f.add_to(sub, true);
    sub->add_option("--out", out, "Output directory");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    HbgsaConfig shapes;
    const auto all = load_cache(f.cache, shapes);
    const auto model = f.model_config(shapes);
    const auto tc = f.train_config();
    const Splits s = load_splits(all, f.split);
    fs::create_directories(out);
    std::ofstream log(fs::path(out) / "train_log.jsonl", std::ios::trunc);
    auto res = train(build_params<float>(model, tc.seed), model, s.train, s.validation, tc, &log);
    save_model((fs::path(out) / "model.ckpt").string(), res.best_params, model);
    write_file(fs::path(out) / "train_config.json", tc.to_json() + "\n");
    ordered_json j;
    j["epochs_run"] = res.epochs_run;
    j["best_epoch"] = res.best_epoch;
    j["early_stopped"] = res.early_stopped;
    j["params"] = param_count(res.best_params);
    j["checkpoint"] = (fs::path(out) / "model.ckpt").string();
    o << j.dump() << '\n';
  }
};

struct Eval {
  std::string checkpoint, cache, split, subset = "test", out;
  bool strict_ci = false;
  int threads = 1;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand(
        "eval", "Metrics JSON plus scatter and sorted-bar CSVs for a checkpoint");
    sub->add_option("--checkpoint", checkpoint, "Checkpoint written by train")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--cache", cache, "Encoded sample cache")->required()->check(CLI::ExistingFile);
    sub->add_option("--split", split, "Split JSON; without it the whole cache is evaluated");
    sub->add_option("--subset", subset, "Which split set to evaluate")
        ->check(CLI::IsMember({ "train", "validation", "test" }));
    sub->add_option("--out", out, "Directory for metrics.json, scatter.csv, sorted_bar.csv");
    sub->add_flag("--strict-ci", strict_ci, "Count tied predictions as discordant");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    Model m = load_model(checkpoint);
    HbgsaConfig shapes;
    const auto all = load_cache(cache, shapes);
    const Splits s = load_splits(all, split);
    const auto &set = split.empty() ? s.train
                      : subset == "train"      ? s.train
                      : subset == "validation" ? s.validation
                                               : s.test;
    if (set.empty())
      throw DataError("nothing to evaluate: the " + subset + " set is empty");
    const auto y = labels_of(set);
    const auto pred = predict_parallel(set, m.params, m.cfg, threads);
    const MetricsReport r = evaluate_metrics(pred, y, strict_ci);
    o << r.to_json() << '\n';
    if (out.empty())
      return;
    const fs::path dir(out);
    write_file(dir / "metrics.json", r.to_json() + "\n");
    std::string scatter = "id,true,pred\n";
    for (std::size_t i = 0; i < set.size(); ++i)
      scatter += set[i].id + "," + num(y[i]) + "," + num(pred[i]) + "\n";
    write_file(dir / "scatter.csv", scatter);
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
    std::string bars = "rank,id,true,pred\n";
    for (std::size_t r2 = 0; r2 < order.size(); ++r2)
      bars += std::to_string(r2 + 1) + "," + set[order[r2]].id + "," + num(y[order[r2]]) + ","
              + num(pred[order[r2]]) + "\n";
    write_file(dir / "sorted_bar.csv", bars);
  }
};

struct Predict {
  std::string checkpoint, manifest, out;
  bool allow_missing = false, no_center = false;
  int threads = 1;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand(
        "predict", "Rank a manifest by predicted affinity; CSV id,prediction, best first");
    sub->add_option("--checkpoint", checkpoint, "Checkpoint written by train")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--manifest", manifest, "Manifest CSV; the affinity column may be empty")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_flag("--allow-missing-structure", allow_missing,
                  "Predict entries without a structure using an all-zero bond block");
    sub->add_flag("--no-center", no_center, "Match a cache encoded with --no-center");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "Output CSV (default stdout)");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    Model m = load_model(checkpoint);
    EncodeOptions opt;
    opt.shapes = m.cfg;
    opt.center = !no_center;
    opt.allow_missing_structure = allow_missing;
    std::vector<EncodedSample> samples;
    for (const auto &e: load_manifest(manifest))
      samples.push_back(encode_entry(e, opt));
    const auto pred = predict_parallel(samples, m.params, m.cfg, threads);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pred[a] != pred[b] ? pred[a] > pred[b] : samples[a].id < samples[b].id;
    });
    std::string csv = "id,prediction\n";
    for (std::size_t i: order)
      csv += samples[i].id + "," + num(pred[i]) + "\n";
    emit(out, csv, o);
  }
};

struct SweepLambda {
  TrainFlags f;
  std::vector<double> lambdas = kDefaultLambdas;
  std::string out;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand("sweep-lambda",
                                   "One training run per lambda; CSV lambda,rmse,mae,pearson_r,ci");
    f.add_to(sub, true);
    sub->add_option("--lambdas", lambdas, "Comma-separated lambda values")->delimiter(',');
    sub->add_option("--out", out, "Output CSV (default stdout)");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    HbgsaConfig shapes;
    const auto all = load_cache(f.cache, shapes);
    const Splits s = load_splits(all, f.split);
    const auto rows = lambda_sweep(s.train, s.validation, s.test, lambdas,
                                   f.model_config(shapes), f.train_config());
    emit(out, sweep_csv(rows), o);
  }
};

struct Ablate {
  TrainFlags f;
  std::vector<std::string> variants;
  std::string out;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand("ablate", "Train each architecture variant; CSV per variant");
    f.add_to(sub, true);
    sub->add_option("--variants", variants, "Comma-separated variant names (default all)")
        ->delimiter(',');
    sub->add_option("--out", out, "Output CSV (default stdout)");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    HbgsaConfig shapes;
    const auto all = load_cache(f.cache, shapes);
    const Splits s = load_splits(all, f.split);
    std::vector<std::string> names = variants;
    if (names.empty())
      for (const auto n: ablation_names())
        names.emplace_back(n);
    const auto rows = ablation_study(names, s.train, s.validation, s.test,
                                     f.model_config(shapes), f.train_config());
    emit(out, ablation_csv(rows), o);
  }
};

struct Cv {
  TrainFlags f;
  int folds = 5;
  std::string out;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand("cv", "k-fold cross-validation; JSON per fold plus mean and std");
    f.add_to(sub, false);
    sub->add_option("--folds", folds, "Number of folds");
    sub->add_option("--out", out, "Output JSON (default stdout)");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    HbgsaConfig shapes;
    const auto all = load_cache(f.cache, shapes);
    const auto s = kfold_cv(all, folds, f.model_config(shapes), f.train_config());
    ordered_json j;
    j["folds"] = ordered_json::array();
    for (const auto &fr: s.folds)
      j["folds"].push_back({ { "fold", fr.fold },
                             { "best_epoch", fr.best_epoch },
                             { "metrics", ordered_json::parse(fr.metrics.to_json()) } });
    j["mean"] = ordered_json::parse(s.mean.to_json());
    j["std"] = ordered_json::parse(s.std.to_json());
    emit(out, j.dump(2) + "\n", o);
  }
};

struct GradCheck {
  std::string config;
  std::uint64_t seed = 0;
  double lambda = 50.0, eps = 1e-5, tolerance = 1e-4;
  int batch = 16;
  std::size_t entries = 2;

  void add(CLI::App &app, std::function<void()> &action, std::ostream &o) {
    auto *sub = app.add_subcommand(
        "gradcheck", "Finite-difference check of the full model and loss in double precision");
    sub->add_option("--config", config, "Model config file");
    sub->add_option("--seed", seed, "Seed for the random batch and parameters");
    sub->add_option("--lambda", lambda, "Weight of the correlation loss term");
    sub->add_option("--batch-size", batch, "Samples in the random batch")
        ->check(CLI::Range(2, 256));
    sub->add_option("--entries", entries, "Entries checked per parameter tensor");
    sub->add_option("--eps", eps, "Central-difference step");
    sub->add_option("--tolerance", tolerance, "Largest accepted relative error");
    sub->callback([this, &action, &o] { action = [this, &o] { exec(o); }; });
  }

  void exec(std::ostream &o) const {
    const HbgsaConfig model = config.empty() ? HbgsaConfig {} : HbgsaConfig::load(config);
    ModelGradCheckOptions opt;
    opt.seed = seed;
    opt.lambda = lambda;
    opt.batch = batch;
    opt.entries_per_param = entries;
    opt.eps = eps;
    const auto r = model_grad_check(model, opt);
    ordered_json j;
    j["max_rel_error"] = r.max_rel_error;
    j["worst_param"] = r.worst_param;
    j["worst_index"] = r.worst_index;
    j["analytic"] = r.worst_analytic;
    j["numeric"] = r.worst_numeric;
    j["entries_checked"] = r.entries_checked;
    o << j.dump() << '\n';
    if (!(r.max_rel_error < tolerance))
      throw NumericError("gradient check failed: relative error " + num(r.max_rel_error)
                         + " at " + r.worst_param);
  }
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

void configure_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_logger_mt("hbgsa");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    done = true;
  }
  spdlog::set_level(spdlog::level::info);
  if (const char *env = std::getenv("HBGSA_LOG"))
    spdlog::set_level(spdlog::level::from_str(env));
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app { "Hydrogen-bond graph drug-target affinity toolkit", "hbgsa" };
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  std::function<void()> action;

  HbondExtract hbond_extract;
  HbondDensity hbond_density_cmd;
  HbondStats hbond_stats;
  Encode encode;
  Split split;
  Train train_cmd;
  Eval eval;
  Predict predict_cmd;
  SweepLambda sweep;
  Ablate ablate;
  Cv cv;
  GradCheck gradcheck;
  hbond_extract.add(app, action, out);
  hbond_density_cmd.add(app, action, out);
  hbond_stats.add(app, action, out);
  encode.add(app, action, out);
  split.add(app, action, out);
  train_cmd.add(app, action, out);
  eval.add(app, action, out);
  predict_cmd.add(app, action, out);
  sweep.add(app, action, out);
  ablate.add(app, action, out);
  cv.add(app, action, out);
  gradcheck.add(app, action, out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: usage: " << one_line(e.what()) << '\n';
    return kUsage;
  }

  for (const CLI::App *sub: app.get_subcommands())
    print_resolved(*sub, err);
  try {
    action();
    return kOk;
  } catch (const Error &e) {
    switch (e.kind()) {
    case ErrorKind::kConfig:
      err << "error: usage: " << one_line(e.what()) << '\n';
      return kUsage;
    case ErrorKind::kData:
      err << "error: data: " << one_line(e.what()) << '\n';
      return kDataFailure;
    case ErrorKind::kNumeric:
      err << "error: numeric: " << one_line(e.what()) << '\n';
      return kNumericFailure;
    }
  } catch (const fs::filesystem_error &e) {
    err << "error: data: " << one_line(e.what()) << '\n';
    return kDataFailure;
  } catch (const std::exception &e) {
    err << "error: data: " << one_line(e.what()) << '\n';
    return kDataFailure;
  }
  return kDataFailure;
}

}  // namespace hbgsa::cli
