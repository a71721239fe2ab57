//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/model/hbgsa_model.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hbgsa/error.hpp"
#include "hbgsa/features/residues.hpp"
#include "hbgsa/features/smiles.hpp"
#include "hbgsa/nn/ops.hpp"

namespace hbgsa {
namespace {

constexpr std::array<std::string_view, 7> kAblationNames {
  "SEQ",
  "SEQ+SMILES",
  "SEQ+Pocket",
  "SEQ+Pocket+SMILES",
  "SEQ+Pocket+SMILES+self-attention",
  "SEQ+Pocket+SMILES+H-BondGNN",
  "FULL",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

int parse_int(std::string_view key, std::string_view v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '"
                      + std::string(v) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '"
                      + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1")
    return true;
  if (v == "false" || v == "0")
    return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '"
                    + std::string(v) + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
void add_linear(nn::ParamStore<T> &ps, const std::string &name, std::size_t in,
                std::size_t out, std::mt19937_64 &rng) {
  ps.add_fan_in_uniform(name + ".w", { in, out }, in, rng);
  ps.add_fan_in_uniform(name + ".b", { out }, in, rng);
}

template <class T>
void add_conv_ln(nn::ParamStore<T> &ps, const std::string &name, std::size_t c,
                 std::size_t k, std::mt19937_64 &rng) {
  ps.add_fan_in_uniform(name + ".conv.w", { c, c, k }, c * k, rng);
  ps.add_fan_in_uniform(name + ".conv.b", { c }, c * k, rng);
  ps.add_constant(name + ".ln.gamma", { c }, T(1));
  ps.add_constant(name + ".ln.beta", { c }, T(0));
}

template <class T>
void add_attention(nn::ParamStore<T> &ps, const std::string &name, std::size_t c,
                   std::mt19937_64 &rng) {
  for (const char *w: { ".wq", ".wk", ".wv" })
    ps.add_fan_in_uniform(name + w, { c, c }, c, rng);
}

template <class T>
class ForwardPass {
public:
  ForwardPass(nn::Graph<T> &g, nn::ParamStore<T> &ps, const HbgsaConfig &cfg,
              Mode mode, std::mt19937_64 *rng)
      : g_(g), ps_(ps), cfg_(cfg), mode_(mode), rng_(rng) { }

  nn::Var run(const EncodedSample &s) {
    std::vector<nn::Var> parts;
    parts.push_back(sequence_branch("prot", input_projection("prot", s.protein)));
    add_branch(parts, cfg_.use_pocket, [&] { return pocket_branch(s.pocket); });
    add_branch(parts, cfg_.use_smiles, [&] {
      nn::Var e = nn::embedding(g_, p("smi.embed"), std::span<const std::int32_t>(s.smiles));
      return sequence_branch("smi", e);
    });
    add_branch(parts, cfg_.use_hbond_gnn, [&] {
      return gcn_forward(g_, to_t(s.hbond), ps_, cfg_.gnn_config());
    });
    return head(nn::concat(g_, std::span<const nn::Var>(parts)));
  }

private:
  nn::Var p(const std::string &name) { return g_.param(ps_.get(name)); }

  nn::Tensor<T> to_t(const nn::Tensor<float> &x) const {
    if constexpr (std::is_same_v<T, float>)
      return x;
    else
      return x.template cast<T>();
  }

  template <class F>
  void add_branch(std::vector<nn::Var> &parts, bool enabled, F &&make) {
    if (enabled)
      parts.push_back(make());
    else if (!cfg_.shrink_head)
      parts.push_back(g_.constant(
          nn::Tensor<T>({ static_cast<std::size_t>(cfg_.feature_dim) })));
  }

  nn::Var input_projection(const std::string &prefix, const nn::Tensor<float> &x) {
    return nn::linear(g_, g_.constant(to_t(x)), p(prefix + ".in.w"), p(prefix + ".in.b"));
  }

  nn::Var conv_ln_gelu(const std::string &name, nn::Var h, int dilation) {
    nn::Var z = nn::conv1d(g_, h, p(name + ".conv.w"), p(name + ".conv.b"), dilation);
    z = nn::layer_norm(g_, z, p(name + ".ln.gamma"), p(name + ".ln.beta"));
    return nn::gelu(g_, z);
  }

  nn::Var pool_and_project(const std::string &prefix, nn::Var h) {
    return nn::linear(g_, nn::adaptive_max_pool(g_, h), p(prefix + ".out.w"),
                      p(prefix + ".out.b"));
  }

  // Dilated residual blocks, optional self-attention, pooling.
  nn::Var sequence_branch(const std::string &prefix, nn::Var h) {
    for (std::size_t i = 0; i < cfg_.dilations.size(); ++i)
      h = nn::add(g_, h, conv_ln_gelu(prefix + ".block" + std::to_string(i), h,
                                      cfg_.dilations[i]));
    if (cfg_.use_attention)
      h = nn::self_attention_1d(g_, h, p(prefix + ".attn.wq"), p(prefix + ".attn.wk"),
                                p(prefix + ".attn.wv"));
    return pool_and_project(prefix, h);
  }

  nn::Var pocket_branch(const nn::Tensor<float> &x) {
    nn::Var h = input_projection("pkt", x);
    for (int i = 0; i < cfg_.pocket_layers; ++i)
      h = conv_ln_gelu("pkt.layer" + std::to_string(i), h, 1);
    return pool_and_project("pkt", h);
  }

  nn::Var maybe_dropout(nn::Var x) {
    if (mode_ == Mode::kEval || cfg_.dropout_p == 0.0)
      return x;
    return nn::dropout(g_, x, cfg_.dropout_p, *rng_);
  }

  nn::Var head(nn::Var fused) {
    nn::Var h = nn::linear(g_, fused, p("head.fc1.w"), p("head.fc1.b"));
    h = nn::prelu(g_, maybe_dropout(h), p("head.prelu1.a"));
    h = nn::linear(g_, h, p("head.fc2.w"), p("head.fc2.b"));
    h = nn::prelu(g_, maybe_dropout(h), p("head.prelu2.a"));
    return nn::linear(g_, h, p("head.fc3.w"), p("head.fc3.b"));
  }

  nn::Graph<T> &g_;
  nn::ParamStore<T> &ps_;
  const HbgsaConfig &cfg_;
  Mode mode_;
  std::mt19937_64 *rng_;
};

}  // namespace

void HbgsaConfig::validate() const {
  auto positive = [](const char *name, int v) {
    if (v <= 0)
      throw ConfigError(std::string(name) + " must be positive, got " + std::to_string(v));
  };
  positive("feature_dim", feature_dim);
  positive("conv_channels", conv_channels);
  positive("protein_len", protein_len);
  positive("pocket_len", pocket_len);
  positive("smiles_len", smiles_len);
  positive("hbond_n", hbond_n);
  positive("pocket_layers", pocket_layers);
  if (hbond_k < 1 || hbond_k > hbond_n - 1)
    throw ConfigError("hbond_k must lie in [1, hbond_n - 1], got " + std::to_string(hbond_k));
  if (conv_kernel < 1 || conv_kernel % 2 == 0)
    throw ConfigError("conv_kernel must be odd and positive, got "
                      + std::to_string(conv_kernel));
  if (dilations.empty())
    throw ConfigError("dilations must not be empty");
  for (int d: dilations)
    positive("dilation", d);
  if (attention_heads != 1)
    throw ConfigError("only attention_heads = 1 is implemented, got "
                      + std::to_string(attention_heads));
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw ConfigError("dropout_p must lie in [0, 1), got " + fmt_double(dropout_p));
  if (!(lambda_pearson >= 0.0))
    throw ConfigError("lambda_pearson must be non-negative, got "
                      + fmt_double(lambda_pearson));
}

int HbgsaConfig::enabled_branches() const {
  return 1 + int(use_pocket) + int(use_smiles) + int(use_hbond_gnn);
}

int HbgsaConfig::fused_dim() const {
  return feature_dim * (shrink_head ? enabled_branches() : 4);
}

HBondGnnConfig HbgsaConfig::gnn_config() const {
  HBondGnnConfig g;
  g.hidden = feature_dim;
  g.knn.k = hbond_k;
  g.knn.mask_padded = mask_padded_hbonds;
  g.normalize = normalize_adjacency;
  return g;
}

std::string HbgsaConfig::to_text() const {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "# hbgsa model config\n";
  os << "feature_dim = " << feature_dim << '\n';
  os << "conv_channels = " << conv_channels << '\n';
  os << "protein_len = " << protein_len << '\n';
  os << "pocket_len = " << pocket_len << '\n';
  os << "smiles_len = " << smiles_len << '\n';
  os << "hbond_n = " << hbond_n << '\n';
  os << "hbond_k = " << hbond_k << '\n';
  os << "dilations = ";
  for (std::size_t i = 0; i < dilations.size(); ++i)
    os << (i ? "," : "") << dilations[i];
  os << '\n';
  os << "conv_kernel = " << conv_kernel << '\n';
  os << "pocket_layers = " << pocket_layers << '\n';
  os << "attention_heads = " << attention_heads << '\n';
  os << "dropout_p = " << fmt_double(dropout_p) << '\n';
  os << "lambda_pearson = " << fmt_double(lambda_pearson) << '\n';
  os << "use_pocket = " << b(use_pocket) << '\n';
  os << "use_smiles = " << b(use_smiles) << '\n';
  os << "use_hbond_gnn = " << b(use_hbond_gnn) << '\n';
  os << "use_attention = " << b(use_attention) << '\n';
  os << "shrink_head = " << b(shrink_head) << '\n';
  os << "mask_padded_hbonds = " << b(mask_padded_hbonds) << '\n';
  os << "normalize_adjacency = " << b(normalize_adjacency) << '\n';
  return os.str();
}

HbgsaConfig HbgsaConfig::from_text(std::string_view text) {
  HbgsaConfig c;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view v = trim(line.substr(eq + 1));
    if (key == "feature_dim") c.feature_dim = parse_int(key, v);
    else if (key == "conv_channels") c.conv_channels = parse_int(key, v);
    else if (key == "protein_len") c.protein_len = parse_int(key, v);
    else if (key == "pocket_len") c.pocket_len = parse_int(key, v);
    else if (key == "smiles_len") c.smiles_len = parse_int(key, v);
    else if (key == "hbond_n") c.hbond_n = parse_int(key, v);
    else if (key == "hbond_k") c.hbond_k = parse_int(key, v);
    else if (key == "conv_kernel") c.conv_kernel = parse_int(key, v);
    else if (key == "pocket_layers") c.pocket_layers = parse_int(key, v);
    else if (key == "attention_heads") c.attention_heads = parse_int(key, v);
    else if (key == "dropout_p") c.dropout_p = parse_double(key, v);
    else if (key == "lambda_pearson") c.lambda_pearson = parse_double(key, v);
    else if (key == "use_pocket") c.use_pocket = parse_bool(key, v);
    else if (key == "use_smiles") c.use_smiles = parse_bool(key, v);
    else if (key == "use_hbond_gnn") c.use_hbond_gnn = parse_bool(key, v);
    else if (key == "use_attention") c.use_attention = parse_bool(key, v);
    else if (key == "shrink_head") c.shrink_head = parse_bool(key, v);
    else if (key == "mask_padded_hbonds") c.mask_padded_hbonds = parse_bool(key, v);
    else if (key == "normalize_adjacency") c.normalize_adjacency = parse_bool(key, v);
    else if (key == "dilations") {
      c.dilations.clear();
      std::string_view rest = v;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        c.dilations.push_back(parse_int(key, trim(rest.substr(0, comma))));
        rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
      }
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '"
                        + std::string(key) + "'");
    }
  }
  c.validate();
  return c;
}

void HbgsaConfig::save(const std::string &path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw DataError("cannot write config '" + path + "'");
  os << to_text();
}

HbgsaConfig HbgsaConfig::load(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw NotFoundError("config file not found: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str());
}

std::span<const std::string_view> ablation_names() { return kAblationNames; }

HbgsaConfig ablation_variant(const HbgsaConfig &base, std::string_view name) {
  HbgsaConfig c = base;
  auto set = [&](bool pocket, bool smiles, bool hb, bool attn) {
    c.use_pocket = pocket;
    c.use_smiles = smiles;
    c.use_hbond_gnn = hb;
    c.use_attention = attn;
    return c;
  };
  if (name == "SEQ") return set(false, false, false, false);
  if (name == "SEQ+SMILES") return set(false, true, false, false);
  if (name == "SEQ+Pocket") return set(true, false, false, false);
  if (name == "SEQ+Pocket+SMILES") return set(true, true, false, false);
  if (name == "SEQ+Pocket+SMILES+self-attention" || name == "+self-attention")
    return set(true, true, false, true);
  if (name == "SEQ+Pocket+SMILES+H-BondGNN" || name == "+H-BondGNN")
    return set(true, true, true, false);
  if (name == "FULL" || name == "HBGSA") return set(true, true, true, true);
  throw ConfigError("unknown ablation variant '" + std::string(name) + "'");
}

void check_sample_shapes(const EncodedSample &s, const HbgsaConfig &cfg) {
  auto expect = [&](const char *block, const nn::Shape &got, nn::Shape want) {
    if (got != want)
      throw ShapeError("sample '" + s.id + "': " + block + " block has shape "
                       + nn::shape_str(got) + ", expected " + nn::shape_str(want));
  };
  const auto d = static_cast<std::size_t>(kResidueFeatureDim);
  expect("protein", s.protein.shape(), { static_cast<std::size_t>(cfg.protein_len), d });
  expect("pocket", s.pocket.shape(), { static_cast<std::size_t>(cfg.pocket_len), d });
  expect("hbond", s.hbond.shape(), { static_cast<std::size_t>(cfg.hbond_n), 9 });
  expect("smiles", { s.smiles.size() }, { static_cast<std::size_t>(cfg.smiles_len) });
  const auto vocab = static_cast<std::int32_t>(SmilesVocabulary::standard().size());
  for (std::int32_t t: s.smiles)
    if (t < 0 || t >= vocab)
      throw ShapeError("sample '" + s.id + "': SMILES token index " + std::to_string(t)
                       + " outside vocabulary");
}

template <class T>
nn::ParamStore<T> build_params(const HbgsaConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  nn::ParamStore<T> ps;
  const auto c = static_cast<std::size_t>(cfg.conv_channels);
  const auto f = static_cast<std::size_t>(cfg.feature_dim);
  const auto k = static_cast<std::size_t>(cfg.conv_kernel);
  const auto res = static_cast<std::size_t>(kResidueFeatureDim);

  auto trunk = [&](const std::string &prefix) {
    for (std::size_t i = 0; i < cfg.dilations.size(); ++i)
      add_conv_ln(ps, prefix + ".block" + std::to_string(i), c, k, rng);
    if (cfg.use_attention)
      add_attention(ps, prefix + ".attn", c, rng);
    add_linear(ps, prefix + ".out", c, f, rng);
  };

  add_linear(ps, "prot.in", res, c, rng);
  trunk("prot");
  if (cfg.use_smiles) {
    ps.add_normal("smi.embed", { SmilesVocabulary::standard().size(), c }, 1.0, rng);
    trunk("smi");
  }
  if (cfg.use_pocket) {
    add_linear(ps, "pkt.in", res, c, rng);
    for (int i = 0; i < cfg.pocket_layers; ++i)
      add_conv_ln(ps, "pkt.layer" + std::to_string(i), c, k, rng);
    add_linear(ps, "pkt.out", c, f, rng);
  }
  if (cfg.use_hbond_gnn)
    add_hbond_gnn_params(ps, cfg.gnn_config(), rng);

  add_linear(ps, "head.fc1", static_cast<std::size_t>(cfg.fused_dim()), 128, rng);
  ps.add_constant("head.prelu1.a", { 1 }, T(0.25));
  add_linear(ps, "head.fc2", 128, 64, rng);
  ps.add_constant("head.prelu2.a", { 1 }, T(0.25));
  add_linear(ps, "head.fc3", 64, 1, rng);
  return ps;
}

std::size_t param_count(const nn::ParamStore<float> &params) {
  return params.element_count();
}

template <class T>
nn::Var forward_sample(nn::Graph<T> &g, const EncodedSample &sample,
                       nn::ParamStore<T> &params, const HbgsaConfig &cfg,
                       Mode mode, std::mt19937_64 *rng) {
  if (mode == Mode::kEval && rng != nullptr)
    throw std::logic_error("forward_sample: dropout generator passed in eval mode");
  if (mode == Mode::kTrain && cfg.dropout_p > 0.0 && rng == nullptr)
    throw std::logic_error("forward_sample: train mode needs a dropout generator");
  check_sample_shapes(sample, cfg);
  return ForwardPass<T>(g, params, cfg, mode, rng).run(sample);
}

template <class T>
nn::Var forward_batch(nn::Graph<T> &g, std::span<const EncodedSample> batch,
                      nn::ParamStore<T> &params, const HbgsaConfig &cfg,
                      Mode mode, std::mt19937_64 *rng) {
  if (batch.empty())
    throw DataError("forward_batch: empty batch");
  std::vector<nn::Var> preds;
  preds.reserve(batch.size());
  for (const auto &s: batch)
    preds.push_back(forward_sample(g, s, params, cfg, mode, rng));
  return nn::stack(g, std::span<const nn::Var>(preds));
}

std::vector<double> predict(std::span<const EncodedSample> samples,
                            nn::ParamStore<float> &params, const HbgsaConfig &cfg) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto &s: samples) {
    nn::Graph<float> g(false);
    out.push_back(static_cast<double>(g.value(forward_sample(g, s, params, cfg, Mode::kEval))[0]));
  }
  return out;
}

#define HBGSA_INSTANTIATE_MODEL(T)                                                   \
  template nn::ParamStore<T> build_params<T>(const HbgsaConfig &, std::uint64_t);    \
  template nn::Var forward_sample<T>(nn::Graph<T> &, const EncodedSample &,          \
                                     nn::ParamStore<T> &, const HbgsaConfig &, Mode, \
                                     std::mt19937_64 *);                             \
  template nn::Var forward_batch<T>(nn::Graph<T> &, std::span<const EncodedSample>,  \
                                    nn::ParamStore<T> &, const HbgsaConfig &, Mode,  \
                                    std::mt19937_64 *);

HBGSA_INSTANTIATE_MODEL(float)
HBGSA_INSTANTIATE_MODEL(double)

}  // namespace hbgsa
