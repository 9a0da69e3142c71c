#pragma once
// Experiment configuration: JSON in, validated struct out, canonical JSON
// back out. Parsing is strict — unknown keys, wrong types and out-of-range
// values all raise ConfigError with the dotted path of the offending field,
// so a typo fails fast instead of silently running defaults.

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdgan/data.hpp"
#include "sdgan/dirac.hpp"
#include "sdgan/losses.hpp"
#include "sdgan/mlp.hpp"
#include "sdgan/optim.hpp"

namespace sdgan {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class RunMode { Dirac, Train, Ablate, Finetune, Rank };

inline std::string run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Dirac: return "dirac";
    case RunMode::Train: return "train";
    case RunMode::Ablate: return "ablate";
    case RunMode::Finetune: return "finetune";
    case RunMode::Rank: return "rank";
  }
  return "?";
}

inline RunMode run_mode_from_name(const std::string& s) {
  if (s == "dirac") return RunMode::Dirac;
  if (s == "train") return RunMode::Train;
  if (s == "ablate") return RunMode::Ablate;
  if (s == "finetune") return RunMode::Finetune;
  if (s == "rank") return RunMode::Rank;
  throw ConfigError("unknown mode: \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// config sections
// ---------------------------------------------------------------------------

/// Self-distillation settings as configured (the runtime SdLossSpec addition-
/// ally carries the instantiated feature network).
struct SdSettings {
  SdKind kind = SdKind::Feature;
  double alpha = 1.0;
  bool augment = true;
  std::uint64_t feature_seed = 17;  // seeds the frozen random feature net
};

struct TrainingConfig {
  std::size_t steps = 20000;
  std::size_t batch_size = 128;
  double lr_g = 1e-3;
  double lr_d = 1e-3;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double ema_beta = 0.999;
  std::size_t eval_interval = 500;
  std::size_t eval_samples = 512;
  std::size_t trajectory_latents = 480;
  double hq_threshold_std = 3.0;
  std::vector<double> checkpoint_fractions{0.2, 0.4, 0.6, 0.8, 1.0};
};

struct DiracStudyConfig {
  DiracParams params;           // eta_g, eta_d, eta_phi, alpha, c
  double t_end = 100.0;
  double dt = 1e-3;
  std::size_t steps = 5000;     // discrete-map steps
  double beta = 0.99;           // discrete-map EMA rate
  DiracState init{1.0, 1.0, 1.0};
  std::vector<double> alpha_grid{0.0, 0.01, 0.1, 0.5, 1.0, 2.0};
  std::vector<double> eta_phi_grid{0.001, 0.01, 0.1};
};

struct AblateConfig {
  std::vector<SdKind> kinds{SdKind::L1, SdKind::L2, SdKind::Feature};
  std::vector<bool> augment_settings{true};
  bool include_baseline = true;
};

struct RankConfig {
  std::size_t n_latents = 4096;
  std::size_t pool = 200;
  std::size_t k = 4;
};

struct ExperimentConfig {
  RunMode mode = RunMode::Train;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";
  std::string checkpoint;  // required for finetune / rank
  DataSpec data;
  SdSettings sd;
  TrainingConfig training;
  DiracStudyConfig dirac;
  AblateConfig ablate;
  RankConfig rank;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  std::string hash() const;
};

// ---------------------------------------------------------------------------
// fixed architecture
// ---------------------------------------------------------------------------
// The toy models are deliberately pinned: all comparisons in this lab vary
// the training signal, never the capacity.

inline MlpSpec generator_spec() { return MlpSpec{{2, 32, 32, 2}, Activation::Tanh}; }
inline MlpSpec discriminator_spec() { return MlpSpec{{2, 32, 32, 1}, Activation::Tanh}; }
inline MlpSpec feature_net_spec() { return MlpSpec{{2, 64, 64, 16}, Activation::Tanh}; }

/// The frozen random feature network is fully determined by its seed.
inline MlpParams make_feature_net(std::uint64_t feature_seed) {
  Rng rng(feature_seed);
  return init_mlp_params(feature_net_spec(), rng);
}

/// Instantiates the runtime SD loss spec (attaches the feature net whenever
/// the kind needs it).
inline SdLossSpec make_sd_loss_spec(const SdSettings& s) {
  SdLossSpec spec;
  spec.kind = s.kind;
  spec.alpha = s.alpha;
  spec.augment = s.augment;
  if (s.kind == SdKind::Feature) spec.feature_net = make_feature_net(s.feature_seed);
  return spec;
}

// ---------------------------------------------------------------------------
// strict JSON reading
// ---------------------------------------------------------------------------

namespace detail {

/// Wraps one JSON object; records which keys were consumed and rejects the
/// rest in finish(). All errors carry the dotted path.
class ObjReader {
 public:
  ObjReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  const std::string& path() const { return path_; }

  const nlohmann::json* find(const std::string& key) {
    consumed_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void read_double(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key) + ": expected a number");
      out = v->get<double>();
    }
  }

  void read_size(const std::string& key, std::size_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && v->get<long long>() < 0)) {
        throw ConfigError(key_path(key) + ": expected a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }

  void read_u64(const std::string& key, std::uint64_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        throw ConfigError(key_path(key) + ": expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void read_bool(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key) + ": expected a boolean");
      out = v->get<bool>();
    }
  }

  void read_string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void read_double_list(const std::string& key, std::vector<double>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array()) throw ConfigError(key_path(key) + ": expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(key_path(key) + ": expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void read_u64_list(const std::string& key, std::vector<std::uint64_t>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array()) throw ConfigError(key_path(key) + ": expected an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0)) {
          throw ConfigError(key_path(key) + ": expected an array of non-negative integers");
        }
        out.push_back(e.get<std::uint64_t>());
      }
    }
  }

  void read_bool_list(const std::string& key, std::vector<bool>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array()) throw ConfigError(key_path(key) + ": expected an array of booleans");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_boolean()) throw ConfigError(key_path(key) + ": expected an array of booleans");
        out.push_back(e.get<bool>());
      }
    }
  }

  void read_string_list(const std::string& key, std::vector<std::string>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array()) throw ConfigError(key_path(key) + ": expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(key_path(key) + ": expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  /// Call after all reads: any key not consumed is unknown.
  void finish() {
    for (const auto& item : j_.items()) {
      if (!consumed_.count(item.key())) {
        throw ConfigError(path_.empty() ? "unknown key \"" + item.key() + "\""
                                        : path_ + ": unknown key \"" + item.key() + "\"");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

inline void require_positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw ConfigError(path + ": must be > 0");
}

inline void require_positive(std::size_t v, const std::string& path) {
  if (v == 0) throw ConfigError(path + ": must be >= 1");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// from_json / to_json
// ---------------------------------------------------------------------------

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  detail::ObjReader root(j, "");

  {
    const auto* v = root.find("mode");
    if (!v) throw ConfigError("missing required key \"mode\"");
    if (!v->is_string()) throw ConfigError("mode: expected a string");
    cfg.mode = run_mode_from_name(v->get<std::string>());
  }
  root.read_u64_list("seeds", cfg.seeds);
  root.read_string("output_dir", cfg.output_dir);
  root.read_string("checkpoint", cfg.checkpoint);

  if (const auto* v = root.find("data")) {
    detail::ObjReader r(*v, "data");
    std::string kind = data_kind_name(cfg.data.kind);
    r.read_string("kind", kind);
    try {
      cfg.data.kind = data_kind_from_name(kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("data.kind: ") + e.what());
    }
    r.read_size("n_modes", cfg.data.n_modes);
    r.read_double("mode_std", cfg.data.mode_std);
    r.read_double("layout_scale", cfg.data.layout_scale);
    r.finish();
  }

  if (const auto* v = root.find("sd")) {
    detail::ObjReader r(*v, "sd");
    std::string kind = sd_kind_name(cfg.sd.kind);
    r.read_string("kind", kind);
    try {
      cfg.sd.kind = sd_kind_from_name(kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("sd.kind: ") + e.what());
    }
    r.read_double("alpha", cfg.sd.alpha);
    r.read_bool("augment", cfg.sd.augment);
    r.read_u64("feature_seed", cfg.sd.feature_seed);
    r.finish();
  }

  if (const auto* v = root.find("training")) {
    detail::ObjReader r(*v, "training");
    TrainingConfig& t = cfg.training;
    r.read_size("steps", t.steps);
    r.read_size("batch_size", t.batch_size);
    r.read_double("lr_g", t.lr_g);
    r.read_double("lr_d", t.lr_d);
    r.read_double("adam_beta1", t.adam_beta1);
    r.read_double("adam_beta2", t.adam_beta2);
    r.read_double("adam_eps", t.adam_eps);
    r.read_double("ema_beta", t.ema_beta);
    r.read_size("eval_interval", t.eval_interval);
    r.read_size("eval_samples", t.eval_samples);
    r.read_size("trajectory_latents", t.trajectory_latents);
    r.read_double("hq_threshold_std", t.hq_threshold_std);
    r.read_double_list("checkpoint_fractions", t.checkpoint_fractions);
    r.finish();
  }

  if (const auto* v = root.find("dirac")) {
    detail::ObjReader r(*v, "dirac");
    DiracStudyConfig& d = cfg.dirac;
    r.read_double("eta_g", d.params.eta_g);
    r.read_double("eta_d", d.params.eta_d);
    r.read_double("eta_phi", d.params.eta_phi);
    r.read_double("alpha", d.params.alpha);
    r.read_double("c", d.params.c);
    r.read_double("t_end", d.t_end);
    r.read_double("dt", d.dt);
    r.read_size("steps", d.steps);
    r.read_double("beta", d.beta);
    std::vector<double> init{d.init.theta, d.init.psi, d.init.phi};
    r.read_double_list("init", init);
    if (init.size() != 3) throw ConfigError("dirac.init: expected [theta, psi, phi]");
    d.init = DiracState{init[0], init[1], init[2]};
    r.read_double_list("alpha_grid", d.alpha_grid);
    r.read_double_list("eta_phi_grid", d.eta_phi_grid);
    r.finish();
  }

  if (const auto* v = root.find("ablate")) {
    detail::ObjReader r(*v, "ablate");
    if (const auto* kv = r.find("kinds")) {
      if (!kv->is_array()) throw ConfigError("ablate.kinds: expected an array of strings");
      cfg.ablate.kinds.clear();
      for (const auto& e : *kv) {
        if (!e.is_string()) throw ConfigError("ablate.kinds: expected an array of strings");
        try {
          cfg.ablate.kinds.push_back(sd_kind_from_name(e.get<std::string>()));
        } catch (const std::invalid_argument& ex) {
          throw ConfigError(std::string("ablate.kinds: ") + ex.what());
        }
      }
    }
    r.read_bool_list("augment_settings", cfg.ablate.augment_settings);
    r.read_bool("include_baseline", cfg.ablate.include_baseline);
    r.finish();
  }

  if (const auto* v = root.find("rank")) {
    detail::ObjReader r(*v, "rank");
    r.read_size("n_latents", cfg.rank.n_latents);
    r.read_size("pool", cfg.rank.pool);
    r.read_size("k", cfg.rank.k);
    r.finish();
  }

  root.finish();
  cfg.validate();
  return cfg;
}

inline void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds: must contain at least one seed");
  {
    std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
    if (uniq.size() != seeds.size()) throw ConfigError("seeds: duplicate seed values");
  }
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  if ((mode == RunMode::Finetune || mode == RunMode::Rank) && checkpoint.empty()) {
    throw ConfigError("checkpoint: required for mode \"" + run_mode_name(mode) + "\"");
  }
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data: ") + e.what());
  }
  if (!(sd.alpha >= 0.0)) throw ConfigError("sd.alpha: must be >= 0");

  const TrainingConfig& t = training;
  detail::require_positive(t.steps, "training.steps");
  detail::require_positive(t.batch_size, "training.batch_size");
  detail::require_positive(t.lr_g, "training.lr_g");
  detail::require_positive(t.lr_d, "training.lr_d");
  if (!(t.adam_beta1 >= 0.0 && t.adam_beta1 < 1.0) ||
      !(t.adam_beta2 >= 0.0 && t.adam_beta2 < 1.0)) {
    throw ConfigError("training.adam_beta1/adam_beta2: must lie in [0, 1)");
  }
  detail::require_positive(t.adam_eps, "training.adam_eps");
  if (!(t.ema_beta >= 0.0 && t.ema_beta < 1.0)) {
    throw ConfigError("training.ema_beta: must lie in [0, 1)");
  }
  detail::require_positive(t.eval_interval, "training.eval_interval");
  if (t.eval_samples < 2) throw ConfigError("training.eval_samples: must be >= 2");
  detail::require_positive(t.trajectory_latents, "training.trajectory_latents");
  detail::require_positive(t.hq_threshold_std, "training.hq_threshold_std");
  double prev = 0.0;
  for (double f : t.checkpoint_fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw ConfigError("training.checkpoint_fractions: values must lie in (0, 1]");
    }
    if (!(f > prev)) {
      throw ConfigError("training.checkpoint_fractions: values must be strictly increasing");
    }
    prev = f;
  }

  try {
    dirac.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("dirac: ") + e.what());
  }
  if (!(dirac.dt > 0.0)) throw ConfigError("dirac.dt: must be > 0");
  if (!(dirac.t_end >= 0.0)) throw ConfigError("dirac.t_end: must be >= 0");
  if (!(dirac.beta >= 0.0 && dirac.beta < 1.0)) {
    throw ConfigError("dirac.beta: must lie in [0, 1)");
  }
  detail::require_positive(dirac.steps, "dirac.steps");
  for (double a : dirac.alpha_grid) {
    if (!(a >= 0.0)) throw ConfigError("dirac.alpha_grid: values must be >= 0");
  }
  for (double e : dirac.eta_phi_grid) {
    if (!(e >= 0.0 && e < 1.0)) throw ConfigError("dirac.eta_phi_grid: values must lie in [0, 1)");
  }

  if (mode == RunMode::Ablate) {
    if (ablate.kinds.empty() && !ablate.include_baseline) {
      throw ConfigError("ablate: needs at least one kind or include_baseline");
    }
    if (ablate.augment_settings.empty()) {
      throw ConfigError("ablate.augment_settings: must contain at least one entry");
    }
  }

  const RankConfig& rk = rank;
  if (rk.k == 0 || rk.pool < 2 * rk.k || rk.n_latents < 2 * rk.pool) {
    throw ConfigError("rank: need n_latents >= 2*pool >= 4*k > 0");
  }
}

inline nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["mode"] = run_mode_name(mode);
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  if (!checkpoint.empty()) j["checkpoint"] = checkpoint;
  j["data"] = {{"kind", data_kind_name(data.kind)},
               {"n_modes", data.n_modes},
               {"mode_std", data.mode_std},
               {"layout_scale", data.layout_scale}};
  j["sd"] = {{"kind", sd_kind_name(sd.kind)},
             {"alpha", sd.alpha},
             {"augment", sd.augment},
             {"feature_seed", sd.feature_seed}};
  j["training"] = {{"steps", training.steps},
                   {"batch_size", training.batch_size},
                   {"lr_g", training.lr_g},
                   {"lr_d", training.lr_d},
                   {"adam_beta1", training.adam_beta1},
                   {"adam_beta2", training.adam_beta2},
                   {"adam_eps", training.adam_eps},
                   {"ema_beta", training.ema_beta},
                   {"eval_interval", training.eval_interval},
                   {"eval_samples", training.eval_samples},
                   {"trajectory_latents", training.trajectory_latents},
                   {"hq_threshold_std", training.hq_threshold_std},
                   {"checkpoint_fractions", training.checkpoint_fractions}};
  j["dirac"] = {{"eta_g", dirac.params.eta_g},
                {"eta_d", dirac.params.eta_d},
                {"eta_phi", dirac.params.eta_phi},
                {"alpha", dirac.params.alpha},
                {"c", dirac.params.c},
                {"t_end", dirac.t_end},
                {"dt", dirac.dt},
                {"steps", dirac.steps},
                {"beta", dirac.beta},
                {"init", {dirac.init.theta, dirac.init.psi, dirac.init.phi}},
                {"alpha_grid", dirac.alpha_grid},
                {"eta_phi_grid", dirac.eta_phi_grid}};
  {
    std::vector<std::string> kinds;
    for (SdKind k : ablate.kinds) kinds.push_back(sd_kind_name(k));
    std::vector<bool> aug(ablate.augment_settings.begin(), ablate.augment_settings.end());
    j["ablate"] = {{"kinds", kinds},
                   {"augment_settings", aug},
                   {"include_baseline", ablate.include_baseline}};
  }
  j["rank"] = {{"n_latents", rank.n_latents}, {"pool", rank.pool}, {"k", rank.k}};
  return j;
}

/// FNV-1a 64-bit over the canonical JSON dump; object keys are sorted by
/// nlohmann's default map ordering, so the hash is stable. Output location
/// and checkpoint path are excluded: they say where a run lives, not what
/// it computes, and the same experiment rerun elsewhere must hash the same.
inline std::string ExperimentConfig::hash() const {
  nlohmann::json j = to_json();
  j.erase("output_dir");
  j.erase("checkpoint");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sdgan
