#pragma once
// Checkpointing. One JSON file captures everything needed to continue a run
// bitwise-identically: both networks, the EMA shadow, both Adam states, the
// rng stream states and the step counter.
//
// The file is written by a purpose-built emitter with a fixed key order and
// %.17g number rendering. 17 significant digits round-trip any double
// exactly, so save -> load -> save reproduces the file byte for byte; that
// property is what the resume tests lean on.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdgan/csv.hpp"
#include "sdgan/ema.hpp"
#include "sdgan/mlp.hpp"
#include "sdgan/optim.hpp"
#include "sdgan/rng.hpp"

namespace sdgan {

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  std::string config_hash;
  std::uint64_t seed = 0;       // the run's base seed
  std::uint64_t step = 0;       // training steps completed
  MlpParams generator;
  MlpParams discriminator;
  std::optional<MlpParams> ema; // absent for externally produced files
  std::optional<Adam::State> opt_g;
  std::optional<Adam::State> opt_d;
  std::optional<Rng::State> rng_main;
  std::optional<Rng::State> rng_augment;
};

// ---------------------------------------------------------------------------
// writer
// ---------------------------------------------------------------------------

namespace detail {

/// Tiny deterministic JSON emitter: fixed key order (caller-driven), two-
/// space indentation, %.17g doubles. Not general-purpose — just enough for
/// the checkpoint schema.
class JsonEmitter {
 public:
  std::string take() { return std::move(buf_); }

  void begin_obj() { open('{'); }
  void end_obj() { close('}'); }
  void begin_arr() { open('['); }
  void end_arr() { close(']'); }

  void key(const std::string& k) {
    comma_newline_indent();
    buf_ += '"';
    buf_ += k;  // keys are known identifiers; no escaping needed
    buf_ += "\": ";
    just_keyed_ = true;
  }

  void value_raw(const std::string& v) {
    if (!just_keyed_) comma_newline_indent();
    just_keyed_ = false;
    buf_ += v;
    need_comma_ = true;
  }

  void value(double v) { value_raw(format_g17(v)); }
  void value(std::uint64_t v) { value_raw(std::to_string(v)); }
  void value(int v) { value_raw(std::to_string(v)); }
  void value(bool v) { value_raw(v ? "true" : "false"); }
  void value_str(const std::string& s) { value_raw("\"" + s + "\""); }
  void value_null() { value_raw("null"); }

 private:
  void open(char c) {
    if (!just_keyed_) comma_newline_indent();
    just_keyed_ = false;
    buf_ += c;
    ++depth_;
    need_comma_ = false;
    empty_ = true;
  }

  void close(char c) {
    --depth_;
    if (!empty_) {
      buf_ += '\n';
      indent();
    }
    buf_ += c;
    need_comma_ = true;
    empty_ = false;
  }

  void comma_newline_indent() {
    if (need_comma_) buf_ += ',';
    if (depth_ > 0) {
      buf_ += '\n';
      indent();
    }
    need_comma_ = false;
    empty_ = false;
  }

  void indent() {
    buf_.append(static_cast<std::size_t>(depth_) * 2, ' ');
  }

  std::string buf_;
  int depth_ = 0;
  bool need_comma_ = false;
  bool just_keyed_ = false;
  bool empty_ = true;
};

inline void emit_params(JsonEmitter& e, const MlpParams& p) {
  e.begin_obj();
  e.key("dims");
  e.begin_arr();
  for (std::size_t d : p.spec.dims) e.value(static_cast<std::uint64_t>(d));
  e.end_arr();
  e.key("activation");
  e.value_str(activation_name(p.spec.hidden_act));
  e.key("layers");
  e.begin_arr();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    e.begin_obj();
    e.key("w");
    e.begin_arr();
    const Tensor& w = p.weights[l];
    for (std::size_t r = 0; r < w.rows(); ++r) {
      e.begin_arr();
      for (std::size_t c = 0; c < w.cols(); ++c) e.value(w.at(r, c));
      e.end_arr();
    }
    e.end_arr();
    e.key("b");
    e.begin_arr();
    for (std::size_t i = 0; i < p.biases[l].numel(); ++i) e.value(p.biases[l][i]);
    e.end_arr();
    e.end_obj();
  }
  e.end_arr();
  e.end_obj();
}

inline void emit_adam_state(JsonEmitter& e, const Adam::State& s) {
  e.begin_obj();
  e.key("t");
  e.value(s.t);
  for (const char* name : {"m", "v"}) {
    const std::vector<Tensor>& list = name[0] == 'm' ? s.m : s.v;
    e.key(name);
    e.begin_arr();
    for (const Tensor& t : list) {
      e.begin_arr();
      for (std::size_t i = 0; i < t.numel(); ++i) e.value(t[i]);
      e.end_arr();
    }
    e.end_arr();
  }
  e.end_obj();
}

inline void emit_rng_state(JsonEmitter& e, const Rng::State& s) {
  e.begin_obj();
  e.key("seed");
  e.value(s.seed);
  e.key("state");
  e.begin_arr();
  for (std::uint64_t w : s.words) e.value(w);
  e.end_arr();
  e.key("spare");
  e.value(s.spare);
  e.key("has_spare");
  e.value(s.has_spare);
  e.end_obj();
}

inline void check_params_finite(const MlpParams& p, const char* what) {
  for (const Tensor& t : p.weights)
    if (!t.all_finite()) throw CheckpointError(std::string("save_checkpoint: non-finite values in ") + what);
  for (const Tensor& t : p.biases)
    if (!t.all_finite()) throw CheckpointError(std::string("save_checkpoint: non-finite values in ") + what);
}

}  // namespace detail

/// Renders the checkpoint to its canonical byte string.
inline std::string checkpoint_to_string(const Checkpoint& ck) {
  ck.generator.validate();
  ck.discriminator.validate();
  detail::check_params_finite(ck.generator, "generator");
  detail::check_params_finite(ck.discriminator, "discriminator");
  if (ck.ema) {
    ck.ema->validate();
    detail::check_params_finite(*ck.ema, "ema");
  }
  detail::JsonEmitter e;
  e.begin_obj();
  e.key("version");
  e.value(ck.version);
  e.key("config_hash");
  e.value_str(ck.config_hash);
  e.key("seed");
  e.value(ck.seed);
  e.key("step");
  e.value(ck.step);
  e.key("generator");
  detail::emit_params(e, ck.generator);
  e.key("discriminator");
  detail::emit_params(e, ck.discriminator);
  e.key("ema");
  if (ck.ema) detail::emit_params(e, *ck.ema); else e.value_null();
  e.key("opt_g");
  if (ck.opt_g) detail::emit_adam_state(e, *ck.opt_g); else e.value_null();
  e.key("opt_d");
  if (ck.opt_d) detail::emit_adam_state(e, *ck.opt_d); else e.value_null();
  e.key("rng_main");
  if (ck.rng_main) detail::emit_rng_state(e, *ck.rng_main); else e.value_null();
  e.key("rng_augment");
  if (ck.rng_augment) detail::emit_rng_state(e, *ck.rng_augment); else e.value_null();
  e.end_obj();
  std::string out = e.take();
  out += '\n';
  return out;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const std::string body = checkpoint_to_string(ck);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// reader
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& ck_field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw CheckpointError(std::string("checkpoint: missing field \"") + key + "\"");
  return *it;
}

inline MlpParams parse_params(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object()) throw CheckpointError("checkpoint: " + what + " must be an object");
  MlpParams p;
  const auto& dims = ck_field(j, "dims");
  if (!dims.is_array() || dims.size() < 2) {
    throw CheckpointError("checkpoint: " + what + ".dims malformed");
  }
  for (const auto& d : dims) p.spec.dims.push_back(d.get<std::size_t>());
  try {
    p.spec.hidden_act = activation_from_name(ck_field(j, "activation").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("checkpoint: " + what + ".activation: " + e.what());
  }
  const auto& layers = ck_field(j, "layers");
  if (!layers.is_array() || layers.size() != p.spec.n_layers()) {
    throw CheckpointError("checkpoint: " + what + ".layers count does not match dims");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = ck_field(layers[l], "w");
    const auto& b = ck_field(layers[l], "b");
    const std::size_t in = p.spec.dims[l], out_dim = p.spec.dims[l + 1];
    if (!w.is_array() || w.size() != in) {
      throw CheckpointError("checkpoint: " + what + ".layers[" + std::to_string(l) + "].w malformed");
    }
    std::vector<double> wdata;
    wdata.reserve(in * out_dim);
    for (const auto& row : w) {
      if (!row.is_array() || row.size() != out_dim) {
        throw CheckpointError("checkpoint: " + what + ".layers[" + std::to_string(l) + "].w malformed");
      }
      for (const auto& x : row) wdata.push_back(x.get<double>());
    }
    if (!b.is_array() || b.size() != out_dim) {
      throw CheckpointError("checkpoint: " + what + ".layers[" + std::to_string(l) + "].b malformed");
    }
    std::vector<double> bdata;
    for (const auto& x : b) bdata.push_back(x.get<double>());
    p.weights.push_back(Tensor::from({in, out_dim}, std::move(wdata)));
    p.biases.push_back(Tensor::from({out_dim}, std::move(bdata)));
  }
  p.validate();
  return p;
}

inline Adam::State parse_adam_state(const nlohmann::json& j, const MlpParams& shapes,
                                    const std::string& what) {
  Adam::State s;
  s.t = ck_field(j, "t").get<std::uint64_t>();
  for (const char* name : {"m", "v"}) {
    const auto& arrs = ck_field(j, name);
    const std::size_t n_params = 2 * shapes.spec.n_layers();
    if (!arrs.is_array() || arrs.size() != n_params) {
      throw CheckpointError("checkpoint: " + what + "." + name + " count mismatch");
    }
    std::vector<Tensor>& dst = name[0] == 'm' ? s.m : s.v;
    for (std::size_t i = 0; i < n_params; ++i) {
      const std::size_t layer = i / 2;
      const Shape shape = (i % 2 == 0) ? shapes.weights[layer].shape()
                                       : shapes.biases[layer].shape();
      const auto& flat = arrs[i];
      if (!flat.is_array() || flat.size() != shape_numel(shape)) {
        throw CheckpointError("checkpoint: " + what + "." + name + "[" + std::to_string(i) +
                              "] has wrong length");
      }
      std::vector<double> data;
      data.reserve(flat.size());
      for (const auto& x : flat) data.push_back(x.get<double>());
      dst.push_back(Tensor::from(shape, std::move(data)));
    }
  }
  return s;
}

inline Rng::State parse_rng_state(const nlohmann::json& j, const std::string& what) {
  Rng::State s{};
  s.seed = ck_field(j, "seed").get<std::uint64_t>();
  const auto& words = ck_field(j, "state");
  if (!words.is_array() || words.size() != 4) {
    throw CheckpointError("checkpoint: " + what + ".state must have 4 words");
  }
  for (std::size_t i = 0; i < 4; ++i) s.words[i] = words[i].get<std::uint64_t>();
  s.spare = ck_field(j, "spare").get<double>();
  s.has_spare = ck_field(j, "has_spare").get<bool>();
  return s;
}

}  // namespace detail

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint: malformed JSON in " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw CheckpointError("checkpoint: top level must be an object");
  Checkpoint ck;
  ck.version = detail::ck_field(j, "version").get<int>();
  if (ck.version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(ck.version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  ck.config_hash = detail::ck_field(j, "config_hash").get<std::string>();
  ck.seed = detail::ck_field(j, "seed").get<std::uint64_t>();
  ck.step = detail::ck_field(j, "step").get<std::uint64_t>();
  ck.generator = detail::parse_params(detail::ck_field(j, "generator"), "generator");
  ck.discriminator = detail::parse_params(detail::ck_field(j, "discriminator"), "discriminator");
  const auto& ema = detail::ck_field(j, "ema");
  if (!ema.is_null()) ck.ema = detail::parse_params(ema, "ema");
  const auto& og = detail::ck_field(j, "opt_g");
  if (!og.is_null()) ck.opt_g = detail::parse_adam_state(og, ck.generator, "opt_g");
  const auto& od = detail::ck_field(j, "opt_d");
  if (!od.is_null()) ck.opt_d = detail::parse_adam_state(od, ck.discriminator, "opt_d");
  const auto& rm = detail::ck_field(j, "rng_main");
  if (!rm.is_null()) ck.rng_main = detail::parse_rng_state(rm, "rng_main");
  const auto& ra = detail::ck_field(j, "rng_augment");
  if (!ra.is_null()) ck.rng_augment = detail::parse_rng_state(ra, "rng_augment");
  return ck;
}

// ---------------------------------------------------------------------------
// warm start
// ---------------------------------------------------------------------------

/// Everything a resumed run needs, reconstructed from a checkpoint.
struct WarmStart {
  Mlp g;
  Mlp d;
  EmaTracker ema;
  Adam opt_g;
  Adam opt_d;
  std::optional<Rng> rng_main;
  std::optional<Rng> rng_augment;
  std::uint64_t start_step = 0;
};

/// Validates the checkpoint against the expected architectures and rebuilds
/// live training state. Missing EMA falls back to a copy of the generator;
/// missing optimizer state starts Adam fresh.
inline WarmStart warm_start(const Checkpoint& ck, const MlpSpec& g_spec,
                            const MlpSpec& d_spec, double ema_beta,
                            Adam::Config opt_g_cfg, Adam::Config opt_d_cfg) {
  if (!(ck.generator.spec == g_spec)) {
    throw CheckpointError(
        "warm_start: generator architecture mismatch: checkpoint has dims " +
        shape_to_string(ck.generator.spec.dims) + ", expected " +
        shape_to_string(g_spec.dims));
  }
  if (!(ck.discriminator.spec == d_spec)) {
    throw CheckpointError(
        "warm_start: discriminator architecture mismatch: checkpoint has dims " +
        shape_to_string(ck.discriminator.spec.dims) + ", expected " +
        shape_to_string(d_spec.dims));
  }
  if (ck.ema && !(ck.ema->spec == g_spec)) {
    throw CheckpointError("warm_start: ema architecture mismatch: checkpoint has dims " +
                          shape_to_string(ck.ema->spec.dims) + ", expected " +
                          shape_to_string(g_spec.dims));
  }
  WarmStart w{Mlp::from_params(ck.generator), Mlp::from_params(ck.discriminator),
              EmaTracker(ema_beta, ck.ema ? *ck.ema : ck.generator),
              Adam(opt_g_cfg), Adam(opt_d_cfg), std::nullopt, std::nullopt, ck.step};
  if (ck.opt_g) w.opt_g.load_state(*ck.opt_g);
  if (ck.opt_d) w.opt_d.load_state(*ck.opt_d);
  if (ck.rng_main) w.rng_main = Rng::restore(*ck.rng_main);
  if (ck.rng_augment) w.rng_augment = Rng::restore(*ck.rng_augment);
  return w;
}

}  // namespace sdgan
