#pragma once
// Small fully-connected networks. Three evaluation paths share one weight
// layout:
//   Mlp::forward      - trainable: builds the autodiff graph over leaf params
//   forward_with      - frozen-parameter graph: params enter as constants but
//                       gradients still flow through to the *input*
//   forward_raw       - plain tensors, no graph (metrics / teacher snapshots)
// Weights are stored input-major: layer l maps [B x in] @ W[in x out] + b.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdgan/autodiff.hpp"
#include "sdgan/optim.hpp"
#include "sdgan/rng.hpp"
#include "sdgan/tensor.hpp"

namespace sdgan {

enum class Activation { Tanh, Relu };

inline std::string activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation: " + s);
}

struct MlpSpec {
  std::vector<std::size_t> dims;  // [in, hidden..., out]
  Activation hidden_act = Activation::Tanh;

  std::size_t n_layers() const { return dims.size() - 1; }

  void validate() const {
    if (dims.size() < 2) throw std::invalid_argument("MlpSpec: need at least [in, out] dims");
    for (std::size_t d : dims)
      if (d == 0) throw std::invalid_argument("MlpSpec: zero-width layer");
  }

  bool operator==(const MlpSpec& o) const {
    return dims == o.dims && hidden_act == o.hidden_act;
  }
};

/// Plain-tensor parameter bundle: the unit of snapshotting, EMA tracking and
/// checkpointing.
struct MlpParams {
  MlpSpec spec;
  std::vector<Tensor> weights;  // weights[l]: [dims[l] x dims[l+1]]
  std::vector<Tensor> biases;   // biases[l]:  [dims[l+1]]

  void validate() const {
    spec.validate();
    if (weights.size() != spec.n_layers() || biases.size() != spec.n_layers()) {
      throw std::invalid_argument("MlpParams: layer count mismatch with spec");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const Shape expect_w{spec.dims[l], spec.dims[l + 1]};
      const Shape expect_b{spec.dims[l + 1]};
      if (weights[l].shape() != expect_w || biases[l].shape() != expect_b) {
        throw std::invalid_argument(
            "MlpParams: layer " + std::to_string(l) + " has shape " +
            shape_to_string(weights[l].shape()) + "/" + shape_to_string(biases[l].shape()) +
            ", expected " + shape_to_string(expect_w) + "/" + shape_to_string(expect_b));
      }
    }
  }

  bool operator==(const MlpParams& o) const {
    return spec == o.spec && weights == o.weights && biases == o.biases;
  }
};

/// Draws fresh parameters: W ~ N(0, 1/fan_in), b = 0. Draw order is fixed
/// (layer by layer, row-major), so a given rng state fully determines them.
inline MlpParams init_mlp_params(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  MlpParams p;
  p.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) {
    const std::size_t fan_in = spec.dims[l], fan_out = spec.dims[l + 1];
    Tensor w = Tensor::zeros({fan_in, fan_out});
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = rng.normal() * scale;
    p.weights.push_back(std::move(w));
    p.biases.push_back(Tensor::zeros({fan_out}));
  }
  return p;
}

namespace detail {

inline Var apply_activation(const Var& x, Activation act) {
  return act == Activation::Tanh ? tanh_op(x) : relu(x);
}

inline void check_input(const Tensor& x, const MlpSpec& spec, const char* who) {
  if (x.rank() != 2 || x.cols() != spec.dims.front()) {
    throw std::invalid_argument(std::string(who) + ": input shape " +
                                shape_to_string(x.shape()) + " does not match input dim " +
                                std::to_string(spec.dims.front()));
  }
}

}  // namespace detail

/// Trainable network: holds its parameters as requires_grad leaves.
class Mlp {
 public:
  Mlp() = default;

  static Mlp init(const MlpSpec& spec, Rng& rng) {
    return from_params(init_mlp_params(spec, rng));
  }

  static Mlp from_params(const MlpParams& p) {
    p.validate();
    Mlp m;
    m.spec_ = p.spec;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      m.params_.push_back(Var::leaf(p.weights[l], /*requires_grad=*/true));
      m.params_.push_back(Var::leaf(p.biases[l], /*requires_grad=*/true));
    }
    return m;
  }

  const MlpSpec& spec() const { return spec_; }

  /// Parameters interleaved [W0, b0, W1, b1, ...]; the order optimizers see.
  std::vector<Var>& params() { return params_; }
  const std::vector<Var>& params() const { return params_; }

  void zero_grad() { zero_grads(params_); }

  /// Graph-building forward for a [B x in] input Var.
  Var forward(const Var& x) const {
    detail::check_input(x.value(), spec_, "Mlp::forward");
    Var h = x;
    const std::size_t L = spec_.n_layers();
    for (std::size_t l = 0; l < L; ++l) {
      h = add_bias(matmul(h, params_[2 * l]), params_[2 * l + 1]);
      if (l + 1 < L) h = detail::apply_activation(h, spec_.hidden_act);
    }
    return h;
  }

  /// Graph-free forward on plain tensors (uses current parameter values).
  Tensor forward_raw(const Tensor& x) const;

  /// Copies current parameter values out to a plain bundle.
  MlpParams snapshot() const {
    MlpParams p;
    p.spec = spec_;
    for (std::size_t l = 0; l < spec_.n_layers(); ++l) {
      p.weights.push_back(params_[2 * l].value());
      p.biases.push_back(params_[2 * l + 1].value());
    }
    return p;
  }

  /// Overwrites parameter values in place (shapes must match).
  void load(const MlpParams& p) {
    p.validate();
    if (!(p.spec == spec_)) {
      throw std::invalid_argument("Mlp::load: spec mismatch");
    }
    for (std::size_t l = 0; l < spec_.n_layers(); ++l) {
      params_[2 * l].mutable_value() = p.weights[l];
      params_[2 * l + 1].mutable_value() = p.biases[l];
    }
  }

  /// Sum of squared gradient entries over all parameters.
  double grad_sq_norm() const {
    double s = 0.0;
    for (const Var& p : params_) s += p.grad().sq_norm();
    return s;
  }

 private:
  MlpSpec spec_;
  std::vector<Var> params_;
};

/// Graph forward through a frozen parameter bundle. The parameters enter as
/// constants (never accumulate gradient); the input may be any Var, and
/// gradients flow through to it. Used for the frozen feature extractor.
inline Var forward_with(const MlpParams& p, const Var& x) {
  p.validate();
  detail::check_input(x.value(), p.spec, "forward_with");
  Var h = x;
  const std::size_t L = p.spec.n_layers();
  for (std::size_t l = 0; l < L; ++l) {
    h = add_bias(matmul(h, Var::constant(p.weights[l])), Var::constant(p.biases[l]));
    if (l + 1 < L) h = detail::apply_activation(h, p.spec.hidden_act);
  }
  return h;
}

/// Graph-free forward through a parameter bundle.
inline Tensor forward_raw(const MlpParams& p, const Tensor& x) {
  detail::check_input(x, p.spec, "forward_raw");
  const std::size_t L = p.spec.n_layers();
  Tensor h = x;
  for (std::size_t l = 0; l < L; ++l) {
    const Tensor& w = p.weights[l];
    const Tensor& b = p.biases[l];
    const std::size_t m = h.rows(), k = h.cols(), n = w.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double hik = h[i * k + kk];
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += hik * w[kk * n + j];
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
    if (l + 1 < L) {
      for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = p.spec.hidden_act == Activation::Tanh ? std::tanh(out[i])
                                                       : (out[i] > 0.0 ? out[i] : 0.0);
      }
    }
    h = std::move(out);
  }
  return h;
}

inline Tensor Mlp::forward_raw(const Tensor& x) const {
  return sdgan::forward_raw(snapshot(), x);
}

}  // namespace sdgan
