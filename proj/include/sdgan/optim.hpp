#pragma once
// Plain SGD and Adam over lists of parameter Vars. Both operate in place on
// the Vars' value tensors and read the gradients accumulated by backward().

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdgan/autodiff.hpp"

namespace sdgan {

inline void zero_grads(std::vector<Var>& params) {
  for (Var& p : params) p.zero_grad();
}

namespace detail {

inline void check_grad_finite(const Var& p, std::size_t index, const char* who) {
  if (!p.grad().all_finite()) {
    throw std::runtime_error(std::string(who) + ": non-finite gradient in parameter " +
                             std::to_string(index) + " (shape " +
                             shape_to_string(p.shape()) + ")");
  }
}

}  // namespace detail

/// One vanilla SGD step: p <- p - lr * g.
inline void sgd_step(std::vector<Var>& params, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: lr must be positive");
  for (std::size_t i = 0; i < params.size(); ++i) {
    detail::check_grad_finite(params[i], i, "sgd_step");
    Tensor& v = params[i].mutable_value();
    const Tensor& g = params[i].grad();
    for (std::size_t j = 0; j < v.numel(); ++j) v[j] -= lr * g[j];
  }
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.5;   // GAN-friendly default
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction (Kingma & Ba). Holds first/second moment state
/// per parameter; the parameter list must keep the same shapes between steps.
class Adam {
 public:
  using Config = AdamConfig;

  explicit Adam(Config cfg = {}) : cfg_(cfg) {
    if (!(cfg_.lr > 0.0)) throw std::invalid_argument("Adam: lr must be positive");
    if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) ||
        !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0)) {
      throw std::invalid_argument("Adam: betas must lie in [0, 1)");
    }
    if (!(cfg_.eps > 0.0)) throw std::invalid_argument("Adam: eps must be positive");
  }

  const Config& config() const { return cfg_; }
  std::uint64_t step_count() const { return t_; }

  void step(std::vector<Var>& params) {
    if (m_.empty()) {
      for (const Var& p : params) {
        m_.push_back(Tensor::zeros(p.shape()));
        v_.push_back(Tensor::zeros(p.shape()));
      }
    }
    if (m_.size() != params.size()) {
      throw std::logic_error("Adam::step: parameter count changed since first step");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      detail::check_grad_finite(params[i], i, "Adam::step");
      Tensor& val = params[i].mutable_value();
      const Tensor& g = params[i].grad();
      Tensor& m = m_[i];
      Tensor& v = v_[i];
      if (!m.same_shape(val)) {
        throw std::logic_error("Adam::step: parameter " + std::to_string(i) +
                               " changed shape since first step");
      }
      for (std::size_t j = 0; j < val.numel(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
        const double m_hat = m[j] / bc1;
        const double v_hat = v[j] / bc2;
        val[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
      }
    }
  }

  // --- state access for checkpointing -------------------------------------
  struct State {
    std::uint64_t t = 0;
    std::vector<Tensor> m, v;
  };

  State save_state() const { return State{t_, m_, v_}; }

  void load_state(const State& s) {
    t_ = s.t;
    m_ = s.m;
    v_ = s.v;
  }

 private:
  Config cfg_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace sdgan
