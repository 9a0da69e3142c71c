#pragma once
// Exponential-moving-average shadow of a parameter bundle:
//   shadow <- beta * shadow + (1 - beta) * source          (elementwise)
// The shadow acts as the frozen teacher in self-distillation. It is pure
// state: nothing here touches the autodiff graph or any optimizer.

#include <stdexcept>

#include "sdgan/mlp.hpp"

namespace sdgan {

/// One in-place EMA update on a tensor pair.
inline void ema_update_tensor(Tensor& shadow, const Tensor& source, double beta) {
  if (!shadow.same_shape(source)) {
    throw std::invalid_argument("ema_update: shape mismatch " +
                                shape_to_string(shadow.shape()) + " vs " +
                                shape_to_string(source.shape()));
  }
  for (std::size_t i = 0; i < shadow.numel(); ++i) {
    shadow[i] = beta * shadow[i] + (1.0 - beta) * source[i];
  }
}

/// One in-place EMA update over a whole parameter bundle.
inline void ema_update(MlpParams& shadow, const MlpParams& source, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::invalid_argument("ema_update: beta must lie in [0, 1)");
  }
  if (shadow.weights.size() != source.weights.size() ||
      shadow.biases.size() != source.biases.size()) {
    throw std::invalid_argument("ema_update: layer count mismatch");
  }
  for (std::size_t l = 0; l < shadow.weights.size(); ++l) {
    ema_update_tensor(shadow.weights[l], source.weights[l], beta);
    ema_update_tensor(shadow.biases[l], source.biases[l], beta);
  }
}

/// Owns the shadow bundle and its decay rate. beta = 0 degenerates to a
/// plain copy of the source every update.
class EmaTracker {
 public:
  EmaTracker() = default;

  EmaTracker(double beta, MlpParams initial_shadow) : beta_(beta) {
    if (!(beta >= 0.0 && beta < 1.0)) {
      throw std::invalid_argument("EmaTracker: beta must lie in [0, 1)");
    }
    initial_shadow.validate();
    shadow_ = std::move(initial_shadow);
  }

  double beta() const { return beta_; }
  const MlpParams& shadow() const { return shadow_; }

  void update(const MlpParams& source) { ema_update(shadow_, source, beta_); }

  /// Replaces the shadow outright (checkpoint restore).
  void set_shadow(MlpParams p) {
    p.validate();
    if (!(p.spec == shadow_.spec)) {
      throw std::invalid_argument("EmaTracker::set_shadow: spec mismatch");
    }
    shadow_ = std::move(p);
  }

 private:
  double beta_ = 0.0;
  MlpParams shadow_;
};

}  // namespace sdgan
