#pragma once
// Adversarial and self-distillation losses.
//
// Adversarial: non-saturating logistic GAN,
//   L_D = mean softplus(-D(x_real)) + mean softplus(D(x_fake))
//   L_G = mean softplus(-D(x_fake))
// Self-distillation: a penalty pulling the student generator's output toward
// the frozen EMA teacher's output on the SAME latents, measured in data
// space (l1 / l2) or through a frozen random feature network (feature).

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>

#include "sdgan/augment.hpp"
#include "sdgan/autodiff.hpp"
#include "sdgan/mlp.hpp"

namespace sdgan {

/// Discriminator loss from real/fake logits (each [B x 1]).
inline Var discriminator_loss(const Var& d_real, const Var& d_fake) {
  return mean(softplus(neg(d_real))) + mean(softplus(d_fake));
}

/// Non-saturating generator adversarial loss from fake logits.
inline Var generator_adversarial_loss(const Var& d_fake) {
  return mean(softplus(neg(d_fake)));
}

/// Both adversarial losses in one call.
inline std::pair<Var, Var> adversarial_losses(const Var& d_real, const Var& d_fake) {
  return {discriminator_loss(d_real, d_fake), generator_adversarial_loss(d_fake)};
}

enum class SdKind { L1, L2, Feature };

inline std::string sd_kind_name(SdKind k) {
  switch (k) {
    case SdKind::L1: return "l1";
    case SdKind::L2: return "l2";
    case SdKind::Feature: return "feature";
  }
  return "?";
}

inline SdKind sd_kind_from_name(const std::string& s) {
  if (s == "l1") return SdKind::L1;
  if (s == "l2") return SdKind::L2;
  if (s == "feature") return SdKind::Feature;
  throw std::invalid_argument("unknown self-distillation kind: " + s);
}

/// Configuration of the self-distillation penalty.
struct SdLossSpec {
  SdKind kind = SdKind::L2;
  double alpha = 1.0;  // weight on the penalty; 0 disables it
  bool augment = true; // shared differentiable augmentation of the pair
  // Frozen embedding network; required iff kind == Feature.
  std::optional<MlpParams> feature_net;

  void validate() const {
    if (!(alpha >= 0.0)) throw std::invalid_argument("SdLossSpec: alpha must be >= 0");
    if (kind == SdKind::Feature && !feature_net.has_value()) {
      throw std::invalid_argument("SdLossSpec: feature kind requires a feature_net");
    }
    if (feature_net) feature_net->validate();
  }
};

namespace detail {

/// Mean elementwise discrepancy between two [B x d] batches in the graph.
inline Var pair_discrepancy(const Var& a, const Var& b, SdKind kind,
                            const std::optional<MlpParams>& feature_net) {
  switch (kind) {
    case SdKind::L1:
      return mean(abs_op(sub(a, b)));
    case SdKind::L2:
      return mean(square(sub(a, b)));
    case SdKind::Feature: {
      // Frozen embeddings: parameters are constants, gradients flow to a/b.
      Var fa = forward_with(*feature_net, a);
      Var fb = forward_with(*feature_net, b);
      return mean(square(sub(fa, fb)));
    }
  }
  throw std::logic_error("pair_discrepancy: unreachable");
}

}  // namespace detail

/// In-graph self-distillation loss between the student batch and the
/// (already detached) teacher batch. Applies the shared augmentation first
/// when enabled. The teacher must carry no gradient path: passing a Var that
/// requires grad is an error, because the teacher is frozen by contract.
inline Var sd_loss(const Var& student, const Var& teacher, const SdLossSpec& spec,
                   Rng& augment_rng, double data_extent) {
  spec.validate();
  if (teacher.requires_grad()) {
    throw std::invalid_argument("sd_loss: teacher output must be detached "
                                "(gradient may not flow into the teacher)");
  }
  if (!student.value().same_shape(teacher.value())) {
    throw std::invalid_argument("sd_loss: shape mismatch " +
                                shape_to_string(student.shape()) + " vs " +
                                shape_to_string(teacher.shape()));
  }
  auto [s, t] = shared_augment(student, teacher, augment_rng, spec.augment, data_extent);
  return detail::pair_discrepancy(s, t, spec.kind, spec.feature_net);
}

/// Graph-free per-sample discrepancy between row i of two batches:
/// l1 -> mean_d |a - b|, l2 -> mean_d (a - b)^2,
/// feature -> mean over feature dims of the embedding difference squared.
/// Embeddings must be precomputed by the caller for the feature kind (so
/// batched callers embed once); pass the embedded rows as a/b then.
inline double sample_discrepancy(const double* a, const double* b, std::size_t dim,
                                 SdKind kind) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double diff = a[j] - b[j];
    acc += kind == SdKind::L1 ? std::abs(diff) : diff * diff;
  }
  return acc / static_cast<double>(dim);
}

/// Graph-free batch version of the SD discrepancy (no augmentation): the
/// monitoring value logged for baseline runs. Returns the mean over samples.
inline double sd_monitor_value(const Tensor& student, const Tensor& teacher,
                               SdKind kind, const std::optional<MlpParams>& feature_net) {
  if (!student.same_shape(teacher) || student.rank() != 2) {
    throw std::invalid_argument("sd_monitor_value: incompatible shapes " +
                                shape_to_string(student.shape()) + " vs " +
                                shape_to_string(teacher.shape()));
  }
  Tensor a = student, b = teacher;
  if (kind == SdKind::Feature) {
    if (!feature_net) {
      throw std::invalid_argument("sd_monitor_value: feature kind requires a feature_net");
    }
    a = forward_raw(*feature_net, student);
    b = forward_raw(*feature_net, teacher);
  }
  const std::size_t n = a.rows(), d = a.cols();
  const SdKind row_kind = kind == SdKind::Feature ? SdKind::L2 : kind;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += sample_discrepancy(a.data() + i * d, b.data() + i * d, d, row_kind);
  }
  return acc / static_cast<double>(n);
}

}  // namespace sdgan
