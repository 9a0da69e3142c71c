#pragma once
// Shared differentiable augmentation for the distillation pair.
//
// A random subset of 2 out of 3 candidate transforms (axis reflection,
// small rotation, small translation) is sampled once, each gated at
// probability 0.5, composed into a single affine map, and applied to BOTH
// inputs inside the autodiff graph. Every candidate is an isometry (rigid
// motion), so pairwise distances within a batch are preserved and the
// student-teacher discrepancy is measured in a jittered but undistorted
// frame. Points are row vectors: p' = p A^T + t.

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include "sdgan/autodiff.hpp"
#include "sdgan/rng.hpp"

namespace sdgan {

/// 2-D affine map p -> A p + t with A = [[a, b], [c, d]].
struct Affine2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
  double tx = 0.0, ty = 0.0;

  static Affine2 identity() { return {}; }

  /// Composition: result applies `first`, then `*this`.
  Affine2 after(const Affine2& first) const {
    Affine2 r;
    r.a = a * first.a + b * first.c;
    r.b = a * first.b + b * first.d;
    r.c = c * first.a + d * first.c;
    r.d = c * first.b + d * first.d;
    r.tx = a * first.tx + b * first.ty + tx;
    r.ty = c * first.tx + d * first.ty + ty;
    return r;
  }

  bool is_identity() const {
    return a == 1.0 && b == 0.0 && c == 0.0 && d == 1.0 && tx == 0.0 && ty == 0.0;
  }
};

inline constexpr double kAugmentRotationMaxDeg = 5.0;
inline constexpr double kAugmentTranslateFrac = 0.01;
inline constexpr double kAugmentGateProb = 0.5;

/// Samples the shared transform. Consumes draws from `rng` only; the number
/// of draws depends on which gates fire, which is why augmentation gets its
/// own rng stream in the training loop.
inline Affine2 sample_shared_augment(Rng& rng, double data_extent) {
  constexpr double kPi = 3.14159265358979323846;
  // Choose which 2 of the 3 candidates participate this round; the excluded
  // one never draws. Applied in fixed declaration order:
  // reflect, rotate, translate.
  const std::uint64_t excluded = rng.below(3);
  Affine2 total = Affine2::identity();
  for (std::uint64_t t = 0; t < 3; ++t) {
    if (t == excluded) continue;
    if (!(rng.uniform() < kAugmentGateProb)) continue;
    Affine2 step;
    switch (t) {
      case 0: {  // reflection across a random axis through the origin
        const double w = rng.uniform(0.0, kPi);
        step.a = std::cos(2.0 * w);
        step.b = std::sin(2.0 * w);
        step.c = std::sin(2.0 * w);
        step.d = -std::cos(2.0 * w);
        break;
      }
      case 1: {  // rotation by up to +/- kAugmentRotationMaxDeg
        const double max_rad = kAugmentRotationMaxDeg * kPi / 180.0;
        const double a = rng.uniform(-max_rad, max_rad);
        step.a = std::cos(a);
        step.b = -std::sin(a);
        step.c = std::sin(a);
        step.d = std::cos(a);
        break;
      }
      case 2: {  // translation by up to +/- kAugmentTranslateFrac * extent
        const double amp = kAugmentTranslateFrac * data_extent;
        step.tx = rng.uniform(-amp, amp);
        step.ty = rng.uniform(-amp, amp);
        break;
      }
    }
    total = step.after(total);
  }
  return total;
}

/// Applies an affine map to an [n x 2] point batch inside the graph.
/// The map enters as constants, so gradients flow through to `points` with
/// the transform treated as fixed.
inline Var apply_affine(const Var& points, const Affine2& m) {
  // Row-vector convention: p' = p A^T + t.
  Var at = Var::constant(Tensor::from({2, 2}, {m.a, m.c, m.b, m.d}));
  Var t = Var::constant(Tensor::from({2}, {m.tx, m.ty}));
  return add_bias(matmul(points, at), t);
}

/// Graph-free version for monitors and metrics.
inline Tensor apply_affine_raw(const Tensor& points, const Affine2& m) {
  Tensor out = Tensor::zeros(points.shape());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double x = points.at(i, 0), y = points.at(i, 1);
    out.at(i, 0) = m.a * x + m.b * y + m.tx;
    out.at(i, 1) = m.c * x + m.d * y + m.ty;
  }
  return out;
}

/// Samples one shared transform and applies it to both members of the
/// distillation pair. When disabled, returns the inputs untouched and
/// consumes no randomness.
inline std::pair<Var, Var> shared_augment(const Var& student, const Var& teacher,
                                          Rng& rng, bool enabled, double data_extent) {
  if (!enabled) return {student, teacher};
  const Affine2 m = sample_shared_augment(rng, data_extent);
  if (m.is_identity()) return {student, teacher};
  return {apply_affine(student, m), apply_affine(teacher, m)};
}

}  // namespace sdgan
