#pragma once
// Synthetic 2-D mixture-of-Gaussians data. Three layouts: a ring of modes, a
// square grid of modes, or a single Gaussian at the origin. Sampling picks a
// mode uniformly, then adds isotropic noise; the draw order (mode index,
// x-noise, y-noise) is fixed so a given rng state determines the batch.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdgan/rng.hpp"
#include "sdgan/tensor.hpp"

namespace sdgan {

enum class DataKind { RingOfGaussians, GridOfGaussians, SingleGaussian };

inline std::string data_kind_name(DataKind k) {
  switch (k) {
    case DataKind::RingOfGaussians: return "ring_of_gaussians";
    case DataKind::GridOfGaussians: return "grid_of_gaussians";
    case DataKind::SingleGaussian: return "single_gaussian";
  }
  return "?";
}

inline DataKind data_kind_from_name(const std::string& s) {
  if (s == "ring_of_gaussians") return DataKind::RingOfGaussians;
  if (s == "grid_of_gaussians") return DataKind::GridOfGaussians;
  if (s == "single_gaussian") return DataKind::SingleGaussian;
  throw std::invalid_argument("unknown data kind: " + s);
}

struct DataSpec {
  DataKind kind = DataKind::RingOfGaussians;
  std::size_t n_modes = 8;
  double mode_std = 0.05;
  // Ring: circle radius. Grid: spacing between neighbouring modes. Ignored
  // for a single Gaussian.
  double layout_scale = 2.0;

  void validate() const {
    if (!(mode_std > 0.0)) throw std::invalid_argument("DataSpec: mode_std must be > 0");
    if (n_modes == 0) throw std::invalid_argument("DataSpec: n_modes must be >= 1");
    switch (kind) {
      case DataKind::RingOfGaussians:
        if (n_modes > 1 && !(layout_scale > 0.0)) {
          throw std::invalid_argument("DataSpec: ring radius must be > 0");
        }
        break;
      case DataKind::GridOfGaussians: {
        const auto side = grid_side();
        if (side * side != n_modes) {
          throw std::invalid_argument("DataSpec: grid n_modes must be a perfect square, got " +
                                      std::to_string(n_modes));
        }
        if (n_modes > 1 && !(layout_scale > 0.0)) {
          throw std::invalid_argument("DataSpec: grid spacing must be > 0");
        }
        break;
      }
      case DataKind::SingleGaussian:
        if (n_modes != 1) {
          throw std::invalid_argument("DataSpec: single_gaussian requires n_modes = 1");
        }
        break;
    }
  }

  std::size_t grid_side() const {
    auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_modes))));
    return side == 0 ? 1 : side;
  }

  /// Mode centres, in a fixed enumeration order.
  std::vector<std::array<double, 2>> mode_means() const {
    validate();
    std::vector<std::array<double, 2>> means;
    means.reserve(n_modes);
    switch (kind) {
      case DataKind::RingOfGaussians: {
        const double two_pi = 2.0 * 3.14159265358979323846;
        for (std::size_t i = 0; i < n_modes; ++i) {
          const double a = two_pi * static_cast<double>(i) / static_cast<double>(n_modes);
          means.push_back({layout_scale * std::cos(a), layout_scale * std::sin(a)});
        }
        break;
      }
      case DataKind::GridOfGaussians: {
        const std::size_t side = grid_side();
        const double half = 0.5 * static_cast<double>(side - 1);
        for (std::size_t iy = 0; iy < side; ++iy)
          for (std::size_t ix = 0; ix < side; ++ix)
            means.push_back({(static_cast<double>(ix) - half) * layout_scale,
                             (static_cast<double>(iy) - half) * layout_scale});
        break;
      }
      case DataKind::SingleGaussian:
        means.push_back({0.0, 0.0});
        break;
    }
    return means;
  }

  /// Characteristic extent of the layout; augmentation translation amplitude
  /// is proportional to this. At least 1 so a degenerate layout still jitters.
  double extent() const {
    double e = 1.0;
    switch (kind) {
      case DataKind::RingOfGaussians:
        e = layout_scale;
        break;
      case DataKind::GridOfGaussians:
        e = 0.5 * static_cast<double>(grid_side() - 1) * layout_scale;
        break;
      case DataKind::SingleGaussian:
        e = 1.0;
        break;
    }
    return std::max(e, 1.0);
  }
};

/// Draws an [n x 2] batch of data points.
inline Tensor sample_batch(const DataSpec& spec, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_batch: n must be >= 1");
  const auto means = spec.mode_means();  // validates spec
  Tensor out = Tensor::zeros({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = means[rng.below(means.size())];
    out[2 * i] = m[0] + spec.mode_std * rng.normal();
    out[2 * i + 1] = m[1] + spec.mode_std * rng.normal();
  }
  return out;
}

}  // namespace sdgan
