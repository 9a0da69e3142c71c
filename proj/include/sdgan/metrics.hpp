#pragma once
// Distribution-level evaluation:
//   * Frechet distance between Gaussian fits of two sample sets, both
//     directly in data space and through a frozen random feature network
//     (the small-scale analogue of an Inception-feature Frechet score).
//   * Mode coverage / high-quality-sample fraction against the known mixture.
//   * Checkpoint-trajectory variance: how much the generator's output on
//     frozen latents drifts between consecutive checkpoints.
//   * Joint ranking of latents by (teacher discrepancy, discriminator score).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdgan/data.hpp"
#include "sdgan/losses.hpp"
#include "sdgan/mlp.hpp"
#include "sdgan/tensor.hpp"

namespace sdgan {

// ---------------------------------------------------------------------------
// Gaussian fits and the Frechet distance
// ---------------------------------------------------------------------------

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetric by construction

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

/// Mean and covariance of an [N x d] sample set. Unbiased covariance for
/// N >= 2; a single sample yields a zero covariance. The result is
/// symmetrised exactly, and a small ridge keeps it usable downstream.
inline GaussianFit fit_gaussian(const Tensor& samples, double ridge = 1e-6) {
  if (samples.rank() != 2) {
    throw std::invalid_argument("fit_gaussian: samples must be [N x d], got " +
                                shape_to_string(samples.shape()));
  }
  const std::size_t n = samples.rows(), d = samples.cols();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      x(samples.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  GaussianFit fit;
  fit.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - fit.mean.transpose();
  if (n >= 2) {
    fit.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  } else {
    fit.cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  }
  fit.cov = ((fit.cov + fit.cov.transpose()) / 2.0).eval();
  fit.cov.diagonal().array() += ridge;
  return fit;
}

namespace detail {

/// Principal square root of a symmetric PSD matrix via its eigensystem.
/// Small negative eigenvalues (within `tol` of zero) are clamped; anything
/// more negative is a genuine non-PSD input and an error.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tol = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("psd_sqrt: eigendecomposition failed");
  }
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, std::abs(ev.maxCoeff()));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol * scale) {
      throw std::invalid_argument("psd_sqrt: matrix is not positive semi-definite "
                                  "(eigenvalue " + std::to_string(ev[i]) + ")");
    }
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Frechet distance (squared 2-Wasserstein between Gaussians):
///   d^2 = |m1 - m2|^2 + tr(C1 + C2 - 2 (C1 C2)^{1/2}).
/// The cross term is computed as sqrt(S1 C2 S1) with S1 = sqrt(C1), which is
/// symmetric PSD and shares the spectrum of C1 C2 — this keeps the whole
/// computation inside self-adjoint solvers. Result is clamped at 0 (the
/// exact value cannot be negative; rounding can produce a tiny negative).
inline double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("frechet_distance: dimension mismatch " +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  const Eigen::MatrixXd s1 = detail::psd_sqrt(a.cov);
  const Eigen::MatrixXd inner = s1 * b.cov * s1;
  const Eigen::MatrixXd cross = detail::psd_sqrt((inner + inner.transpose()) / 2.0);
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double trace_term = a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
  return std::max(0.0, mean_term + trace_term);
}

/// Frechet distance between Gaussian fits of two sample sets in data space.
inline double sample_frechet(const Tensor& a, const Tensor& b, double ridge = 1e-6) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
    throw std::invalid_argument("sample_frechet: incompatible shapes " +
                                shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
  return frechet_distance(fit_gaussian(a, ridge), fit_gaussian(b, ridge));
}

/// Frechet distance in the embedding space of a frozen random feature
/// network: embed both sets, then fit-and-compare. A randomly initialised,
/// never-trained extractor is enough to expose distributional drift at this
/// scale, and it keeps the metric independent of any trained model.
inline double random_feature_frechet(const Tensor& a, const Tensor& b,
                                     const MlpParams& feature_net, double ridge = 1e-6) {
  return sample_frechet(forward_raw(feature_net, a), forward_raw(feature_net, b), ridge);
}

// ---------------------------------------------------------------------------
// mode coverage
// ---------------------------------------------------------------------------

struct ModeCoverage {
  std::size_t modes_hit = 0;       // modes owning >= 1 high-quality sample
  double high_quality_fraction = 0.0;
};

/// A sample is high-quality if it lies within threshold_std * mode_std of
/// its nearest mode centre; that nearest mode then "owns" the sample.
inline ModeCoverage mode_coverage(const Tensor& samples, const DataSpec& spec,
                                  double threshold_std = 3.0) {
  if (samples.rank() != 2 || samples.cols() != 2) {
    throw std::invalid_argument("mode_coverage: samples must be [N x 2], got " +
                                shape_to_string(samples.shape()));
  }
  if (!(threshold_std > 0.0)) {
    throw std::invalid_argument("mode_coverage: threshold_std must be > 0");
  }
  const auto means = spec.mode_means();
  const double r_hq = threshold_std * spec.mode_std;
  std::vector<char> hit(means.size(), 0);
  std::size_t n_hq = 0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const double x = samples.at(i, 0), y = samples.at(i, 1);
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < means.size(); ++m) {
      const double dx = x - means[m][0], dy = y - means[m][1];
      const double sq = dx * dx + dy * dy;
      if (sq < best_sq) {
        best_sq = sq;
        best = m;
      }
    }
    if (best_sq <= r_hq * r_hq) {
      ++n_hq;
      hit[best] = 1;
    }
  }
  ModeCoverage cov;
  for (char h : hit) cov.modes_hit += h;
  cov.high_quality_fraction =
      static_cast<double>(n_hq) / static_cast<double>(samples.rows());
  return cov;
}

// ---------------------------------------------------------------------------
// checkpoint trajectory variance
// ---------------------------------------------------------------------------

/// A sequence of generator snapshots plus the frozen latents they are probed
/// with. Snapshots are in training order.
struct CheckpointSeries {
  std::vector<MlpParams> snapshots;
  Tensor latents;  // [N x latent_dim]
};

struct VarianceStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over latents
};

/// Per-latent mean discrepancy between consecutive checkpoint outputs,
/// summarised over latents. `kind` selects the same distance family as the
/// SD loss; Feature requires `feature_net`. L2 here is the squared Euclidean
/// norm per latent (not dim-normalised), l1 the 1-norm.
inline VarianceStats trajectory_variance(const CheckpointSeries& series, SdKind kind,
                                         const std::optional<MlpParams>& feature_net = {}) {
  if (series.snapshots.size() < 2) {
    throw std::invalid_argument("trajectory_variance: need >= 2 checkpoints, got " +
                                std::to_string(series.snapshots.size()));
  }
  if (series.latents.rank() != 2) {
    throw std::invalid_argument("trajectory_variance: latents must be [N x d]");
  }
  if (kind == SdKind::Feature && !feature_net) {
    throw std::invalid_argument("trajectory_variance: feature kind requires a feature_net");
  }
  const std::size_t n = series.latents.rows();
  const std::size_t k = series.snapshots.size();
  // Outputs (or embeddings) per checkpoint, evaluated once.
  std::vector<Tensor> outs;
  outs.reserve(k);
  for (const MlpParams& p : series.snapshots) {
    Tensor o = forward_raw(p, series.latents);
    if (kind == SdKind::Feature) o = forward_raw(*feature_net, o);
    outs.push_back(std::move(o));
  }
  const std::size_t d = outs.front().cols();
  std::vector<double> per_latent(n, 0.0);
  for (std::size_t pair = 0; pair + 1 < k; ++pair) {
    const Tensor& a = outs[pair];
    const Tensor& b = outs[pair + 1];
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[i * d + j] - b[i * d + j];
        acc += kind == SdKind::L1 ? std::abs(diff) : diff * diff;
      }
      per_latent[i] += acc;
    }
  }
  const double inv_pairs = 1.0 / static_cast<double>(k - 1);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    per_latent[i] *= inv_pairs;
    mean += per_latent[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : per_latent) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  return VarianceStats{mean, std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// joint SD / discriminator ranking
// ---------------------------------------------------------------------------

struct RankedSample {
  std::size_t latent_index = 0;
  double sd_discrepancy = 0.0;  // student-teacher distance for this latent
  double d_score = 0.0;         // discriminator logit on the teacher output
  std::array<double, 2> teacher_point{};
};

struct RankGroups {
  // Within the top-`pool` latents by SD discrepancy: the k highest / lowest
  // by discriminator score. Likewise within the bottom pool.
  std::vector<RankedSample> high_sd_high_d;
  std::vector<RankedSample> high_sd_low_d;
  std::vector<RankedSample> low_sd_high_d;
  std::vector<RankedSample> low_sd_low_d;
};

/// Scores `n_latents` fresh latents by (a) the student-teacher output
/// discrepancy and (b) the discriminator's logit on the teacher output,
/// then returns the four extreme groups of size k, drawn from SD pools of
/// size `pool`. All four groups are pairwise disjoint (requires
/// 2*pool <= n_latents and 2*k <= pool). Ties break by latent index, so the
/// result is deterministic given the rng state.
inline RankGroups rank_joint_extremes(const MlpParams& generator, const MlpParams& teacher,
                                      const MlpParams& discriminator, std::size_t n_latents,
                                      std::size_t pool, std::size_t k,
                                      const SdLossSpec& spec, Rng& rng) {
  spec.validate();
  if (k == 0 || pool < 2 * k || n_latents < 2 * pool) {
    throw std::invalid_argument(
        "rank_joint_extremes: need n_latents >= 2*pool >= 4*k > 0, got n_latents=" +
        std::to_string(n_latents) + " pool=" + std::to_string(pool) +
        " k=" + std::to_string(k));
  }
  const std::size_t zdim = generator.spec.dims.front();
  Tensor z = Tensor::zeros({n_latents, zdim});
  for (std::size_t i = 0; i < z.numel(); ++i) z[i] = rng.normal();

  const Tensor student_out = forward_raw(generator, z);
  const Tensor teacher_out = forward_raw(teacher, z);
  const Tensor d_logits = forward_raw(discriminator, teacher_out);

  // Per-latent SD discrepancy; feature embeddings are computed batched.
  std::vector<double> sd_val(n_latents);
  if (spec.kind == SdKind::Feature) {
    const Tensor fa = forward_raw(*spec.feature_net, student_out);
    const Tensor fb = forward_raw(*spec.feature_net, teacher_out);
    const std::size_t fd = fa.cols();
    for (std::size_t i = 0; i < n_latents; ++i) {
      sd_val[i] = sample_discrepancy(fa.data() + i * fd, fb.data() + i * fd, fd, SdKind::L2);
    }
  } else {
    const std::size_t d = student_out.cols();
    for (std::size_t i = 0; i < n_latents; ++i) {
      sd_val[i] = sample_discrepancy(student_out.data() + i * d, teacher_out.data() + i * d,
                                     d, spec.kind);
    }
  }

  auto make_sample = [&](std::size_t i) {
    RankedSample s;
    s.latent_index = i;
    s.sd_discrepancy = sd_val[i];
    s.d_score = d_logits[i];
    s.teacher_point = {teacher_out.at(i, 0), teacher_out.at(i, 1)};
    return s;
  };

  // Order all latents by SD discrepancy (ascending; ties by index).
  std::vector<std::size_t> by_sd(n_latents);
  std::iota(by_sd.begin(), by_sd.end(), 0);
  std::sort(by_sd.begin(), by_sd.end(), [&](std::size_t a, std::size_t b) {
    if (sd_val[a] != sd_val[b]) return sd_val[a] < sd_val[b];
    return a < b;
  });

  auto split_by_d = [&](std::vector<std::size_t> indices) {
    // Sort a pool by discriminator score ascending (ties by index) and take
    // the k extremes from each end.
    std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      if (d_logits[a] != d_logits[b]) return d_logits[a] < d_logits[b];
      return a < b;
    });
    std::pair<std::vector<RankedSample>, std::vector<RankedSample>> out;  // {high, low}
    for (std::size_t i = 0; i < k; ++i) {
      out.first.push_back(make_sample(indices[indices.size() - 1 - i]));
      out.second.push_back(make_sample(indices[i]));
    }
    return out;
  };

  std::vector<std::size_t> low_pool(by_sd.begin(), by_sd.begin() + pool);
  std::vector<std::size_t> high_pool(by_sd.end() - pool, by_sd.end());
  RankGroups g;
  auto high_split = split_by_d(std::move(high_pool));
  g.high_sd_high_d = std::move(high_split.first);
  g.high_sd_low_d = std::move(high_split.second);
  auto low_split = split_by_d(std::move(low_pool));
  g.low_sd_high_d = std::move(low_split.first);
  g.low_sd_low_d = std::move(low_split.second);
  return g;
}

}  // namespace sdgan
