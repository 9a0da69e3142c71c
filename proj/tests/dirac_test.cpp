// Tests for the one-parameter stability engine. Three independent oracles
// guard the analytic path:
//   * characteristic coefficients vs a trace/minor/determinant expansion of
//     the Jacobian matrix itself,
//   * eigenvalues vs Eigen's general (non-symmetric) eigensolver,
//   * the Jacobian vs central finite differences of the vector field.

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>

#include "sdgan/dirac.hpp"
#include "sdgan/rng.hpp"

using sdgan::DiracParams;
using sdgan::DiracState;
using sdgan::Mat3;
using sdgan::Rng;

namespace {

// --- independent oracles ---------------------------------------------------

/// Coefficients of det(lambda I - J) via trace, principal minors, det.
std::array<double, 4> coeffs_from_matrix(const Mat3& j) {
  const double tr = j[0][0] + j[1][1] + j[2][2];
  auto minor2 = [&](int a, int b) {
    return j[a][a] * j[b][b] - j[a][b] * j[b][a];
  };
  const double m = minor2(0, 1) + minor2(0, 2) + minor2(1, 2);
  const double det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
                     j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
                     j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
  return {1.0, -tr, m, -det};
}

Eigen::Matrix3d to_eigen(const Mat3& j) {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = j[r][c];
  return m;
}

/// Eigenvalues via Eigen's solver, sorted by (re, im).
std::array<std::complex<double>, 3> eigen_oracle(const DiracParams& p) {
  Eigen::EigenSolver<Eigen::Matrix3d> es(to_eigen(sdgan::dirac_jacobian(p)));
  std::array<std::complex<double>, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = es.eigenvalues()[i];
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

std::array<std::complex<double>, 3> sorted(std::array<std::complex<double>, 3> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

DiracParams random_params(Rng& rng, bool zero_alpha) {
  DiracParams p;
  p.eta_g = rng.uniform(0.05, 2.0);
  p.eta_d = rng.uniform(0.05, 2.0);
  p.eta_phi = rng.uniform(0.001, 0.9);
  p.c = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 2.0);
  p.alpha = zero_alpha ? 0.0 : rng.uniform(0.01, 2.0);
  return p;
}

}  // namespace

// ===========================================================================
// vector field and Jacobian
// ===========================================================================

TEST(VectorField, HandComputedValues) {
  DiracParams p{0.1, 0.1, 0.01, 1.0, 1.0};
  // At (1, 1, 1): theta' = -0.1*(1*1 + 1*(1-1)) = -0.1; psi' = 0.1*1*1; phi' = 0.
  const DiracState d = sdgan::vector_field({1.0, 1.0, 1.0}, p);
  EXPECT_NEAR(d.theta, -0.1, 1e-15);
  EXPECT_NEAR(d.psi, 0.1, 1e-15);
  EXPECT_NEAR(d.phi, 0.0, 1e-15);
  // The shadow pulls the generator: at (2, 0, 0), theta' = -0.1*(0 + 1*2).
  const DiracState d2 = sdgan::vector_field({2.0, 0.0, 0.0}, p);
  EXPECT_NEAR(d2.theta, -0.2, 1e-15);
  EXPECT_NEAR(d2.psi, 0.2, 1e-15);
  EXPECT_NEAR(d2.phi, 0.02, 1e-15);
}

TEST(VectorField, OriginIsEquilibrium) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const DiracParams p = random_params(rng, i % 2 == 0);
    const DiracState d = sdgan::vector_field({0, 0, 0}, p);
    EXPECT_DOUBLE_EQ(d.theta, 0.0);
    EXPECT_DOUBLE_EQ(d.psi, 0.0);
    EXPECT_DOUBLE_EQ(d.phi, 0.0);
  }
}

TEST(VectorField, RejectsInvalidParams) {
  DiracParams p;
  p.eta_g = 0.0;
  EXPECT_THROW(sdgan::vector_field({1, 0, 0}, p), std::invalid_argument);
  p = DiracParams{};
  p.c = 0.0;
  EXPECT_THROW(sdgan::dirac_jacobian(p), std::invalid_argument);
  p = DiracParams{};
  p.alpha = -0.5;
  EXPECT_THROW(sdgan::characteristic_coefficients(p), std::invalid_argument);
  p = DiracParams{};
  p.eta_phi = 1.0;  // outside [0, 1)
  EXPECT_THROW(sdgan::vector_field({1, 0, 0}, p), std::invalid_argument);
}

TEST(Jacobian, ClosedFormEntries) {
  DiracParams p{0.5, 0.25, 0.1, 2.0, -1.5};
  const Mat3 j = sdgan::dirac_jacobian(p);
  EXPECT_DOUBLE_EQ(j[0][0], -0.5 * 2.0);
  EXPECT_DOUBLE_EQ(j[0][1], -0.5 * -1.5);
  EXPECT_DOUBLE_EQ(j[0][2], 0.5 * 2.0);
  EXPECT_DOUBLE_EQ(j[1][0], 0.25 * -1.5);
  EXPECT_DOUBLE_EQ(j[1][1], 0.0);
  EXPECT_DOUBLE_EQ(j[1][2], 0.0);
  EXPECT_DOUBLE_EQ(j[2][0], 0.1);
  EXPECT_DOUBLE_EQ(j[2][1], 0.0);
  EXPECT_DOUBLE_EQ(j[2][2], -0.1);
}

TEST(Jacobian, MatchesFiniteDifferencesOfVectorField) {
  Rng rng(17);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const DiracParams p = random_params(rng, trial % 3 == 0);
    const DiracState s{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const Mat3 j = sdgan::dirac_jacobian(p);
    for (int col = 0; col < 3; ++col) {
      DiracState up = s, down = s;
      double* up_c = col == 0 ? &up.theta : col == 1 ? &up.psi : &up.phi;
      double* dn_c = col == 0 ? &down.theta : col == 1 ? &down.psi : &down.phi;
      *up_c += h;
      *dn_c -= h;
      const DiracState fu = sdgan::vector_field(up, p);
      const DiracState fd = sdgan::vector_field(down, p);
      const double fd_col[3] = {(fu.theta - fd.theta) / (2 * h),
                                (fu.psi - fd.psi) / (2 * h),
                                (fu.phi - fd.phi) / (2 * h)};
      for (int row = 0; row < 3; ++row) {
        EXPECT_NEAR(j[row][col], fd_col[row], 1e-7)
            << "entry (" << row << "," << col << ")";
      }
    }
  }
}

// ===========================================================================
// characteristic polynomial
// ===========================================================================

TEST(Characteristic, CanonicalExample) {
  // eta_g = eta_d = 1, eta_phi = 0.1, alpha = 1, c = 1:
  // lambda^3 + 1.1 lambda^2 + 1 lambda + 0.1, Hurwitz margin 1.1 - 0.1 = 1.
  DiracParams p{1.0, 1.0, 0.1, 1.0, 1.0};
  const auto a = sdgan::characteristic_coefficients(p);
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_NEAR(a[1], 1.1, 1e-15);
  EXPECT_NEAR(a[2], 1.0, 1e-15);
  EXPECT_NEAR(a[3], 0.1, 1e-15);
  const auto rep = sdgan::routh_hurwitz(p);
  EXPECT_NEAR(rep.hurwitz_margin, 1.0, 1e-12);
  EXPECT_TRUE(rep.routh_hurwitz_pass);
}

TEST(Characteristic, MatchesCofactorExpansionOracle) {
  Rng rng(29);
  for (int trial = 0; trial < 1000; ++trial) {
    const DiracParams p = random_params(rng, trial % 4 == 0);
    const auto closed = sdgan::characteristic_coefficients(p);
    const auto oracle = coeffs_from_matrix(sdgan::dirac_jacobian(p));
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(closed[i], oracle[i], 1e-12)
          << "coefficient a" << (3 - i) << " at trial " << trial;
    }
  }
}

TEST(Characteristic, SignFlipOfCIsIrrelevant) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    DiracParams p = random_params(rng, false);
    DiracParams q = p;
    q.c = -p.c;
    const auto a = sdgan::characteristic_coefficients(p);
    const auto b = sdgan::characteristic_coefficients(q);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(a[i], b[i]);
  }
}

// ===========================================================================
// eigenvalues
// ===========================================================================

TEST(Eigenvalues, FactoredCaseAtAlphaZero) {
  // alpha = 0 factors exactly: (lambda + eta_phi)(lambda^2 + eta_d eta_g c^2).
  DiracParams p{1.0, 1.0, 0.05, 0.0, 1.0};
  const auto roots = sorted(sdgan::dirac_eigenvalues(p));
  EXPECT_NEAR(roots[0].real(), -0.05, 1e-12);
  EXPECT_NEAR(roots[0].imag(), 0.0, 1e-12);
  EXPECT_NEAR(roots[1].real(), 0.0, 1e-12);
  EXPECT_NEAR(roots[1].imag(), -1.0, 1e-12);
  EXPECT_NEAR(roots[2].real(), 0.0, 1e-12);
  EXPECT_NEAR(roots[2].imag(), 1.0, 1e-12);
}

TEST(Eigenvalues, MatchEigenSolverOracle) {
  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const DiracParams p = random_params(rng, trial % 4 == 0);
    const auto mine = sorted(sdgan::dirac_eigenvalues(p));
    const auto oracle = eigen_oracle(p);
    for (int i = 0; i < 3; ++i) {
      const double scale = 1.0 + std::abs(oracle[i]);
      EXPECT_LT(std::abs(mine[i] - oracle[i]), 1e-8 * scale)
          << "root " << i << " at trial " << trial << ": mine=" << mine[i].real() << "+"
          << mine[i].imag() << "i oracle=" << oracle[i].real() << "+" << oracle[i].imag()
          << "i";
    }
  }
}

TEST(Eigenvalues, ResidualsSmallOnRandomCubics) {
  // Exercise the raw cubic solver on coefficients beyond the Dirac family.
  Rng rng(43);
  for (int trial = 0; trial < 2000; ++trial) {
    const double a2 = rng.uniform(-5, 5);
    const double a1 = rng.uniform(-5, 5);
    const double a0 = rng.uniform(-5, 5);
    const auto roots = sdgan::solve_monic_cubic(a2, a1, a0);
    for (const auto& z : roots) {
      const std::complex<double> r = ((z + a2) * z + a1) * z + a0;
      const double mag = std::max(1.0, std::abs(z) * std::abs(z) * std::abs(z));
      EXPECT_LT(std::abs(r), 1e-9 * 16.0 * mag) << "residual at trial " << trial;
    }
  }
}

// ===========================================================================
// Routh-Hurwitz
// ===========================================================================

TEST(RouthHurwitz, MarginIdentity) {
  // a2*a1 - a3*a0 == eta_d * eta_g^2 * c^2 * alpha.
  Rng rng(53);
  for (int trial = 0; trial < 1000; ++trial) {
    const DiracParams p = random_params(rng, trial % 5 == 0);
    const auto rep = sdgan::routh_hurwitz(p);
    const double expected = p.eta_d * p.eta_g * p.eta_g * p.c * p.c * p.alpha;
    EXPECT_NEAR(rep.hurwitz_margin, expected, 1e-12) << "trial " << trial;
  }
}

TEST(RouthHurwitz, PassAgreesWithEigenvalueSigns) {
  Rng rng(59);
  for (int trial = 0; trial < 1000; ++trial) {
    const bool zero_alpha = trial % 2 == 0;
    const DiracParams p = random_params(rng, zero_alpha);
    const auto rep = sdgan::routh_hurwitz(p);
    if (zero_alpha) {
      // Marginal: a conjugate pair sits on the imaginary axis.
      EXPECT_FALSE(rep.routh_hurwitz_pass);
      EXPECT_NEAR(rep.max_real_part, 0.0, 1e-9);
    } else {
      EXPECT_TRUE(rep.routh_hurwitz_pass) << "alpha=" << p.alpha;
      EXPECT_LT(rep.max_real_part, 0.0);
    }
    // Classifier consistency both ways.
    if (rep.routh_hurwitz_pass) {
      EXPECT_LT(rep.max_real_part, 1e-10);
    } else {
      EXPECT_GT(rep.max_real_part, -1e-9);
    }
  }
}

TEST(RouthHurwitz, StabilityGrid) {
  // The full default sweep grid: stable iff alpha > 0.
  const double alpha_grid[] = {0.0, 0.01, 0.1, 0.5, 1.0, 2.0};
  const double eta_phi_grid[] = {0.001, 0.01, 0.1};
  for (double alpha : alpha_grid) {
    for (double eta_phi : eta_phi_grid) {
      DiracParams p{0.1, 0.1, eta_phi, alpha, 1.0};
      const auto rep = sdgan::routh_hurwitz(p);
      EXPECT_EQ(rep.routh_hurwitz_pass, alpha > 0.0)
          << "alpha=" << alpha << " eta_phi=" << eta_phi;
      if (alpha > 0.0) {
        EXPECT_LT(rep.max_real_part, 0.0);
      } else {
        EXPECT_NEAR(rep.max_real_part, 0.0, 1e-9);
      }
    }
  }
}

// ===========================================================================
// continuous simulation
// ===========================================================================

TEST(SimulateOde, MatchesExactRotationAtAlphaZero) {
  // eta_g = eta_d = c = 1, eta_phi = 0: theta(t) = cos t, psi(t) = sin t.
  DiracParams p{1.0, 1.0, 0.0, 0.0, 1.0};
  const auto traj = sdgan::simulate_ode({1.0, 0.0, 0.0}, p, 1.0, 0.01);
  ASSERT_EQ(traj.size(), 101u);
  EXPECT_FALSE(traj.diverged);
  EXPECT_NEAR(traj.back().theta, std::cos(1.0), 1e-8);
  EXPECT_NEAR(traj.back().psi, std::sin(1.0), 1e-8);
  EXPECT_DOUBLE_EQ(traj.back().phi, 0.0);
  EXPECT_NEAR(traj.times.back(), 1.0, 1e-12);
}

TEST(SimulateOde, ConservedQuantityAtAlphaZero) {
  // At alpha = 0, E = eta_d * theta^2 + eta_g * psi^2 is exactly conserved
  // by the flow (d/dt E = 0), so RK4 must hold it to high accuracy.
  DiracParams p{0.7, 1.3, 0.05, 0.0, 1.2};
  const DiracState s0{1.0, -0.5, 0.3};
  const auto traj = sdgan::simulate_ode(s0, p, 50.0, 1e-3);
  const double e0 = p.eta_d * s0.theta * s0.theta + p.eta_g * s0.psi * s0.psi;
  double worst = 0.0;
  for (const auto& s : traj.states) {
    const double e = p.eta_d * s.theta * s.theta + p.eta_g * s.psi * s.psi;
    worst = std::max(worst, std::abs(e - e0) / e0);
  }
  EXPECT_LT(worst, 1e-3);
  EXPECT_FALSE(traj.diverged);
}

TEST(SimulateOde, ContractsWithPositiveAlpha) {
  DiracParams p{1.0, 1.0, 0.05, 0.5, 1.0};
  const auto traj = sdgan::simulate_ode({1.0, 1.0, 1.0}, p, 200.0, 1e-2);
  EXPECT_FALSE(traj.diverged);
  const DiracState start{1.0, 1.0, 1.0};
  EXPECT_LT(traj.back().norm(), 0.5 * start.norm());
  // The whole tail stays small once contracted.
  EXPECT_LT(traj.back().radius(), 0.5);
}

TEST(SimulateOde, EulerSpiralsOutAndTruncates) {
  // Explicit Euler on a pure rotation gains radius every step; with a large
  // step it blows past the divergence threshold and the run is truncated.
  DiracParams p{1.0, 1.0, 0.0, 0.0, 5.0};
  const auto traj =
      sdgan::simulate_ode({1.0, 0.0, 0.0}, p, 50.0, 0.5, sdgan::Integrator::Euler);
  EXPECT_TRUE(traj.diverged);
  EXPECT_LT(traj.size(), 101u);  // truncated before t_end
  EXPECT_GT(traj.back().norm(), 1e6);
}

TEST(SimulateOde, OriginStaysAtOrigin) {
  DiracParams p{0.5, 0.5, 0.1, 1.0, 1.0};
  const auto traj = sdgan::simulate_ode({0, 0, 0}, p, 5.0, 0.01);
  EXPECT_DOUBLE_EQ(traj.back().theta, 0.0);
  EXPECT_DOUBLE_EQ(traj.back().psi, 0.0);
  EXPECT_DOUBLE_EQ(traj.back().phi, 0.0);
}

TEST(SimulateOde, ArgumentValidation) {
  DiracParams p;
  EXPECT_THROW(sdgan::simulate_ode({1, 0, 0}, p, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(sdgan::simulate_ode({1, 0, 0}, p, -1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(sdgan::simulate_ode({1, 0, 0}, p, 1.0, 0.1, sdgan::Integrator::Discrete),
               std::invalid_argument);
}

// ===========================================================================
// discrete simulation
// ===========================================================================

TEST(SimulateDiscrete, ExactGrowthFactorWithoutSd) {
  // Jacobi updates with alpha = 0, eta_g = eta_d = eta:
  // r_{k+1}^2 = (1 + eta^2 c^2) r_k^2 exactly.
  const double eta = 0.1;
  DiracParams p{eta, eta, 0.0, 0.0, 1.0};
  const auto traj = sdgan::simulate_discrete({1.0, 0.0, 0.0}, p, 200, 0.0);
  const double factor = std::sqrt(1.0 + eta * eta);
  double expect = 1.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EXPECT_NEAR(traj.states[k].radius(), expect, 1e-9 * expect) << "step " << k;
    expect *= factor;
  }
  EXPECT_GE(traj.back().radius(), 1.0);  // never converges
}

TEST(SimulateDiscrete, BaselineGanDivergesPastThreshold) {
  DiracParams p{0.1, 0.1, 0.0, 0.0, 1.0};
  const auto traj = sdgan::simulate_discrete({1.0, 1.0, 1.0}, p, 8000, 0.0);
  EXPECT_TRUE(traj.diverged);
  EXPECT_GT(traj.back().norm(), 1e6);
}

TEST(SimulateDiscrete, SdWithEmaConverges) {
  DiracParams p{0.1, 0.1, 0.0, 1.0, 1.0};
  const auto traj = sdgan::simulate_discrete({1.0, 1.0, 1.0}, p, 5000, 0.99);
  EXPECT_FALSE(traj.diverged);
  EXPECT_LT(traj.back().norm(), 1e-6);
  EXPECT_LT(traj.back().radius(), 1e-6);
}

TEST(SimulateDiscrete, ShadowStaysInConvexHull) {
  // phi' is a convex combination of phi and the new theta.
  DiracParams p{0.1, 0.1, 0.0, 1.0, 1.0};
  const auto traj = sdgan::simulate_discrete({1.0, -1.0, 0.5}, p, 500, 0.95);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double phi_prev = traj.states[k - 1].phi;
    const double theta_new = traj.states[k].theta;
    const double lo = std::min(phi_prev, theta_new) - 1e-12;
    const double hi = std::max(phi_prev, theta_new) + 1e-12;
    EXPECT_GE(traj.states[k].phi, lo) << "step " << k;
    EXPECT_LE(traj.states[k].phi, hi) << "step " << k;
  }
}

TEST(SimulateDiscrete, OriginFixedAndValidation) {
  DiracParams p{0.1, 0.1, 0.0, 1.0, 1.0};
  const auto traj = sdgan::simulate_discrete({0, 0, 0}, p, 100, 0.9);
  EXPECT_DOUBLE_EQ(traj.back().norm(), 0.0);
  EXPECT_THROW(sdgan::simulate_discrete({1, 0, 0}, p, 10, 1.0), std::invalid_argument);
  EXPECT_THROW(sdgan::simulate_discrete({1, 0, 0}, p, 10, -0.1), std::invalid_argument);
}

TEST(SimulateDiscrete, AlternatingOrderDampsTheSpiral) {
  // With alternating updates the discriminator sees the fresh generator;
  // on the pure bilinear game this bounds the radius growth per step below
  // the simultaneous factor.
  const double eta = 0.1;
  DiracParams p{eta, eta, 0.0, 0.0, 1.0};
  const auto simul = sdgan::simulate_discrete({1.0, 0.0, 0.0}, p, 500, 0.0,
                                              sdgan::UpdateOrder::Simultaneous);
  const auto alt = sdgan::simulate_discrete({1.0, 0.0, 0.0}, p, 500, 0.0,
                                            sdgan::UpdateOrder::Alternating);
  EXPECT_LT(alt.back().radius(), simul.back().radius());
}
