#pragma once
// Exact stability analysis of the one-parameter GAN ("Dirac" setting) with an
// EMA teacher and a self-distillation pull term.
//
// State: generator parameter theta, discriminator parameter psi, EMA shadow
// phi. Continuous-time dynamics:
//
//   d theta / dt = -eta_g * (c * psi + alpha * (theta - phi))
//   d psi   / dt =  eta_d * c * theta
//   d phi   / dt =  eta_phi * (theta - phi)
//
// eta_phi is the continuous-time analogue of the EMA rate (1 - beta).
// The Jacobian is constant (the system is linear), so the characteristic
// polynomial, its Routh-Hurwitz conditions and the eigenvalues answer the
// stability question exactly:
//
//   lambda^3 + (eta_g*alpha + eta_phi) lambda^2 + eta_d*eta_g*c^2 lambda
//            + eta_d*eta_g*eta_phi*c^2 = 0
//
// Hurwitz margin a2*a1 - a3*a0 = eta_d * eta_g^2 * c^2 * alpha: with all
// rates positive the system is asymptotically stable iff alpha > 0, and at
// alpha = 0 it is marginal (a conserved oscillation).

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdgan {

struct DiracParams {
  double eta_g = 0.1;    // generator step scale, > 0
  double eta_d = 0.1;    // discriminator step scale, > 0
  double eta_phi = 0.01; // EMA pull rate, in [0, 1)
  double alpha = 1.0;    // self-distillation weight, >= 0
  double c = 1.0;        // discriminator slope, != 0

  void validate() const {
    if (!(eta_g > 0.0)) throw std::invalid_argument("DiracParams: eta_g must be > 0");
    if (!(eta_d > 0.0)) throw std::invalid_argument("DiracParams: eta_d must be > 0");
    if (!(eta_phi >= 0.0 && eta_phi < 1.0)) {
      throw std::invalid_argument("DiracParams: eta_phi must lie in [0, 1)");
    }
    if (c == 0.0) throw std::invalid_argument("DiracParams: c must be nonzero");
    if (!(alpha >= 0.0)) throw std::invalid_argument("DiracParams: alpha must be >= 0");
  }
};

struct DiracState {
  double theta = 0.0;
  double psi = 0.0;
  double phi = 0.0;

  /// Distance of the (theta, psi) pair from the equilibrium at the origin.
  double radius() const { return std::sqrt(theta * theta + psi * psi); }

  double norm() const { return std::sqrt(theta * theta + psi * psi + phi * phi); }
};

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Right-hand side of the continuous dynamics at state s.
inline DiracState vector_field(const DiracState& s, const DiracParams& p) {
  p.validate();
  DiracState d;
  d.theta = -p.eta_g * (p.c * s.psi + p.alpha * (s.theta - s.phi));
  d.psi = p.eta_d * p.c * s.theta;
  d.phi = p.eta_phi * (s.theta - s.phi);
  return d;
}

/// Jacobian of the vector field. Constant in the state (linear system).
inline Mat3 dirac_jacobian(const DiracParams& p) {
  p.validate();
  return Mat3{{{-p.eta_g * p.alpha, -p.eta_g * p.c, p.eta_g * p.alpha},
               {p.eta_d * p.c, 0.0, 0.0},
               {p.eta_phi, 0.0, -p.eta_phi}}};
}

/// Coefficients {a3, a2, a1, a0} of det(lambda I - J) =
/// a3 l^3 + a2 l^2 + a1 l + a0, in closed form. a3 is always 1.
inline std::array<double, 4> characteristic_coefficients(const DiracParams& p) {
  p.validate();
  const double c2 = p.c * p.c;
  const double a1 = p.eta_d * p.eta_g * c2;
  // a0 reuses the rounded a1 so that the Hurwitz margin a2*a1 - a3*a0
  // cancels *exactly* at alpha = 0 (where a2 = eta_phi): the marginal case
  // must not drift to either side of the stability test through rounding.
  return {1.0, p.eta_g * p.alpha + p.eta_phi, a1, p.eta_phi * a1};
}

// ---------------------------------------------------------------------------
// cubic roots
// ---------------------------------------------------------------------------

namespace detail {

inline std::complex<double> eval_monic_cubic(double a2, double a1, double a0,
                                             std::complex<double> x) {
  return ((x + a2) * x + a1) * x + a0;
}

/// One real root of x^3 + a2 x^2 + a1 x + a0 via bisection-safeguarded
/// Newton on [-M, M], M the Cauchy bound (p(-M) < 0 < p(M) for a monic
/// cubic, so a real root is always bracketed).
inline double monic_cubic_real_root(double a2, double a1, double a0) {
  const double M = 1.0 + std::max(std::abs(a2), std::max(std::abs(a1), std::abs(a0)));
  auto f = [&](double x) { return ((x + a2) * x + a1) * x + a0; };
  auto df = [&](double x) { return (3.0 * x + 2.0 * a2) * x + a1; };
  double lo = -M, hi = M;
  double x = 0.0;
  if (f(0.0) == 0.0) return 0.0;
  (f(0.0) > 0.0 ? hi : lo) = 0.0;
  x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    (fx > 0.0 ? hi : lo) = x;
    double step_to = x - fx / df(x);
    // Fall back to bisection whenever Newton leaves the bracket.
    if (!(step_to > lo && step_to < hi)) step_to = 0.5 * (lo + hi);
    if (step_to == x) break;
    x = step_to;
    if (hi - lo < 1e-15 * (1.0 + std::abs(x))) break;
  }
  return x;
}

}  // namespace detail

/// All three roots of x^3 + a2 x^2 + a1 x + a0: one bracketed real root,
/// quadratic deflation for the remaining pair, then a complex Newton polish
/// of each root against the original cubic.
inline std::array<std::complex<double>, 3> solve_monic_cubic(double a2, double a1,
                                                             double a0) {
  const double r = detail::monic_cubic_real_root(a2, a1, a0);
  // Synthetic division: x^3+a2 x^2+a1 x+a0 = (x - r)(x^2 + b1 x + b0).
  const double b1 = a2 + r;
  const double b0 = a1 + r * b1;
  std::array<std::complex<double>, 3> roots;
  roots[0] = r;
  const double disc = b1 * b1 - 4.0 * b0;
  if (disc >= 0.0) {
    // Stable quadratic formula: avoid cancellation in the small root.
    const double s = std::sqrt(disc);
    const double q = -0.5 * (b1 + (b1 >= 0.0 ? s : -s));
    roots[1] = q;
    roots[2] = (q != 0.0) ? b0 / q : -b1 - q;
  } else {
    const double re = -0.5 * b1;
    const double im = 0.5 * std::sqrt(-disc);
    roots[1] = {re, im};
    roots[2] = {re, -im};
  }
  // Newton polish on the undeflated cubic; keep the step only if it reduces
  // the residual (guards against division by a tiny derivative at near-
  // multiple roots).
  for (auto& z : roots) {
    for (int it = 0; it < 3; ++it) {
      const std::complex<double> p = detail::eval_monic_cubic(a2, a1, a0, z);
      const std::complex<double> dp = (3.0 * z + 2.0 * a2) * z + a1;
      if (std::abs(dp) == 0.0) break;
      const std::complex<double> z_new = z - p / dp;
      if (std::abs(detail::eval_monic_cubic(a2, a1, a0, z_new)) < std::abs(p)) {
        z = z_new;
      } else {
        break;
      }
    }
  }
  return roots;
}

/// Eigenvalues of the Dirac Jacobian = roots of the characteristic cubic.
/// Enforces a residual bound as an internal consistency check.
inline std::array<std::complex<double>, 3> dirac_eigenvalues(const DiracParams& p) {
  const auto a = characteristic_coefficients(p);
  auto roots = solve_monic_cubic(a[1], a[2], a[3]);
  // Residual tolerance scales with the polynomial's own magnitude at the root.
  for (const auto& z : roots) {
    const double scale = 1.0 + std::abs(a[1]) + std::abs(a[2]) + std::abs(a[3]);
    const double az = std::abs(z);
    const double mag = std::max(1.0, az * az * az);
    if (std::abs(detail::eval_monic_cubic(a[1], a[2], a[3], z)) > 1e-9 * scale * mag) {
      throw std::runtime_error("dirac_eigenvalues: root residual exceeds tolerance");
    }
  }
  return roots;
}

// ---------------------------------------------------------------------------
// Routh-Hurwitz
// ---------------------------------------------------------------------------

struct StabilityReport {
  std::array<double, 4> coefficients{};  // {a3, a2, a1, a0}
  std::array<std::complex<double>, 3> eigenvalues{};
  double max_real_part = 0.0;
  double hurwitz_margin = 0.0;  // a2*a1 - a3*a0
  bool routh_hurwitz_pass = false;
};

/// Full stability report. For a monic cubic, Routh-Hurwitz asymptotic
/// stability is: a2 > 0, a1 > 0, a0 > 0 and a2*a1 > a3*a0.
inline StabilityReport routh_hurwitz(const DiracParams& p) {
  StabilityReport r;
  r.coefficients = characteristic_coefficients(p);
  r.eigenvalues = dirac_eigenvalues(p);
  r.max_real_part = r.eigenvalues[0].real();
  for (const auto& z : r.eigenvalues) r.max_real_part = std::max(r.max_real_part, z.real());
  const auto& a = r.coefficients;
  r.hurwitz_margin = a[1] * a[2] - a[0] * a[3];
  r.routh_hurwitz_pass = a[1] > 0.0 && a[2] > 0.0 && a[3] > 0.0 && r.hurwitz_margin > 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// simulation
// ---------------------------------------------------------------------------

enum class Integrator { Rk4, Euler, Discrete };

inline std::string integrator_name(Integrator i) {
  switch (i) {
    case Integrator::Rk4: return "rk4";
    case Integrator::Euler: return "euler";
    case Integrator::Discrete: return "discrete";
  }
  return "?";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<DiracState> states;  // same length as times, includes t = 0
  Integrator integrator = Integrator::Rk4;
  bool diverged = false;

  std::size_t size() const { return states.size(); }
  const DiracState& back() const { return states.back(); }
};

/// State norm beyond which a simulation is declared divergent and truncated.
inline constexpr double kDivergenceThreshold = 1e6;

/// Fixed-step integration of the continuous dynamics over [0, t_end].
/// Records every step including the initial state. If the state norm ever
/// exceeds kDivergenceThreshold the trajectory is truncated at that step and
/// flagged divergent.
inline Trajectory simulate_ode(const DiracState& s0, const DiracParams& p,
                               double t_end, double dt,
                               Integrator method = Integrator::Rk4) {
  p.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_ode: dt must be > 0");
  if (!(t_end >= 0.0)) throw std::invalid_argument("simulate_ode: t_end must be >= 0");
  if (method == Integrator::Discrete) {
    throw std::invalid_argument("simulate_ode: use simulate_discrete for the discrete map");
  }
  const auto n_steps = static_cast<std::size_t>(std::llround(t_end / dt));
  Trajectory traj;
  traj.integrator = method;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  DiracState s = s0;
  traj.times.push_back(0.0);
  traj.states.push_back(s);
  auto axpy = [](const DiracState& a, double h, const DiracState& b) {
    return DiracState{a.theta + h * b.theta, a.psi + h * b.psi, a.phi + h * b.phi};
  };
  for (std::size_t i = 1; i <= n_steps; ++i) {
    if (method == Integrator::Euler) {
      s = axpy(s, dt, vector_field(s, p));
    } else {
      // Classic RK4.
      const DiracState k1 = vector_field(s, p);
      const DiracState k2 = vector_field(axpy(s, 0.5 * dt, k1), p);
      const DiracState k3 = vector_field(axpy(s, 0.5 * dt, k2), p);
      const DiracState k4 = vector_field(axpy(s, dt, k3), p);
      s.theta += dt / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
      s.psi += dt / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi);
      s.phi += dt / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
    }
    traj.times.push_back(static_cast<double>(i) * dt);
    traj.states.push_back(s);
    if (!(s.norm() <= kDivergenceThreshold)) {  // also catches NaN
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

enum class UpdateOrder { Simultaneous, Alternating };

/// Discrete training analogue: explicit simultaneous (Jacobi) updates of
/// theta and psi followed by the EMA update of phi with rate beta,
///   theta' = theta - eta_g * (c psi + alpha (theta - phi))
///   psi'   = psi + eta_d * c * theta
///   phi'   = beta * phi + (1 - beta) * theta'
/// (the shadow tracks the *new* generator, matching the training loop).
/// With UpdateOrder::Alternating, psi' instead uses theta'.
inline Trajectory simulate_discrete(const DiracState& s0, const DiracParams& p,
                                    std::size_t n_steps, double beta,
                                    UpdateOrder order = UpdateOrder::Simultaneous) {
  p.validate();
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::invalid_argument("simulate_discrete: beta must lie in [0, 1)");
  }
  Trajectory traj;
  traj.integrator = Integrator::Discrete;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  DiracState s = s0;
  traj.times.push_back(0.0);
  traj.states.push_back(s);
  for (std::size_t i = 1; i <= n_steps; ++i) {
    DiracState next;
    next.theta = s.theta - p.eta_g * (p.c * s.psi + p.alpha * (s.theta - s.phi));
    const double theta_for_d = order == UpdateOrder::Simultaneous ? s.theta : next.theta;
    next.psi = s.psi + p.eta_d * p.c * theta_for_d;
    next.phi = beta * s.phi + (1.0 - beta) * next.theta;
    s = next;
    traj.times.push_back(static_cast<double>(i));
    traj.states.push_back(s);
    if (!(s.norm() <= kDivergenceThreshold)) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

}  // namespace sdgan
