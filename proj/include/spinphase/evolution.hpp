#pragma once

// Time evolution of phase-space symbols under the star commutator. The exact
// right-hand side reproduces the von Neumann equation coefficient for
// coefficient; the order-n variant truncates the derivative expansion of the
// product instead (n = 1 is the semiclassical bracket). Integration is
// fixed-step classic Runge-Kutta over the coefficient vector: the system is
// small, smooth, and norm conserving, and a fixed grid keeps runs
// reproducible. A matrix-space propagator built on the eigendecomposition of
// the Hamiltonian serves as the independent reference route.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinphase/approx.hpp"
#include "spinphase/expansion.hpp"
#include "spinphase/starprod.hpp"
#include "spinphase/tensorops.hpp"

namespace spinphase::evolution {

using expansion::Complex;
using expansion::SpinWeightedExpansion;
using tensorops::PhaseSpaceFunction;
using tensorops::SpinOperator;

// Right-hand-side selector: the exact product, or the derivative expansion
// truncated at a fixed order. order(1) keeps only the Poisson-bracket term.
struct RhsMode {
  static RhsMode exact() { return {true, 0}; }
  static RhsMode order(int n) {
    if (n < 0) throw std::invalid_argument("RhsMode: order must be nonnegative");
    return {false, n};
  }
  bool is_exact = true;
  int n = 0;
};

// Thrown when the integrator produces a non-finite coefficient.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(std::size_t step, double t)
      : std::runtime_error("evolve_rk4: non-finite coefficient after step " +
                           std::to_string(step) + " (t = " + std::to_string(t) + ")"),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseSpaceFunction> states;
};

namespace detail {

inline constexpr double kTraceTol = 1e-8;

inline bool all_finite(const SpinWeightedExpansion& e) {
  for (const auto& [jm, c] : e.coeffs())
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

}  // namespace detail

// Structural checks for a trajectory: consistent shapes, strictly increasing
// times, and the constant (0,0) coefficient that encodes trace preservation.
inline void validate(const Trajectory& traj) {
  if (traj.times.size() != traj.states.size())
    throw std::invalid_argument("Trajectory: times and states differ in length");
  if (traj.states.empty()) throw std::invalid_argument("Trajectory: empty");
  const int two_j = traj.states.front().two_j;
  const double s = traj.states.front().s;
  const Complex c00 = traj.states.front().body.coeff(0, 0);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (k > 0 && !(traj.times[k] > traj.times[k - 1]))
      throw std::invalid_argument("Trajectory: times not strictly increasing");
    if (traj.states[k].two_j != two_j)
      throw std::invalid_argument("Trajectory: states live on different spheres");
    if (std::abs(traj.states[k].s - s) > starprod::detail::kSTagSlack)
      throw std::invalid_argument("Trajectory: states carry different representation labels");
    if (std::abs(traj.states[k].body.coeff(0, 0) - c00) > detail::kTraceTol)
      throw std::invalid_argument("Trajectory: trace coefficient drifts along the trajectory");
  }
}

// Star-commutator right-hand side -i(H * rho - rho * H).
inline PhaseSpaceFunction moyal_rhs(const PhaseSpaceFunction& H, const PhaseSpaceFunction& rho,
                                    RhsMode mode = RhsMode::exact()) {
  if (H.two_j != rho.two_j)
    throw std::invalid_argument("moyal_rhs: operands live on different spheres");
  if (std::abs(H.s - rho.s) > starprod::detail::kSTagSlack)
    throw std::invalid_argument("moyal_rhs: operands carry different representation labels");
  const PhaseSpaceFunction hr = mode.is_exact
                                    ? starprod::star_general(H, rho, starprod::StarRoute::via_q)
                                    : approx::star_approx_general(H, rho, mode.n);
  const PhaseSpaceFunction rh = mode.is_exact
                                    ? starprod::star_general(rho, H, starprod::StarRoute::via_q)
                                    : approx::star_approx_general(rho, H, mode.n);
  SpinWeightedExpansion body =
      expansion::linear_combine({{Complex(0.0, -1.0), &hr.body}, {Complex(0.0, 1.0), &rh.body}});
  body.prune();
  return {H.two_j, H.s, std::move(body)};
}

// Classic fourth-order Runge-Kutta with a fixed step; a shortened final step
// lands exactly on t_end when it is not a multiple of dt. Every accepted
// state is recorded.
inline Trajectory evolve_rk4(const PhaseSpaceFunction& H, const PhaseSpaceFunction& rho0,
                             double t_end, double dt, RhsMode mode = RhsMode::exact()) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_rk4: dt must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("evolve_rk4: t_end must be nonnegative");
  if (H.two_j != rho0.two_j)
    throw std::invalid_argument("evolve_rk4: operands live on different spheres");
  if (std::abs(H.s - rho0.s) > starprod::detail::kSTagSlack)
    throw std::invalid_argument("evolve_rk4: operands carry different representation labels");

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);

  const double n_real = t_end / dt;
  std::size_t n_full = static_cast<std::size_t>(n_real);
  double rem = t_end - double(n_full) * dt;
  // Absorb float crumbs: a residue below ~1e-9 steps is grid roundoff, not a
  // deliberate partial step.
  if (rem <= dt * 1e-9) {
    rem = 0.0;
  } else if (dt - rem <= dt * 1e-9) {
    rem = 0.0;
    ++n_full;
  }

  PhaseSpaceFunction y = rho0;
  const std::size_t n_steps = n_full + (rem > 0.0 ? 1 : 0);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double h = (i < n_full) ? dt : rem;
    const double t_next = (i + 1 < n_steps) ? double(i + 1) * dt : t_end;

    const PhaseSpaceFunction k1 = moyal_rhs(H, y, mode);
    PhaseSpaceFunction y2{y.two_j, y.s,
                          expansion::linear_combine({{Complex(1.0, 0.0), &y.body},
                                                     {Complex(0.5 * h, 0.0), &k1.body}})};
    const PhaseSpaceFunction k2 = moyal_rhs(H, y2, mode);
    PhaseSpaceFunction y3{y.two_j, y.s,
                          expansion::linear_combine({{Complex(1.0, 0.0), &y.body},
                                                     {Complex(0.5 * h, 0.0), &k2.body}})};
    const PhaseSpaceFunction k3 = moyal_rhs(H, y3, mode);
    PhaseSpaceFunction y4{y.two_j, y.s,
                          expansion::linear_combine({{Complex(1.0, 0.0), &y.body},
                                                     {Complex(h, 0.0), &k3.body}})};
    const PhaseSpaceFunction k4 = moyal_rhs(H, y4, mode);

    SpinWeightedExpansion next =
        expansion::linear_combine({{Complex(1.0, 0.0), &y.body},
                                   {Complex(h / 6.0, 0.0), &k1.body},
                                   {Complex(h / 3.0, 0.0), &k2.body},
                                   {Complex(h / 3.0, 0.0), &k3.body},
                                   {Complex(h / 6.0, 0.0), &k4.body}});
    y = PhaseSpaceFunction{y.two_j, y.s, std::move(next)};
    if (!detail::all_finite(y.body)) throw IntegrationFailure(i + 1, t_next);
    traj.times.push_back(t_next);
    traj.states.push_back(y);
  }
  return traj;
}

// Matrix-space reference propagator: rho(t) = e^{-iHt} rho0 e^{iHt} through
// the eigendecomposition of H. Unitarity keeps trace, Hermiticity, and purity
// to rounding.
inline SpinOperator hilbert_propagate(const SpinOperator& H_op, const SpinOperator& rho0_op,
                                      double t) {
  if (H_op.two_j() != rho0_op.two_j())
    throw std::invalid_argument("hilbert_propagate: operands live on different spin spaces");
  const Eigen::MatrixXcd asym = H_op.mat() - H_op.mat().adjoint();
  if (asym.cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("hilbert_propagate: Hamiltonian is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H_op.mat());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hilbert_propagate: eigendecomposition failed");
  const Eigen::VectorXd w = es.eigenvalues();
  const Eigen::MatrixXcd v = es.eigenvectors();
  Eigen::VectorXcd phases(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) phases(i) = std::exp(Complex(0.0, -w(i) * t));
  const Eigen::MatrixXcd u = v * phases.asDiagonal() * v.adjoint();

  SpinOperator out(H_op.two_j());
  out.mat() = u * rho0_op.mat() * u.adjoint();
  return out;
}

// Long-format CSV export: a JSON metadata line, a column header, then one row
// per recorded coefficient. Rows follow time order and the (j, m) ordering of
// the coefficient map, so equal trajectories serialize byte for byte.
inline std::string to_csv(const Trajectory& traj) {
  validate(traj);
  using approx::detail::format_double;
  std::string out = "# {\"two_j\": " + std::to_string(traj.states.front().two_j) +
                    ", \"s\": " + format_double(traj.states.front().s) +
                    ", \"states\": " + std::to_string(traj.states.size()) + "}\n";
  out += "t,j,m,re,im\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const std::string t_str = format_double(traj.times[k]);
    for (const auto& [jm, c] : traj.states[k].body.coeffs()) {
      out += t_str;
      out += ',';
      out += std::to_string(jm.first);
      out += ',';
      out += std::to_string(jm.second);
      out += ',';
      out += format_double(c.real());
      out += ',';
      out += format_double(c.imag());
      out += '\n';
    }
  }
  return out;
}

}  // namespace spinphase::evolution
