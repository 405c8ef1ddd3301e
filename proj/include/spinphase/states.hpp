#pragma once

// Benchmark state constructors: the spin-up reference symbol, rotated
// coherent states, Dicke projectors, and the excited (lowered) coherent
// family built from the normalized lowering kernel K. The excited family
// has an exact route through two star products and two first-order
// approximations, one phrased with the sphere ladder operators and one with
// flat-chart derivatives around the north pole. Every constructor returns a
// symbol whose identity share is pinned to unit trace.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spinphase/approx.hpp"
#include "spinphase/expansion.hpp"
#include "spinphase/grid.hpp"
#include "spinphase/halfint.hpp"
#include "spinphase/starprod.hpp"
#include "spinphase/tensorops.hpp"

namespace spinphase::states {

using expansion::Complex;
using expansion::SpinWeightedExpansion;
using tensorops::PhaseSpaceFunction;
using tensorops::SpinOperator;

// Identity-share coefficient of a unit-trace operator's symbol:
// c(0,0) = gamma_0^{-s} / (sqrt(2J+1) R).
inline Complex unit_trace_c00(int two_j, double s) {
  const double v = tensorops::gamma_pow(two_j, 0, -s) /
                   (std::sqrt(double(two_j + 1)) * tensorops::radius(two_j));
  return Complex(v, 0.0);
}

// Symbol of |J,J><J,J|: only the m = 0 column survives, with
// c(j,0) = gamma_j^{1-s} sqrt(2j+1) / (R sqrt(2J)).
inline PhaseSpaceFunction spin_up_phase(int two_j, double s) {
  if (two_j < 1) throw std::invalid_argument("spin_up_phase: two_j must be positive");
  if (s < -1.0 || s > 1.0) throw std::invalid_argument("spin_up_phase: s outside [-1, 1]");
  const double inv_r = 1.0 / tensorops::radius(two_j);
  const double inv_sq = 1.0 / std::sqrt(double(two_j));
  SpinWeightedExpansion body(0, two_j);
  for (int j = 0; j <= two_j; ++j) {
    const double c =
        tensorops::gamma_pow(two_j, j, 1.0 - s) * std::sqrt(double(2 * j + 1)) * inv_r * inv_sq;
    body.set_coeff(j, 0, Complex(c, 0.0));
  }
  return {two_j, s, std::move(body)};
}

// Rotated spin-up symbol: the coherent state pointing along (theta0, phi0).
inline PhaseSpaceFunction coherent_phase(int two_j, double s, double theta0, double phi0) {
  PhaseSpaceFunction up = spin_up_phase(two_j, s);
  up.body = expansion::rotate(up.body, theta0, phi0);
  return up;
}

inline PhaseSpaceFunction dicke_phase(int two_j, double s, HalfInt m) {
  SpinOperator op(two_j);
  op.set(m, m, Complex(1.0, 0.0));
  return tensorops::op_to_phase(op, s);
}

inline PhaseSpaceFunction projector_phase(int two_j, double s, HalfInt m1, HalfInt m2) {
  SpinOperator op(two_j);
  op.set(m1, m2, Complex(1.0, 0.0));
  return tensorops::op_to_phase(op, s);
}

// Normalization of the lowered coherent state:
// 1/N^2 = cos^2(theta0/2) [1 + 2J - (2J-1) cos(theta0)] / 2.
// The family degenerates at theta0 = pi, where the lowering kernel
// annihilates the rotated reference state.
inline double normalization_N(int two_j, double theta0) {
  if (two_j < 1) throw std::invalid_argument("normalization_N: two_j must be positive");
  if (!(theta0 >= 0.0 && theta0 <= std::numbers::pi))
    throw std::invalid_argument("normalization_N: theta0 outside [0, pi]");
  const double c = std::cos(0.5 * theta0);
  const double inv_n2 = 0.5 * c * c * (1.0 + two_j - (two_j - 1) * std::cos(theta0));
  // The floor catches tilts within double resolution of the singular point,
  // where cos^2(theta0/2) no longer reaches an exact zero.
  if (!(inv_n2 > 1e-30))
    throw std::domain_error("normalization_N: singular at theta0 = pi");
  return 1.0 / std::sqrt(inv_n2);
}

// Normalized lowering kernel in the frame tilted to (theta0, phi0):
// K = (N / sqrt(2J)) R J_- R^dag with R = rotation_matrix(two_j, theta0,
// phi0), so its symbol is the rotated rank-one harmonic c_s Y_{1,-1}.
// Acting on the spin-up state it produces the excited coherent state.
inline SpinOperator k_operator(int two_j, double theta0, double phi0) {
  const double n = normalization_N(two_j, theta0);
  SpinOperator lower(two_j);
  for (int two_m = -two_j + 2; two_m <= two_j; two_m += 2) {
    const HalfInt m = HalfInt::from_twice(two_m);
    const double a = std::sqrt(0.25 * double(two_j + two_m) * double(two_j - two_m + 2));
    lower.set(m - HalfInt(1), m, Complex(a, 0.0));
  }
  const SpinOperator r = tensorops::rotation_matrix(two_j, theta0, phi0);
  SpinOperator k(two_j);
  k.mat() = (n / std::sqrt(double(two_j))) * (r.mat() * lower.mat() * r.mat().adjoint());
  return k;
}

enum class StateMethod { exact, approx_eth, approx_planar };

namespace detail {

// Scales the symbol so its identity share matches unit trace; returns the
// factor applied.
inline Complex renormalize(PhaseSpaceFunction& f) {
  const Complex c00 = f.body.coeff(0, 0);
  if (std::abs(c00) < 1e-300)
    throw std::runtime_error("renormalize: vanishing identity share");
  const Complex scale = unit_trace_c00(f.two_j, f.s) / c00;
  f.body = expansion::linear_combine({{scale, &f.body}});
  return scale;
}

// Gaussian stand-in for the spin-up symbol: gamma_j^{1-s} is replaced by
// exp(-j(j+1)(1-s)/(4J)), the form both first-order constructions expand
// around.
inline PhaseSpaceFunction gaussian_spin_up(int two_j, double s) {
  if (two_j < 1) throw std::invalid_argument("gaussian_spin_up: two_j must be positive");
  const double inv_r = 1.0 / tensorops::radius(two_j);
  const double inv_sq = 1.0 / std::sqrt(double(two_j));
  SpinWeightedExpansion body(0, two_j);
  for (int j = 0; j <= two_j; ++j) {
    const double c = std::pow(approx::gamma_approx(two_j, j), 1.0 - s) *
                     std::sqrt(double(2 * j + 1)) * inv_r * inv_sq;
    body.set_coeff(j, 0, Complex(c, 0.0));
  }
  return {two_j, s, std::move(body)};
}

// First-order ladder form of the left kernel action:
// K f = F f + (1-s)/(4J) (ethbar F)(eth f) - (1+s)/(4J) (eth F)(ethbar f),
// and of the right action with F replaced by its conjugate and the ladder
// pairing mirrored. Both truncate at the band limit.
inline SpinWeightedExpansion eth_apply(const SpinWeightedExpansion& fk,
                                       const SpinWeightedExpansion& f, double s, int two_j,
                                       bool bar) {
  const double q_minus = (1.0 - s) / (2.0 * two_j);
  const double q_plus = (1.0 + s) / (2.0 * two_j);
  const SpinWeightedExpansion base = expansion::multiply(fk, f, two_j);
  const SpinWeightedExpansion lower_raise =
      expansion::multiply(expansion::eth_bar(fk), expansion::eth(f), two_j);
  const SpinWeightedExpansion raise_lower =
      expansion::multiply(expansion::eth(fk), expansion::eth_bar(f), two_j);
  const Complex one(1.0, 0.0);
  if (!bar)
    return expansion::linear_combine(
        {{one, &base}, {Complex(q_minus, 0.0), &lower_raise}, {Complex(-q_plus, 0.0), &raise_lower}});
  return expansion::linear_combine(
      {{one, &base}, {Complex(q_minus, 0.0), &raise_lower}, {Complex(-q_plus, 0.0), &lower_raise}});
}

// Pointwise chart data for a weight-0 expansion. The ladders realize
// eth f = -(d_theta + i csc(theta) d_phi) f and
// ethbar f = -(d_theta - i csc(theta) d_phi) f at weight zero, so the theta
// derivative is recovered from their sum while the azimuthal derivative is
// read off the coefficients directly.
struct ChartOperand {
  SpinWeightedExpansion f;
  SpinWeightedExpansion raise;
  SpinWeightedExpansion lower;
  SpinWeightedExpansion phid;  // i d/dphi f

  // d_plus = -(d_theta + (i/theta) d_phi) f, d_minus with the opposite sign:
  // the flat-chart analogues of the ladder pair, csc(theta) -> 1/theta.
  void sample(double theta, double phi, Complex& value, Complex& d_plus, Complex& d_minus) const {
    value = expansion::evaluate(f, theta, phi);
    const Complex neg_dtheta =
        0.5 * (expansion::evaluate(raise, theta, phi) + expansion::evaluate(lower, theta, phi));
    const Complex iphi = expansion::evaluate(phid, theta, phi) / theta;
    d_plus = neg_dtheta - iphi;
    d_minus = neg_dtheta + iphi;
  }
};

inline ChartOperand chart_operand(const SpinWeightedExpansion& f) {
  if (f.weight() != 0) throw std::logic_error("chart_operand: weight-0 input required");
  ChartOperand op;
  op.f = f;
  op.raise = expansion::eth(f);
  op.lower = expansion::eth_bar(f);
  SpinWeightedExpansion ph(0, f.max_rank());
  for (const auto& [jm, c] : f.coeffs())
    if (jm.second != 0) ph.set_coeff(jm.first, jm.second, -double(jm.second) * c);
  op.phid = std::move(ph);
  return op;
}

// Flat-chart counterpart of eth_apply: the same first-order kernel action
// with the ladder pair replaced by the chart derivative pair, evaluated
// pointwise and projected back onto the band-limited basis.
inline SpinWeightedExpansion planar_apply(const SpinWeightedExpansion& fk,
                                          const SpinWeightedExpansion& f, double s, int two_j,
                                          bool bar) {
  const ChartOperand a = chart_operand(fk);
  const ChartOperand b = chart_operand(f);
  const double q_minus = (1.0 - s) / (2.0 * two_j);
  const double q_plus = (1.0 + s) / (2.0 * two_j);
  const auto rule = grid::sphere_rule(2 * two_j + 24, 2 * two_j + 8);
  auto sampler = [&](double theta, double phi) {
    Complex va, pa, ma, vb, pb, mb;
    a.sample(theta, phi, va, pa, ma);
    b.sample(theta, phi, vb, pb, mb);
    if (!bar) return va * vb + q_minus * ma * pb - q_plus * pa * mb;
    return va * vb + q_minus * pa * mb - q_plus * ma * pb;
  };
  return grid::project(sampler, 0, two_j, rule);
}

inline Complex coeff_dot(const SpinWeightedExpansion& a, const SpinWeightedExpansion& b) {
  Complex acc(0.0, 0.0);
  for (const auto& [jm, c] : b.coeffs()) acc += std::conj(a.coeff(jm.first, jm.second)) * c;
  return acc;
}

}  // namespace detail

// Excited coherent state K(Omega0)|up><up|K(Omega0)^dag. The exact route
// star-multiplies the kernel symbol onto both sides of the spin-up symbol;
// the approximate routes apply the first-order kernel actions to the
// Gaussian stand-in. All routes end pinned to unit trace.
inline PhaseSpaceFunction excited_coherent(int two_j, double s, double theta0, double phi0,
                                           StateMethod method = StateMethod::exact) {
  const SpinOperator k = k_operator(two_j, theta0, phi0);
  const PhaseSpaceFunction fk = tensorops::op_to_phase(k, s);
  const SpinWeightedExpansion fkc = expansion::conjugate(fk.body);
  PhaseSpaceFunction out{two_j, s, SpinWeightedExpansion(0, two_j)};
  switch (method) {
    case StateMethod::exact: {
      const PhaseSpaceFunction up = spin_up_phase(two_j, s);
      const PhaseSpaceFunction right =
          starprod::star_general(up, PhaseSpaceFunction{two_j, s, fkc}, starprod::StarRoute::via_q);
      out = starprod::star_general(fk, right, starprod::StarRoute::via_q);
      break;
    }
    case StateMethod::approx_eth: {
      const PhaseSpaceFunction g = detail::gaussian_spin_up(two_j, s);
      const SpinWeightedExpansion h = detail::eth_apply(fkc, g.body, s, two_j, true);
      out.body = detail::eth_apply(fk.body, h, s, two_j, false);
      break;
    }
    case StateMethod::approx_planar: {
      const PhaseSpaceFunction g = detail::gaussian_spin_up(two_j, s);
      const SpinWeightedExpansion h = detail::planar_apply(fkc, g.body, s, two_j, true);
      out.body = detail::planar_apply(fk.body, h, s, two_j, false);
      break;
    }
  }
  detail::renormalize(out);
  return out;
}

// A state assembled by repeated exact kernel actions, kept together with the
// scale that matched it to its unit-normalized target.
struct LadderImage {
  PhaseSpaceFunction state;
  Complex scale{1.0, 0.0};
};

// [K Kbar]^{J-m} applied to the spin-up symbol at the pole lands on the
// Dicke symbol |J,m><J,m| up to normalization; the returned scale restores
// unit trace.
inline LadderImage dicke_ladder(int two_j, double s, HalfInt m) {
  const SpinOperator k = k_operator(two_j, 0.0, 0.0);
  const PhaseSpaceFunction fk = tensorops::op_to_phase(k, s);
  const PhaseSpaceFunction fkc{two_j, s, expansion::conjugate(fk.body)};
  SpinOperator probe(two_j);
  probe.set(m, m, Complex(1.0, 0.0));  // validates the projection
  const int reps = (two_j - m.twice()) / 2;
  LadderImage image;
  image.state = spin_up_phase(two_j, s);
  for (int r = 0; r < reps; ++r) {
    const PhaseSpaceFunction right =
        starprod::star_general(image.state, fkc, starprod::StarRoute::via_q);
    image.state = starprod::star_general(fk, right, starprod::StarRoute::via_q);
  }
  image.scale = detail::renormalize(image.state);
  return image;
}

// (Kbar)^{J-m2} (K)^{J-m1} applied to the spin-up symbol reaches the
// projector symbol |J,m1><J,m2|. Off-diagonal targets are traceless, so the
// scale comes from a least-squares match against the exact symbol instead of
// the identity share.
inline LadderImage projector_ladder(int two_j, double s, HalfInt m1, HalfInt m2) {
  const PhaseSpaceFunction target = projector_phase(two_j, s, m1, m2);
  const SpinOperator k = k_operator(two_j, 0.0, 0.0);
  const PhaseSpaceFunction fk = tensorops::op_to_phase(k, s);
  const PhaseSpaceFunction fkc{two_j, s, expansion::conjugate(fk.body)};
  LadderImage image;
  image.state = spin_up_phase(two_j, s);
  const int left = (two_j - m1.twice()) / 2;
  const int right = (two_j - m2.twice()) / 2;
  for (int r = 0; r < left; ++r)
    image.state = starprod::star_general(fk, image.state, starprod::StarRoute::via_q);
  for (int r = 0; r < right; ++r)
    image.state = starprod::star_general(image.state, fkc, starprod::StarRoute::via_q);
  const Complex denom = detail::coeff_dot(image.state.body, image.state.body);
  if (std::abs(denom) < 1e-300)
    throw std::runtime_error("projector_ladder: the ladder image vanished");
  image.scale = detail::coeff_dot(image.state.body, target.body) / denom;
  image.state.body = expansion::linear_combine({{image.scale, &image.state.body}});
  return image;
}

enum class StateKind { spin_up, coherent, excited_coherent, dicke, projector };

// Declarative constructor input, JSON-friendly: projections are carried
// doubled, and the approximation method only applies to the excited family.
struct StateSpec {
  StateKind kind = StateKind::spin_up;
  int two_j = 1;
  double s = 0.0;
  double theta0 = 0.0;
  double phi0 = 0.0;
  int two_m = 0;
  int two_m1 = 0;
  int two_m2 = 0;
  StateMethod method = StateMethod::exact;
};

inline PhaseSpaceFunction build_state(const StateSpec& spec) {
  if (spec.method != StateMethod::exact && spec.kind != StateKind::excited_coherent)
    throw std::invalid_argument("build_state: approximate methods apply only to the excited family");
  switch (spec.kind) {
    case StateKind::spin_up:
      return spin_up_phase(spec.two_j, spec.s);
    case StateKind::coherent:
      return coherent_phase(spec.two_j, spec.s, spec.theta0, spec.phi0);
    case StateKind::excited_coherent:
      return excited_coherent(spec.two_j, spec.s, spec.theta0, spec.phi0, spec.method);
    case StateKind::dicke:
      return dicke_phase(spec.two_j, spec.s, HalfInt::from_twice(spec.two_m));
    case StateKind::projector:
      return projector_phase(spec.two_j, spec.s, HalfInt::from_twice(spec.two_m1),
                             HalfInt::from_twice(spec.two_m2));
  }
  throw std::invalid_argument("build_state: unknown state kind");
}

// L2 distance between the exact excited state and one approximation, swept
// over J at the family's natural width theta0 = 1.2 sqrt(2/J). Both
// first-order constructions lose one power of J.
inline approx::ConvergenceReport excited_error_sweep(StateMethod method, double s,
                                                     const std::vector<int>& two_j_sweep) {
  if (method == StateMethod::exact)
    throw std::invalid_argument("excited_error_sweep: pick an approximate method");
  approx::ConvergenceReport rep;
  for (int two_j : two_j_sweep) {
    const double theta0 = 2.4 / std::sqrt(double(two_j));
    const PhaseSpaceFunction exact =
        excited_coherent(two_j, s, theta0, 0.3, StateMethod::exact);
    const PhaseSpaceFunction approx_state = excited_coherent(two_j, s, theta0, 0.3, method);
    const SpinWeightedExpansion diff = expansion::linear_combine(
        {{Complex(1.0, 0.0), &exact.body}, {Complex(-1.0, 0.0), &approx_state.body}});
    rep.two_j.push_back(two_j);
    rep.error.push_back(expansion::l2_norm(diff, tensorops::radius(two_j)));
  }
  approx::fit_loglog(rep);
  return rep;
}

}  // namespace spinphase::states
