#pragma once
// Exact star products of phase-space symbols. Four equivalent realizations:
// the coupling-table bilinear form (the reference), the ladder-operator Q and
// P forms, the general-s composition through the representation transform,
// and the closed spin-1/2 form. All of them act on band-limited expansions
// and stay exact up to floating-point rounding.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spinphase/expansion.hpp"
#include "spinphase/sqrt_rational.hpp"
#include "spinphase/tensorops.hpp"

namespace spinphase::starprod {

using expansion::Complex;
using expansion::SpinWeightedExpansion;
using tensorops::PhaseSpaceFunction;

namespace detail {

// Representation tags are doubles that may carry one composition's worth of
// rounding, so "equal s" means equal to this slack.
inline constexpr double kSTagSlack = 1e-12;

inline void check_operands(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g) {
  if (f.two_j != g.two_j) throw std::invalid_argument("star: operands live on different spheres");
  if (std::abs(f.s - g.s) > kSTagSlack)
    throw std::invalid_argument("star: operands carry different representation parameters");
}

inline int top_rank(const SpinWeightedExpansion& f) {
  return f.coeffs().empty() ? -1 : f.coeffs().rbegin()->first.first;
}

inline void check_band_limit(const PhaseSpaceFunction& f) {
  if (top_rank(f.body) > f.two_j)
    throw std::invalid_argument("star: operand rank exceeds the sphere band limit");
}

}  // namespace detail

// Weights of the derivative expansion of the Q (s_pm = -1) and P (s_pm = +1)
// products. Both are exact rationals; the P family alternates in sign. The
// rational form feeds the convergence studies, which difference it against
// its large-J limit before any conversion to double.
inline BigRational lambda_rational(int two_j, int eta, int s_pm) {
  if (two_j < 1) throw std::invalid_argument("lambda_coeff: two_j must be positive");
  if (eta < 0 || eta > two_j) throw std::invalid_argument("lambda_coeff: eta outside [0, 2J]");
  if (s_pm != -1 && s_pm != 1) throw std::invalid_argument("lambda_coeff: s_pm must be -1 or +1");
  if (s_pm == -1)
    return BigRational(factorial(HalfInt(two_j - eta)),
                       factorial(HalfInt(eta)) * factorial(HalfInt(two_j)));
  BigRational v(BigInt(two_j) * factorial(HalfInt(two_j)),
                factorial(HalfInt(eta)) * factorial(HalfInt(two_j + eta + 1)));
  return (eta % 2 == 0) ? v : -v;
}

inline SqrtRational lambda_coeff(int two_j, int eta, int s_pm) {
  return SqrtRational::exact(lambda_rational(two_j, eta, s_pm));
}

// Reference product: expand both operands over the normalized basis symbols
// and contract with the operator-product coupling table.
inline PhaseSpaceFunction star_table(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g) {
  detail::check_operands(f, g);
  detail::check_band_limit(f);
  detail::check_band_limit(g);
  const int two_j = f.two_j;
  auto table = tensorops::k_coefficient_table(two_j);
  const double r = tensorops::radius(two_j);
  SpinWeightedExpansion out(0, two_j);
  for (const auto& [jm1, c1] : f.body.coeffs()) {
    const auto [j1, m1] = jm1;
    const double w1 = tensorops::gamma_pow(two_j, j1, f.s);
    for (const auto& [jm2, c2] : g.body.coeffs()) {
      const auto [j2, m2] = jm2;
      const Complex base = c1 * c2 * (w1 * tensorops::gamma_pow(two_j, j2, f.s) * r);
      const int big_m = m1 + m2;
      for (int l = table->l_min(j1, m1, j2, m2); l <= table->l_max(j1, j2); ++l) {
        const double k = table->value(j1, m1, j2, m2, l);
        if (k == 0.0) continue;
        out.add_coeff(l, big_m, base * (k * tensorops::gamma_pow(two_j, l, -f.s)));
      }
    }
  }
  out.prune();
  return {two_j, f.s, std::move(out)};
}

namespace detail {

// Shared body of the Q/P ladder-derivative products. The eta sum terminates
// at min(rank f, rank g, 2J): one more derivative annihilates an operand.
inline PhaseSpaceFunction star_ladder(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                      int s_pm) {
  check_operands(f, g);
  if (std::abs(f.s - double(s_pm)) > kSTagSlack)
    throw std::invalid_argument("star: operand representation does not match the product form");
  check_band_limit(f);
  check_band_limit(g);
  const int two_j = f.two_j;
  const int top = std::min({top_rank(f.body), top_rank(g.body), two_j});
  SpinWeightedExpansion acc(0, two_j);
  SpinWeightedExpansion df = f.body;
  SpinWeightedExpansion dg = g.body;
  for (int eta = 0; eta <= top; ++eta) {
    if (eta > 0) {
      if (s_pm == -1) {
        df = expansion::eth_bar(df);
        dg = expansion::eth(dg);
      } else {
        df = expansion::eth(df);
        dg = expansion::eth_bar(dg);
      }
      if (df.empty() || dg.empty()) break;
    }
    SpinWeightedExpansion term = expansion::multiply(df, dg, two_j);
    const Complex lam(lambda_coeff(two_j, eta, s_pm).to_double(), 0.0);
    acc = expansion::linear_combine({{Complex(1.0, 0.0), &acc}, {lam, &term}});
  }
  SpinWeightedExpansion body = expansion::truncate(acc, two_j);
  body.prune();
  return {two_j, double(s_pm), std::move(body)};
}

}  // namespace detail

inline PhaseSpaceFunction star_q(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g) {
  return detail::star_ladder(f, g, -1);
}

inline PhaseSpaceFunction star_p(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g) {
  return detail::star_ladder(f, g, 1);
}

// Diagonal representation transform: rank j picks up gamma_j^{1 - s_param}
// and the s tag moves to s + s_param - 1. s_param may leave [-1, 1]; that is
// how the general composition routes through the Q and P endpoints.
inline PhaseSpaceFunction delta_apply(const PhaseSpaceFunction& f, double s_param) {
  SpinWeightedExpansion out(0, f.body.max_rank());
  for (const auto& [jm, c] : f.body.coeffs())
    out.set_coeff(jm.first, jm.second, c * tensorops::gamma_pow(f.two_j, jm.first, 1.0 - s_param));
  out.prune();
  return {f.two_j, f.s + s_param - 1.0, std::move(out)};
}

namespace detail {

// Monomial coefficients of the polynomial interpolating (nodes[k], targets[k]).
// Exact path: Lagrange basis expanded and summed over rationals (the double
// targets are themselves exact rationals), so conditioning of the underlying
// Vandermonde system never enters. Only the final per-coefficient rounding
// survives, which is why the result is kept in extended precision: rounding
// the coefficients to double already costs ~1e-7 residual at the far nodes of
// a 2J = 8 truncating solve.
inline std::vector<long double> interpolate_exact(const std::vector<BigRational>& nodes,
                                                  const std::vector<double>& targets) {
  const std::size_t n = nodes.size();
  std::vector<BigRational> acc(n, BigRational(0));
  for (std::size_t j = 0; j < n; ++j) {
    if (targets[j] == 0.0) continue;
    std::vector<BigRational> num{BigRational(1)};
    BigRational den(1);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      den *= nodes[j] - nodes[k];
      std::vector<BigRational> next(num.size() + 1, BigRational(0));
      for (std::size_t d = 0; d < num.size(); ++d) {
        next[d + 1] += num[d];
        next[d] -= num[d] * nodes[k];
      }
      num = std::move(next);
    }
    const BigRational t(targets[j]);
    for (std::size_t d = 0; d < n; ++d) acc[d] += t * num[d] / den;
  }
  std::vector<long double> out(n);
  for (std::size_t d = 0; d < n; ++d) out[d] = to_long_double(acc[d]);
  return out;
}

// Fallback for wide node sets: Newton divided differences in extended
// precision, expanded to monomial form at the end.
inline std::vector<long double> interpolate_newton(const std::vector<long double>& x,
                                                   std::vector<long double> t) {
  const std::size_t n = x.size();
  for (std::size_t level = 1; level < n; ++level)
    for (std::size_t k = n - 1; k >= level; --k) t[k] = (t[k] - t[k - 1]) / (x[k] - x[k - level]);
  std::vector<long double> c(n, 0.0L);
  for (std::size_t k = n; k-- > 0;) {
    for (std::size_t d = n - 1; d >= 1; --d) c[d] = c[d - 1] - x[k] * c[d];
    c[0] = t[k] - x[k] * c[0];
  }
  return c;
}

// Interpolate targets over the Laplacian spectrum x_j = -j(j+1), j = 0..n_max.
inline std::vector<long double> solve_on_ranks(int n_max, const std::vector<double>& targets,
                                               bool exact) {
  if (exact) {
    std::vector<BigRational> nodes;
    nodes.reserve(n_max + 1);
    for (int j = 0; j <= n_max; ++j) nodes.emplace_back(-j * (j + 1));
    return interpolate_exact(nodes, targets);
  }
  std::vector<long double> nodes, t(targets.begin(), targets.end());
  nodes.reserve(n_max + 1);
  for (int j = 0; j <= n_max; ++j) nodes.push_back(-1.0L * j * (j + 1));
  return interpolate_newton(nodes, std::move(t));
}

// Apply a polynomial in the ladder Laplacian (one power = eth after eth_bar;
// eigenvalue -j(j+1) on weight-0 rank j) coefficient-wise.
inline SpinWeightedExpansion apply_rank_polynomial(const std::vector<long double>& c,
                                                   const SpinWeightedExpansion& f) {
  std::vector<SpinWeightedExpansion> powers;
  powers.reserve(c.size());
  powers.push_back(f);
  for (std::size_t n = 1; n < c.size(); ++n)
    powers.push_back(expansion::eth(expansion::eth_bar(powers.back())));
  std::vector<std::pair<Complex, const SpinWeightedExpansion*>> terms;
  terms.reserve(c.size());
  for (std::size_t n = 0; n < c.size(); ++n)
    terms.push_back({Complex(double(c[n]), 0.0), &powers[n]});
  return expansion::linear_combine(terms);
}

}  // namespace detail

// Polynomial realization of the representation transform: the coefficients
// solve sum_n c_n (-j(j+1))^n = gamma_j^{1-s} on j = 0..2J. Truncating mode
// doubles the node range and pins zero targets on 2J < j <= 4J so the same
// polynomial also clears out-of-band ranks.
struct DeltaPolynomial {
  int two_j = 0;
  double s = 1.0;
  bool truncating = false;
  std::vector<long double> c;

  SpinWeightedExpansion apply(const SpinWeightedExpansion& f) const {
    return detail::apply_rank_polynomial(c, f);
  }
};

// Band-limit projector in polynomial form: 1 on j <= 2J, 0 on 2J < j <= 4J.
struct ProjectionPolynomial {
  int two_j = 0;
  std::vector<long double> p;

  SpinWeightedExpansion apply(const SpinWeightedExpansion& f) const {
    return detail::apply_rank_polynomial(p, f);
  }
};

inline DeltaPolynomial delta_polynomial(int two_j, double s, bool truncating = false) {
  if (two_j < 1) throw std::invalid_argument("delta_polynomial: two_j must be positive");
  const int n_max = truncating ? 2 * two_j : two_j;
  std::vector<double> targets(n_max + 1, 0.0);
  for (int j = 0; j <= two_j; ++j) targets[j] = tensorops::gamma_pow(two_j, j, 1.0 - s);
  return {two_j, s, truncating, detail::solve_on_ranks(n_max, targets, two_j <= 8)};
}

inline ProjectionPolynomial projection_polynomial(int two_j) {
  if (two_j < 1) throw std::invalid_argument("projection_polynomial: two_j must be positive");
  const int n_max = 2 * two_j;
  std::vector<double> targets(n_max + 1, 0.0);
  for (int j = 0; j <= two_j; ++j) targets[j] = 1.0;
  return {two_j, detail::solve_on_ranks(n_max, targets, two_j <= 8)};
}

// Band-limit projection in its exact diagonal form.
inline PhaseSpaceFunction project(const PhaseSpaceFunction& f) {
  return {f.two_j, f.s, expansion::truncate(f.body, f.two_j)};
}

enum class StarRoute { via_q, via_p };

// General-s product by conjugating either endpoint product with the
// representation transform. Both routes agree with the reference table.
inline PhaseSpaceFunction star_general(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                       StarRoute route) {
  detail::check_operands(f, g);
  const double s = f.s;
  PhaseSpaceFunction out =
      (route == StarRoute::via_q)
          ? delta_apply(star_q(delta_apply(f, -s), delta_apply(g, -s)), s + 2.0)
          : delta_apply(star_p(delta_apply(f, 2.0 - s), delta_apply(g, 2.0 - s)), s);
  // The transform chain returns to the input representation exactly; pin the
  // tag so it does not accumulate rounding.
  out.s = s;
  return out;
}

struct SpinHalfConstants {
  double n = 0.0;
  double a = 0.0;
  double b = 0.0;
};

inline SpinHalfConstants spin_half_constants(double s) {
  const double sqrt3 = std::sqrt(3.0);
  const double pref = 0.25 * std::pow(3.0, -s - 0.5);
  return {std::pow(2.0, -0.5 * s - 0.5),
          pref * (2.0 * std::pow(3.0, 0.5 * s) - std::pow(3.0, s + 0.5) + sqrt3),
          pref * (2.0 * std::pow(3.0, 0.5 * s) + std::pow(3.0, s + 0.5) - sqrt3)};
}

// Closed form for two_j = 1: three derivative terms and the band projection.
// At s = -1 it degenerates to the Q product, at s = +1 to the P product.
inline PhaseSpaceFunction star_spin_half(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g) {
  detail::check_operands(f, g);
  if (f.two_j != 1) throw std::invalid_argument("star_spin_half: requires two_j = 1");
  const auto [n_s, a_s, b_s] = spin_half_constants(f.s);
  SpinWeightedExpansion t0 = expansion::multiply(f.body, g.body, 1);
  SpinWeightedExpansion t1 = expansion::multiply(expansion::eth_bar(f.body), expansion::eth(g.body), 1);
  SpinWeightedExpansion t2 = expansion::multiply(expansion::eth(f.body), expansion::eth_bar(g.body), 1);
  SpinWeightedExpansion h = expansion::linear_combine({{Complex(n_s, 0.0), &t0},
                                                       {Complex(n_s * a_s, 0.0), &t1},
                                                       {Complex(-n_s * b_s, 0.0), &t2}});
  SpinWeightedExpansion body = expansion::truncate(h, 1);
  body.prune();
  return {1, f.s, std::move(body)};
}

// Spherical Poisson bracket in coefficient space. No band truncation: the
// bracket of two band-limited functions is reported in full.
inline PhaseSpaceFunction poisson_bracket_s(const PhaseSpaceFunction& f,
                                            const PhaseSpaceFunction& g) {
  if (f.two_j != g.two_j)
    throw std::invalid_argument("poisson_bracket_s: operands live on different spheres");
  SpinWeightedExpansion t1 = expansion::multiply(expansion::eth_bar(f.body), expansion::eth(g.body));
  SpinWeightedExpansion t2 = expansion::multiply(expansion::eth(f.body), expansion::eth_bar(g.body));
  const Complex w(0.0, 1.0 / f.two_j);
  SpinWeightedExpansion body = expansion::linear_combine({{w, &t1}, {-w, &t2}});
  body.prune();
  return {f.two_j, f.s, std::move(body)};
}

}  // namespace spinphase::starprod
