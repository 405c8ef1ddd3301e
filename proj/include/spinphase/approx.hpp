#pragma once
// Large-J approximations of the star-product calculus and the convergence
// studies that probe them: limiting derivative-expansion weights, the
// Gaussian limit of the representation kernel, truncated derivative series
// for the Q, P and general-s products, and the planar limit of spin-weighted
// derivatives measured by finite differences against the exact calculus.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinphase/expansion.hpp"
#include "spinphase/sqrt_rational.hpp"
#include "spinphase/starprod.hpp"
#include "spinphase/tensorops.hpp"

namespace spinphase::approx {

using expansion::Complex;
using expansion::SpinWeightedExpansion;
using tensorops::PhaseSpaceFunction;

namespace detail {

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

inline double factorial_d(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= double(k);
  return r;
}

}  // namespace detail

// Large-J limit of the derivative-expansion weights: both families tend to
// 1/(eta! (2J)^eta), the P family keeping its sign alternation.
inline double lambda_approx(int two_j, int eta, int s_pm) {
  if (two_j < 1) throw std::invalid_argument("lambda_approx: two_j must be positive");
  if (eta < 0) throw std::invalid_argument("lambda_approx: eta must be nonnegative");
  if (s_pm != -1 && s_pm != 1) throw std::invalid_argument("lambda_approx: s_pm must be -1 or +1");
  const double v = (1.0 / detail::factorial_d(eta)) / detail::ipow(double(two_j), eta);
  return (s_pm == 1 && eta % 2 != 0) ? -v : v;
}

// Gaussian limit of the representation kernel eigenvalues,
// exp(-j(j+1)/(4J)). Misses the exact eigenvalue by a relative O(J^{-1}).
inline double gamma_approx(int two_j, int j) {
  if (two_j < 1) throw std::invalid_argument("gamma_approx: two_j must be positive");
  if (j < 0) throw std::invalid_argument("gamma_approx: j must be nonnegative");
  return std::exp(-double(j) * double(j + 1) / (2.0 * double(two_j)));
}

// Representation transform with the kernel eigenvalues replaced by their
// Gaussian limit. Diagonal in rank like the exact transform, so the two
// commute and composition errors stay multiplicative; the s tag moves
// exactly as in delta_apply.
inline PhaseSpaceFunction delta_approx_apply(const PhaseSpaceFunction& f, double s_param) {
  SpinWeightedExpansion out(0, f.body.max_rank());
  for (const auto& [jm, c] : f.body.coeffs()) {
    const int j = jm.first;
    const double w =
        std::exp(-(1.0 - s_param) * double(j) * double(j + 1) / (2.0 * double(f.two_j)));
    out.set_coeff(j, jm.second, c * w);
  }
  out.prune();
  return {f.two_j, f.s + s_param - 1.0, std::move(out)};
}

// Series weights of the general-s derivative expansion,
// ((1-s)/2)^m (-(1+s)/2)^{n-m} / (m! (n-m)!). Integer powers follow the
// series convention 0^0 = 1, so at s = -1 every mixed term vanishes and the
// diagonal collapses to 1/n!.
inline double c_nm(double s, int n, int m) {
  if (n < 0 || m < 0 || m > n) throw std::invalid_argument("c_nm: requires 0 <= m <= n");
  const double a = detail::ipow(0.5 * (1.0 - s), m);
  const double b = detail::ipow(-0.5 * (1.0 + s), n - m);
  return a * b / (detail::factorial_d(m) * detail::factorial_d(n - m));
}

namespace detail {

// Tail control shared by every truncated series below. A term is skipped
// without being formed when its rigorous coefficient-space bound
// |coef| ||f|| ||g|| (2J+1)^2/sqrt(4pi) cannot move any retained coefficient
// at double precision; a formed term counts as quiet when its actual largest
// contribution sits below measurement precision of the accumulated sum. Two
// consecutive quiet terms end the series. Both products apply the identical
// rule in the identical order, which keeps the s = -1 reduction of the
// general expansion equal to the Q-form series coefficient for coefficient.
inline constexpr double kTermSkip = 1e-18;
inline constexpr double kTailQuiet = 1e-16;

inline double linf(const SpinWeightedExpansion& e) {
  double m = 0.0;
  for (const auto& [jm, c] : e.coeffs()) m = std::max(m, std::abs(c));
  return m;
}

// Shared body of the approximate Q/P products: the exact ladder series with
// the weights replaced by their large-J limit and the eta sum cut at `order`
// (or earlier, when a derivative chain dies or the tail goes quiet).
inline PhaseSpaceFunction star_ladder_approx(const PhaseSpaceFunction& f,
                                             const PhaseSpaceFunction& g, int s_pm, int order) {
  starprod::detail::check_operands(f, g);
  if (order < 0) throw std::invalid_argument("star approx: order must be nonnegative");
  if (std::abs(f.s - double(s_pm)) > starprod::detail::kSTagSlack)
    throw std::invalid_argument("star approx: operand representation does not match the product form");
  starprod::detail::check_band_limit(f);
  starprod::detail::check_band_limit(g);
  const int two_j = f.two_j;
  const double bound_factor =
      double(two_j + 1) * double(two_j + 1) / std::sqrt(4.0 * std::numbers::pi);
  SpinWeightedExpansion acc(0, two_j);
  double acc_linf = 0.0;
  int quiet = 0;
  SpinWeightedExpansion df = f.body;
  SpinWeightedExpansion dg = g.body;
  for (int eta = 0; eta <= order; ++eta) {
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
    const double coef = lambda_approx(two_j, eta, s_pm);
    const double bound =
        std::abs(coef) * expansion::l2_norm(df, 1.0) * expansion::l2_norm(dg, 1.0) * bound_factor;
    if (bound < kTermSkip * acc_linf) {
      if (++quiet >= 2) break;
      continue;
    }
    SpinWeightedExpansion term = expansion::multiply(df, dg, two_j);
    acc = expansion::linear_combine({{Complex(1.0, 0.0), &acc}, {Complex(coef, 0.0), &term}});
    acc_linf = std::max(acc_linf, linf(acc));
    if (std::abs(coef) * linf(term) < kTailQuiet * acc_linf) {
      if (++quiet >= 2) break;
    } else {
      quiet = 0;
    }
  }
  SpinWeightedExpansion body = expansion::truncate(acc, two_j);
  body.prune();
  return {two_j, double(s_pm), std::move(body)};
}

}  // namespace detail

inline PhaseSpaceFunction star_q_approx(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                        int order) {
  return detail::star_ladder_approx(f, g, -1, order);
}

inline PhaseSpaceFunction star_p_approx(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                        int order) {
  return detail::star_ladder_approx(f, g, 1, order);
}

// General-s truncated derivative expansion,
//   sum_{n<=order} sum_{m<=n} c_nm(s)/(2J)^n multiply(ethbar^m eth^{n-m} f,
//                                                     eth^m ethbar^{n-m} g),
// projected to the band limit, iterated as (a = n-m, m) so each derivative
// chain is built incrementally. Tail control as in star_ladder_approx: the
// structural zeros c_nm(+-1) are not smallness signals and leave the quiet
// streak alone, so the s = -1 path stays term-identical to star_q_approx. A
// derivative pass that accumulates nothing audible ends the outer sum after
// two repeats.
inline PhaseSpaceFunction star_approx_general(const PhaseSpaceFunction& f,
                                              const PhaseSpaceFunction& g, int order) {
  starprod::detail::check_operands(f, g);
  if (order < 0) throw std::invalid_argument("star_approx_general: order must be nonnegative");
  starprod::detail::check_band_limit(f);
  starprod::detail::check_band_limit(g);
  const int two_j = f.two_j;
  const double s = f.s;
  const double bound_factor =
      double(two_j + 1) * double(two_j + 1) / std::sqrt(4.0 * std::numbers::pi);
  SpinWeightedExpansion acc(0, two_j);
  double acc_linf = 0.0;
  int quiet_passes = 0;
  SpinWeightedExpansion fa = f.body;  // eth^a f
  SpinWeightedExpansion gb = g.body;  // ethbar^a g
  for (int a = 0; a <= order; ++a) {
    if (a > 0) {
      fa = expansion::eth(fa);
      gb = expansion::eth_bar(gb);
      if (fa.empty() || gb.empty()) break;
    }
    bool loud_pass = false;
    int quiet = 0;
    SpinWeightedExpansion df = fa;  // ethbar^m eth^a f
    SpinWeightedExpansion dg = gb;  // eth^m ethbar^a g
    for (int m = 0; a + m <= order; ++m) {
      if (m > 0) {
        df = expansion::eth_bar(df);
        dg = expansion::eth(dg);
        if (df.empty() || dg.empty()) break;
      }
      const int n = a + m;
      const double coef = c_nm(s, n, m) / detail::ipow(double(two_j), n);
      if (coef == 0.0) continue;
      const double bound =
          std::abs(coef) * expansion::l2_norm(df, 1.0) * expansion::l2_norm(dg, 1.0) * bound_factor;
      if (bound < detail::kTermSkip * acc_linf) {
        if (++quiet >= 2) break;
        continue;
      }
      SpinWeightedExpansion term = expansion::multiply(df, dg, two_j);
      acc = expansion::linear_combine({{Complex(1.0, 0.0), &acc}, {Complex(coef, 0.0), &term}});
      acc_linf = std::max(acc_linf, detail::linf(acc));
      if (std::abs(coef) * detail::linf(term) < detail::kTailQuiet * acc_linf) {
        if (++quiet >= 2) break;
      } else {
        quiet = 0;
        loud_pass = true;
      }
    }
    quiet_passes = loud_pass ? 0 : quiet_passes + 1;
    if (quiet_passes >= 2) break;
  }
  SpinWeightedExpansion body = expansion::truncate(acc, two_j);
  body.prune();
  return {two_j, s, std::move(body)};
}

// One error-vs-size study: error(two_j) samples plus the fitted log-log line
// log(error) = slope * log(J) + intercept. slope_tolerance carries the band
// the study is expected to meet; the fit itself never enforces it.
struct ConvergenceReport {
  std::vector<int> two_j;
  std::vector<double> error;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_tolerance = 0.0;
  bool fitted = false;
};

inline constexpr double kFitFloor = 1e-12;
inline constexpr std::size_t kMinFitPoints = 5;

// Least-squares line through (log J, log error), skipping points at or below
// `floor`. Float-contaminated studies use the default floor; studies whose
// errors are formed in exact arithmetic pass 0 to keep legitimately tiny
// points. The fit only stands with kMinFitPoints surviving points.
inline void fit_loglog(ConvergenceReport& rep, double floor = kFitFloor) {
  if (rep.two_j.size() != rep.error.size())
    throw std::logic_error("fit_loglog: ragged report");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < rep.two_j.size(); ++i) {
    if (!(rep.error[i] > floor)) continue;
    const double x = std::log(0.5 * rep.two_j[i]);
    const double y = std::log(rep.error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  rep.fitted = n >= kMinFitPoints;
  if (!rep.fitted) {
    rep.slope = 0.0;
    rep.intercept = 0.0;
    return;
  }
  const double det = double(n) * sxx - sx * sx;
  rep.slope = (double(n) * sxy - sx * sy) / det;
  rep.intercept = (sy - rep.slope * sx) / double(n);
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::logic_error("format_double: buffer too small");
  return std::string(buf, p);
}

}  // namespace detail

// CSV rendering: one JSON metadata comment, a header row, one row per sweep
// point. Numbers print as shortest round-trip decimals so the output is
// byte-stable across runs.
inline std::string to_csv(const ConvergenceReport& rep) {
  std::string out = "# {\"slope\": ";
  out += detail::format_double(rep.slope);
  out += ", \"intercept\": ";
  out += detail::format_double(rep.intercept);
  out += "}\ntwo_j,error\n";
  for (std::size_t i = 0; i < rep.two_j.size(); ++i) {
    out += std::to_string(rep.two_j[i]);
    out += ',';
    out += detail::format_double(rep.error[i]);
    out += '\n';
  }
  return out;
}

// |lambda_eta(J) - lambda_approx| with the difference formed in exact
// rational arithmetic before the one conversion to double: at eta = 10 the
// two values agree far below what double subtraction can resolve, yet the
// difference itself is an honest O(J^{-eta-1}) signal.
inline ConvergenceReport lambda_error_sweep(int eta, int s_pm, const std::vector<int>& two_j_sweep) {
  ConvergenceReport rep;
  for (int two_j : two_j_sweep) {
    const BigRational exact = starprod::lambda_rational(two_j, eta, s_pm);
    BigRational approx(1, factorial(HalfInt(eta)) *
                              boost::multiprecision::pow(BigInt(two_j), static_cast<unsigned>(eta)));
    if (s_pm == 1 && eta % 2 != 0) approx = -approx;
    BigRational diff = exact - approx;
    if (diff < 0) diff = -diff;
    rep.two_j.push_back(two_j);
    rep.error.push_back(to_double(diff));
  }
  fit_loglog(rep, 0.0);
  return rep;
}

// |gamma_j(J) - gamma_approx(J, j)| over a J sweep. The error is dominated by
// the rank-independent part the Gaussian limit drops, a relative O(J^{-1}).
inline ConvergenceReport gamma_error_sweep(int j, const std::vector<int>& two_j_sweep) {
  ConvergenceReport rep;
  for (int two_j : two_j_sweep) {
    if (j > two_j)
      throw std::invalid_argument("gamma_error_sweep: rank above the band limit in the sweep");
    const double exact = tensorops::gamma(two_j, j).to_double();
    rep.two_j.push_back(two_j);
    rep.error.push_back(std::abs(exact - gamma_approx(two_j, j)));
  }
  fit_loglog(rep, 0.0);
  return rep;
}

namespace detail {

// 4th-order five-point first-derivative stencil, offsets -2..+2.
inline constexpr double kD1Stencil[5] = {1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0};

// One Wirtinger derivative pass over a square grid of samples spaced h along
// both chart axes: (d_u + i d_v)/2 when conj is set (the alpha* derivative),
// (d_u - i d_v)/2 otherwise. The usable square shrinks by two cells per side.
inline void wirtinger_pass(std::vector<std::vector<Complex>>& val, int& lo, int& hi, double h,
                           bool conj) {
  std::vector<std::vector<Complex>> next(val.size(), std::vector<Complex>(val.size(), Complex(0.0, 0.0)));
  const Complex iv_unit = conj ? Complex(0.0, 1.0) : Complex(0.0, -1.0);
  for (int iu = lo + 2; iu < hi - 2; ++iu)
    for (int iv = lo + 2; iv < hi - 2; ++iv) {
      Complex du(0.0, 0.0), dv(0.0, 0.0);
      for (int t = -2; t <= 2; ++t) {
        du += kD1Stencil[t + 2] * val[static_cast<std::size_t>(iu + t)][static_cast<std::size_t>(iv)];
        dv += kD1Stencil[t + 2] * val[static_cast<std::size_t>(iu)][static_cast<std::size_t>(iv + t)];
      }
      next[static_cast<std::size_t>(iu)][static_cast<std::size_t>(iv)] = (du + iv_unit * dv) / (2.0 * h);
    }
  val = std::move(next);
  lo += 2;
  hi -= 2;
}

// Closed-form spin-up Wigner symbol: the single-column expansion
// c(j, 0) = gamma_j sqrt(2j+1) / (R sqrt(2J)). Matches op_to_phase of the
// spin-up projector (the states module exposes that identity publicly); the
// closed form avoids rebuilding the operator at every sweep point.
inline PhaseSpaceFunction spin_up_wigner(int two_j) {
  const double r = tensorops::radius(two_j);
  SpinWeightedExpansion body(0, two_j);
  for (int j = 0; j <= two_j; ++j)
    body.set_coeff(j, 0,
                   Complex(tensorops::gamma_pow(two_j, j, 1.0) * std::sqrt(double(2 * j + 1)) /
                               (r * std::sqrt(double(two_j))),
                           0.0));
  return {two_j, 0.0, std::move(body)};
}

// k-fold planar Wirtinger derivative of Y_{jm} at alpha under the arc-length
// chart alpha = sqrt(J/2) theta e^{-i phi}, by k composed stencil passes on a
// local tensor grid. k = 0 degenerates to a single evaluation.
inline Complex fd_wirtinger_power(int j, int m, int k, bool conj, Complex alpha, int two_j,
                                  double h) {
  const int half = 2 * k;
  const int n = 2 * half + 1;
  const double c = 0.5 * std::sqrt(double(two_j));
  const SpinWeightedExpansion y = SpinWeightedExpansion::basis(0, j, m);
  std::vector<std::vector<Complex>> val(static_cast<std::size_t>(n),
                                        std::vector<Complex>(static_cast<std::size_t>(n)));
  for (int iu = 0; iu < n; ++iu)
    for (int iv = 0; iv < n; ++iv) {
      const Complex a = alpha + Complex(double(iu - half) * h, double(iv - half) * h);
      val[static_cast<std::size_t>(iu)][static_cast<std::size_t>(iv)] =
          expansion::evaluate(y, std::abs(a) / c, -std::arg(a));
    }
  int lo = 0, hi = n;
  for (int pass = 0; pass < k; ++pass) wirtinger_pass(val, lo, hi, h, conj);
  return val[static_cast<std::size_t>(half)][static_cast<std::size_t>(half)];
}

}  // namespace detail

// Error of the planar-derivative representation of one spin-weighted
// harmonic, swept over J at fixed chart point alpha. The compared identity is
// the ladder definition of Y^{eta}_{jm} with its spin-raising (eta > 0,
// derivative d/d alpha, sign (-1)^eta, phase e^{-i|eta| phi}) or spin-lowering
// (eta < 0, derivative d/d alpha*, phase e^{+i|eta| phi}) factors rewritten
// through the arc-length chart, including the exact ladder normalization
// sqrt((j-|eta|)!/(j+|eta|)!) (2J)^{|eta|/2}. Dropping that prefactor leaves
// an O(1) discrepancy at the aligned corner m = -sign(eta)|eta| even as
// J -> infinity; with it, the error decays, passing through an extended
// ~J^{-1/2} transient for 2J ≲ j^2 before settling on the asymptotic J^{-1}.
inline ConvergenceReport planar_fd_error(int eta, int j, int m, Complex alpha,
                                         const std::vector<int>& two_j_sweep) {
  const int k = std::abs(eta);
  if (j < 0 || k > j) throw std::invalid_argument("planar_fd_error: requires |eta| <= j");
  if (std::abs(m) > j) throw std::invalid_argument("planar_fd_error: |m| exceeds j");
  const double h =
      std::max(std::pow(std::numeric_limits<double>::epsilon(), 1.0 / double(k + 4)),
               std::abs(alpha) * 1e-5);
  if (!(h > 0.0) || std::abs(alpha) + h == std::abs(alpha))
    throw std::runtime_error("planar_fd_error: finite-difference step underflows at this alpha");
  const double pref_j =
      SqrtRational::sqrt_of(BigRational(factorial(HalfInt(j - k)), factorial(HalfInt(j + k))))
          .to_double();
  const SpinWeightedExpansion lhs = SpinWeightedExpansion::basis(eta, j, m);
  ConvergenceReport rep;
  for (int two_j : two_j_sweep) {
    const double c = 0.5 * std::sqrt(double(two_j));
    const double theta = std::abs(alpha) / c;
    if (theta > std::numbers::pi)
      throw std::invalid_argument("planar_fd_error: alpha leaves the polar chart at this two_j");
    const double phi = -std::arg(alpha);
    const Complex exact = expansion::evaluate(lhs, theta, phi);
    const Complex d = detail::fd_wirtinger_power(j, m, k, eta < 0, alpha, two_j, h);
    const double pref = pref_j * std::pow(double(two_j), 0.5 * double(k));
    const double sign = (eta > 0 && k % 2 != 0) ? -1.0 : 1.0;
    const Complex phase = std::polar(1.0, (eta < 0 ? double(k) : -double(k)) * phi);
    rep.two_j.push_back(two_j);
    rep.error.push_back(std::abs(exact - sign * pref * phase * d));
  }
  fit_loglog(rep);
  return rep;
}

// L2 distance, on the fixed chart disk |alpha| <= 2.5 with grid spacing 0.1,
// between the exact n-fold lowered spin-up symbol (ethbar/sqrt(2J))^n W and
// its flat-chart derivative form (-1)^n e^{i n phi} (d/d alpha*)^n W computed
// by composed stencil passes over the shared grid.
inline ConvergenceReport derivative_l2_sweep(int n, const std::vector<int>& two_j_sweep) {
  if (n < 1) throw std::invalid_argument("derivative_l2_sweep: derivative order must be positive");
  constexpr double kDisk = 2.5;
  constexpr double kStep = 0.1;
  const int halo = 2 * n;
  const int cells = static_cast<int>(std::ceil(kDisk / kStep)) + halo;
  const int nn = 2 * cells + 1;
  ConvergenceReport rep;
  for (int two_j : two_j_sweep) {
    const double c = 0.5 * std::sqrt(double(two_j));
    if (std::numbers::sqrt2 * double(cells) * kStep >= std::numbers::pi * c)
      throw std::invalid_argument("derivative_l2_sweep: grid leaves the polar chart at this two_j");
    const PhaseSpaceFunction w = detail::spin_up_wigner(two_j);
    std::vector<std::vector<Complex>> val(static_cast<std::size_t>(nn),
                                          std::vector<Complex>(static_cast<std::size_t>(nn)));
    for (int iu = 0; iu < nn; ++iu)
      for (int iv = 0; iv < nn; ++iv) {
        const Complex a(double(iu - cells) * kStep, double(iv - cells) * kStep);
        val[static_cast<std::size_t>(iu)][static_cast<std::size_t>(iv)] =
            expansion::evaluate(w.body, std::abs(a) / c, -std::arg(a));
      }
    int lo = 0, hi = nn;
    for (int pass = 0; pass < n; ++pass) detail::wirtinger_pass(val, lo, hi, kStep, true);
    SpinWeightedExpansion lowered = w.body;
    for (int pass = 0; pass < n; ++pass) lowered = expansion::eth_bar(lowered);
    const double scale = std::pow(double(two_j), -0.5 * double(n));
    const double parity_sign = (n % 2 == 0) ? 1.0 : -1.0;
    double sum = 0.0;
    for (int iu = lo; iu < hi; ++iu)
      for (int iv = lo; iv < hi; ++iv) {
        const Complex a(double(iu - cells) * kStep, double(iv - cells) * kStep);
        if (std::abs(a) > kDisk) continue;
        const double phi = -std::arg(a);
        const Complex approx = parity_sign * std::polar(1.0, double(n) * phi) *
                               val[static_cast<std::size_t>(iu)][static_cast<std::size_t>(iv)];
        const Complex exact = scale * expansion::evaluate(lowered, std::abs(a) / c, phi);
        sum += std::norm(approx - exact);
      }
    rep.two_j.push_back(two_j);
    rep.error.push_back(std::sqrt(sum) * kStep);
  }
  fit_loglog(rep);
  return rep;
}

}  // namespace spinphase::approx
