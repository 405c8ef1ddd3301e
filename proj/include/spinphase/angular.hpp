#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "spinphase/halfint.hpp"
#include "spinphase/sqrt_rational.hpp"

namespace spinphase::angular {

using std::complex;

inline bool triangle(HalfInt a, HalfInt b, HalfInt c) {
  return (a + b + c).is_integer() && c <= a + b && c >= (a - b).abs();
}

namespace detail {

inline void check_pair(HalfInt j, HalfInt m, const char* who) {
  if (j.twice() < 0) throw std::invalid_argument(std::string(who) + ": negative angular momentum j=" + j.str());
  if ((j.twice() - m.twice()) % 2 != 0)
    throw std::invalid_argument(std::string(who) + ": projection parity mismatch, j=" + j.str() + " m=" + m.str());
}

// Delta(abc)^2 = (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!, triangle assumed.
inline BigRational delta_sq(HalfInt a, HalfInt b, HalfInt c) {
  return BigRational(factorial(a + b - c) * factorial(a - b + c) * factorial(-a + b + c),
                     factorial(a + b + c + HalfInt(1)));
}

}  // namespace detail

// <j1 m1; j2 m2 | J M> in the Condon-Shortley convention, exact. Selection
// rule violations (M != m1+m2, triangle failures, |m| > j) give exact zero;
// malformed inputs (parity mismatches, negative j) throw.
inline SqrtRational clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  detail::check_pair(j1, m1, "clebsch_gordan");
  detail::check_pair(j2, m2, "clebsch_gordan");
  detail::check_pair(J, M, "clebsch_gordan");
  if (m1 + m2 != M || !triangle(j1, j2, J) || m1.abs() > j1 || m2.abs() > j2 || M.abs() > J)
    return SqrtRational();

  // Racah's closed form: one alternating rational sum under a single radical.
  const HalfInt zmin_a = -(J - j2 + m1), zmin_b = -(J - j1 - m2);
  int zmin = std::max(0, std::max(zmin_a.to_int(), zmin_b.to_int()));
  int zmax = std::min((j1 + j2 - J).to_int(), std::min((j1 - m1).to_int(), (j2 + m2).to_int()));
  if (zmin > zmax) return SqrtRational();

  // Summed over a common denominator M = zmax!(A-zmin)!(B-zmin)!(C-zmin)!(D+zmax)!(E+zmax)!,
  // so every scaled term is an integer and the single gcd happens at the end.
  // T(z+1) = T(z)(A-z)(B-z)(C-z)/((z+1)(D+z+1)(E+z+1)) is an exact integer step.
  const int A = (j1 + j2 - J).to_int(), B = (j1 - m1).to_int(), C = (j2 + m2).to_int();
  const int D = (J - j2 + m1).to_int(), E = (J - j1 - m2).to_int();
  BigInt t = 1;
  for (int k = zmin + 1; k <= zmax; ++k) t *= k;
  for (int k = D + zmin + 1; k <= D + zmax; ++k) t *= k;
  for (int k = E + zmin + 1; k <= E + zmax; ++k) t *= k;
  BigInt num = (zmin % 2 == 0) ? t : -t;
  for (int z = zmin; z < zmax; ++z) {
    t *= std::int64_t(A - z) * (B - z) * (C - z);
    t /= std::int64_t(z + 1) * (D + z + 1) * (E + z + 1);
    num += ((z + 1) % 2 == 0) ? t : -t;
  }
  BigInt common = factorial(HalfInt(zmax)) * factorial(HalfInt(A - zmin)) * factorial(HalfInt(B - zmin)) *
                  factorial(HalfInt(C - zmin)) * factorial(HalfInt(D + zmax)) * factorial(HalfInt(E + zmax));
  if (num == 0) return SqrtRational();

  // value = sqrt(pre) * num/common, assembled as one radicand so the rational
  // normalization happens exactly once per evaluation.
  BigInt pre_num = factorial(j1 + j2 - J) * factorial(j1 - j2 + J) * factorial(-j1 + j2 + J) *
                   (J.twice() + 1) * factorial(J + M) * factorial(J - M) * factorial(j1 + m1) *
                   factorial(j1 - m1) * factorial(j2 + m2) * factorial(j2 - m2);
  SqrtRational v = SqrtRational::sqrt_of(
      BigRational(pre_num * num * num, factorial(j1 + j2 + J + HalfInt(1)) * common * common));
  return num < 0 ? -v : v;
}

// Wigner 3-j symbol, exact, via its Clebsch-Gordan relation.
inline SqrtRational wigner_3j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3) {
  detail::check_pair(j3, m3, "wigner_3j");
  if ((m1 + m2 + m3).twice() != 0) {
    detail::check_pair(j1, m1, "wigner_3j");
    detail::check_pair(j2, m2, "wigner_3j");
    return SqrtRational();
  }
  SqrtRational c = clebsch_gordan(j1, m1, j2, m2, j3, -m3);
  if (c.is_zero()) return c;
  SqrtRational v = c / SqrtRational::sqrt_of(BigRational(j3.twice() + 1));
  return phase(j1 - j2 - m3) > 0 ? v : -v;
}

// Wigner 6-j symbol {a b c; d e f}, exact Racah single-sum form.
inline SqrtRational wigner_6j(HalfInt a, HalfInt b, HalfInt c, HalfInt d, HalfInt e, HalfInt f) {
  for (HalfInt x : {a, b, c, d, e, f})
    if (x.twice() < 0) throw std::invalid_argument("wigner_6j: negative angular momentum");
  if (!triangle(a, b, c) || !triangle(a, e, f) || !triangle(d, b, f) || !triangle(d, e, c)) return SqrtRational();

  const int s1 = (a + b + c).to_int(), s2 = (a + e + f).to_int(), s3 = (d + b + f).to_int(), s4 = (d + e + c).to_int();
  const int t1 = (a + b + d + e).to_int(), t2 = (b + c + e + f).to_int(), t3 = (a + c + d + f).to_int();
  const int zmin = std::max(std::max(s1, s2), std::max(s3, s4));
  const int zmax = std::min(t1, std::min(t2, t3));

  BigRational sum = 0;
  for (int z = zmin; z <= zmax; ++z) {
    BigInt den = factorial(z - s1) * factorial(z - s2) * factorial(z - s3) * factorial(z - s4) *
                 factorial(t1 - z) * factorial(t2 - z) * factorial(t3 - z);
    BigRational term(factorial(z + 1), den);
    sum += (z % 2 == 0) ? term : -term;
  }

  BigRational pre = detail::delta_sq(a, b, c) * detail::delta_sq(a, e, f) * detail::delta_sq(d, b, f) *
                    detail::delta_sq(d, e, c);
  return SqrtRational::sqrt_of(pre).scaled(sum);
}

namespace detail {

inline double binom_sqrt(HalfInt n, HalfInt k) {
  return SqrtRational::sqrt_of(BigRational(factorial(n), factorial(k) * factorial(n - k))).to_double();
}

// d^{l0}_{m1 m2} at the smallest admissible rank l0 = max(|m1|,|m2|).
inline double corner_d(HalfInt m1, HalfInt m2, double theta) {
  const double ch = std::cos(0.5 * theta), sh = std::sin(0.5 * theta);
  HalfInt l0 = std::max(m1.abs(), m2.abs());
  double b, cpow, spow;
  int sgn = 1;
  if (m1 == l0) {  // d^j_{j,m}
    b = binom_sqrt(l0 + l0, l0 - m2);
    cpow = (l0 + m2).to_double();
    spow = (l0 - m2).to_double();
    sgn = ((l0 - m2).to_int() % 2 == 0) ? 1 : -1;
  } else if (m2 == l0) {  // d^j_{m,j}
    b = binom_sqrt(l0 + l0, l0 - m1);
    cpow = (l0 + m1).to_double();
    spow = (l0 - m1).to_double();
  } else if (m1 == -l0) {  // d_{-j,m} = d_{-m,j}
    b = binom_sqrt(l0 + l0, l0 + m2);
    cpow = (l0 - m2).to_double();
    spow = (l0 + m2).to_double();
  } else {  // m2 == -l0: d_{m,-j} = d_{j,-m}
    b = binom_sqrt(l0 + l0, l0 + m1);
    cpow = (l0 - m1).to_double();
    spow = (l0 + m1).to_double();
    sgn = ((l0 + m1).to_int() % 2 == 0) ? 1 : -1;
  }
  return sgn * b * std::pow(ch, cpow) * std::pow(sh, spow);
}

}  // namespace detail

// d^j_{m1 m2}(theta) for every j from max(|m1|,|m2|) up to j_max, by upward
// three-term recurrence in j (stable; the alternating closed-form sum is not).
// Entry k of the result holds rank l0 + k.
inline std::vector<double> wigner_small_d_run(HalfInt m1, HalfInt m2, double theta, HalfInt j_max) {
  if ((m1.twice() - m2.twice()) % 2 != 0)
    throw std::invalid_argument("wigner_small_d: m1 and m2 must share parity");
  HalfInt l0 = std::max(m1.abs(), m2.abs());
  std::vector<double> out;
  if (j_max < l0) return out;

  const double x = std::cos(theta);
  const double a1 = m1.to_double(), a2 = m2.to_double();
  out.push_back(detail::corner_d(m1, m2, theta));
  double prev = 0.0;
  for (HalfInt l = l0; l + HalfInt(1) <= j_max; l = l + HalfInt(1)) {
    const double lf = l.to_double(), lp = lf + 1.0;
    const double czero = lf * std::sqrt((lp * lp - a1 * a1) * (lp * lp - a2 * a2));
    double next;
    if (czero == 0.0) {
      // l0 = 0 and both projections zero never lands here beyond l=0; the
      // only degenerate start is l=0 with m1=m2=0 where d^1_{00} = cos.
      next = x * out.back();
    } else {
      next = ((2 * lf + 1) * (lf * lp * x - a1 * a2) * out.back() -
              lp * std::sqrt((lf * lf - a1 * a1) * (lf * lf - a2 * a2)) * prev) /
             czero;
    }
    prev = out.back();
    out.push_back(next);
  }
  return out;
}

// d^j_{m1 m2}(theta) = <j m1| exp(-i theta Jy) |j m2>.
inline double wigner_small_d(HalfInt j, HalfInt m1, HalfInt m2, double theta) {
  detail::check_pair(j, m1, "wigner_small_d");
  detail::check_pair(j, m2, "wigner_small_d");
  if (m1.abs() > j || m2.abs() > j)
    throw std::invalid_argument("wigner_small_d: |m| exceeds j");
  HalfInt l0 = std::max(m1.abs(), m2.abs());
  auto run = wigner_small_d_run(m1, m2, theta, j);
  return run[static_cast<std::size_t>((j - l0).to_int())];
}

// D^j_{m1 m2}(phi, theta, psi) = e^{-i m1 phi} d^j_{m1 m2}(theta) e^{-i m2 psi};
// these are the spin-j matrix elements of the rotation operator used throughout.
inline complex<double> wigner_D(HalfInt j, HalfInt m1, HalfInt m2, double phi, double theta, double psi) {
  const double d = wigner_small_d(j, m1, m2, theta);
  return std::polar(1.0, -m1.to_double() * phi - m2.to_double() * psi) * d;
}

namespace detail {

struct Key3j {
  std::array<int16_t, 6> v;
  bool operator==(const Key3j&) const = default;
};

struct Key3jHash {
  std::size_t operator()(const Key3j& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int16_t x : k.v) {
      h ^= static_cast<std::uint16_t>(x);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

// Memoized double-precision 3-j, the hot path of expansion products. The
// cache is thread-local: lock-free, at the cost of per-thread warmup.
inline double wigner_3j_cached(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3) {
  thread_local std::unordered_map<detail::Key3j, double, detail::Key3jHash> cache;
  detail::Key3j key{{static_cast<int16_t>(j1.twice()), static_cast<int16_t>(j2.twice()),
                     static_cast<int16_t>(j3.twice()), static_cast<int16_t>(m1.twice()),
                     static_cast<int16_t>(m2.twice()), static_cast<int16_t>(m3.twice())}};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  double v = wigner_3j(j1, j2, j3, m1, m2, m3).to_double();
  cache.emplace(key, v);
  return v;
}

}  // namespace spinphase::angular
