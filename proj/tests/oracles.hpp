#pragma once

// Independent reference constructions used to validate the library. Nothing
// here calls into the closed-form implementations it is meant to check:
// couplings come from ladder operators and Gram-Schmidt, rotation matrices
// from a Hermitian eigendecomposition of Jy, and radical sums are kept exact
// by factoring radicands over small primes.

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "spinphase/expansion.hpp"
#include "spinphase/halfint.hpp"
#include "spinphase/sqrt_rational.hpp"

namespace oracles {

using spinphase::BigInt;
using spinphase::BigRational;
using spinphase::HalfInt;
using spinphase::SqrtRational;
using std::complex;

inline const std::vector<int>& small_primes() {
  static const std::vector<int> primes = [] {
    std::vector<int> out;
    std::vector<bool> sieve(1001, true);
    for (int p = 2; p <= 1000; ++p) {
      if (!sieve[p]) continue;
      out.push_back(p);
      for (int q = 2 * p; q <= 1000; q += p) sieve[q] = false;
    }
    return out;
  }();
  return primes;
}

// Exact sum of terms c_i * sqrt(r_i): every radicand is factored over small
// primes into coeff^2 * squarefree, and equal squarefree parts accumulate as
// rationals. Valid because every radicand in these tests is a ratio of small
// factorials, so all prime factors are below 1000.
class RadicalSum {
 public:
  void add(const SqrtRational& v) {
    if (v.is_zero()) return;
    BigInt num = boost::multiprecision::numerator(v.radicand());
    BigInt den = boost::multiprecision::denominator(v.radicand());
    BigInt n = num * den;
    BigInt outside = 1, squarefree = 1;
    for (int p : small_primes()) {
      if (n == 1) break;
      int e = 0;
      while (n % p == 0) {
        n /= p;
        ++e;
      }
      for (int k = 0; k < e / 2; ++k) outside *= p;
      if (e % 2 == 1) squarefree *= p;
    }
    if (n != 1) throw std::runtime_error("RadicalSum: radicand has a prime factor above 1000");
    BigRational coeff(outside, den);
    if (v.sign() < 0) coeff = -coeff;
    auto [it, inserted] = terms_.try_emplace(squarefree, coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == 0) terms_.erase(it);
    }
  }

  bool equals(const SqrtRational& v) const {
    RadicalSum rhs;
    rhs.add(v);
    return terms_ == rhs.terms_;
  }

  bool is_zero() const { return terms_.empty(); }

 private:
  std::map<BigInt, BigRational> terms_;
};

// Angular momentum matrices with rows and columns indexed by k = 0..2j for
// m = j - k (highest projection first).
inline Eigen::MatrixXcd jy_matrix(HalfInt j) {
  const int dim = j.twice() + 1;
  Eigen::MatrixXcd jy = Eigen::MatrixXcd::Zero(dim, dim);
  const double jd = j.to_double();
  for (int k = 1; k < dim; ++k) {
    const double m = jd - k;  // raising from m to m+1 lands in row k-1
    const double c = std::sqrt(jd * (jd + 1.0) - m * (m + 1.0));
    jy(k - 1, k) = complex<double>(0.0, -0.5) * c;
    jy(k, k - 1) = complex<double>(0.0, 0.5) * c;
  }
  return jy;
}

inline Eigen::MatrixXcd jz_matrix(HalfInt j) {
  const int dim = j.twice() + 1;
  Eigen::MatrixXcd jz = Eigen::MatrixXcd::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) jz(k, k) = j.to_double() - k;
  return jz;
}

// exp(-i angle H) for Hermitian H, via eigendecomposition.
inline Eigen::MatrixXcd exp_minus_i(const Eigen::MatrixXcd& h, double angle) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  Eigen::VectorXcd phases(h.rows());
  for (int k = 0; k < h.rows(); ++k) phases(k) = std::polar(1.0, -angle * solver.eigenvalues()(k));
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

// <j m1| exp(-i theta Jy) |j m2> by matrix exponential, no closed form.
inline double small_d_matrix_exp(HalfInt j, HalfInt m1, HalfInt m2, double theta) {
  Eigen::MatrixXcd d = exp_minus_i(jy_matrix(j), theta);
  const int r = (j - m1).to_int(), c = (j - m2).to_int();
  return d(r, c).real();
}

// Clebsch-Gordan table built from the representation theory itself: highest
// weight states, lowering with J- = J1- + J2-, and Gram-Schmidt inside each
// magnetization subspace. Sign fixed by <j1 j1; j2 (J-j1)|J J> > 0.
class LadderCoupling {
 public:
  LadderCoupling(HalfInt j1, HalfInt j2) : j1_(j1), j2_(j2) {
    const int d1 = j1.twice() + 1, d2 = j2.twice() + 1;
    std::map<int, std::vector<Eigen::VectorXd>> by_two_m;  // accepted |J M> per M
    for (HalfInt J = j1 + j2; J >= (j1 - j2).abs(); J = J - HalfInt(1)) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(d1 * d2);
      if (J == j1 + j2) {
        v(index(j1, j2)) = 1.0;
      } else {
        // The orthogonal complement of the lowered higher-J copies inside the
        // M = J subspace is one-dimensional; seed with whichever basis state
        // keeps the largest residual, so the projection never degenerates.
        double best = -1.0;
        for (HalfInt m1 = top_m1(J); m1 >= low_m1(J); m1 = m1 - HalfInt(1)) {
          Eigen::VectorXd cand = Eigen::VectorXd::Zero(d1 * d2);
          cand(index(m1, J - m1)) = 1.0;
          for (const auto& u : by_two_m[J.twice()]) cand -= u.dot(cand) * u;
          const double n = cand.norm();
          if (n > best) {
            best = n;
            v = cand;
          }
        }
        v.normalize();
        if (v(index(j1_, J - j1_)) < 0) v = -v;
      }
      by_two_m[J.twice()].push_back(v);
      table_[J.twice()][J.twice()] = v;
      for (HalfInt M = J; M > -J; M = M - HalfInt(1)) {
        Eigen::VectorXd w = lower(v) / std::sqrt(J.to_double() * (J.to_double() + 1.0) -
                                                 M.to_double() * (M.to_double() - 1.0));
        table_[J.twice()][(M - HalfInt(1)).twice()] = w;
        by_two_m[(M - HalfInt(1)).twice()].push_back(w);
        v = w;
      }
    }
  }

  double coefficient(HalfInt m1, HalfInt m2, HalfInt J, HalfInt M) const {
    if (m1 + m2 != M || m1.abs() > j1_ || m2.abs() > j2_) return 0.0;
    auto jt = table_.find(J.twice());
    if (jt == table_.end()) return 0.0;
    auto mt = jt->second.find(M.twice());
    if (mt == jt->second.end()) return 0.0;
    return mt->second(index(m1, m2));
  }

 private:
  int index(HalfInt m1, HalfInt m2) const {
    return (j1_ - m1).to_int() * (j2_.twice() + 1) + (j2_ - m2).to_int();
  }

  HalfInt top_m1(HalfInt M) const { return std::min(j1_, M + j2_); }
  HalfInt low_m1(HalfInt M) const { return std::max(-j1_, M - j2_); }

  Eigen::VectorXd lower(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    const double a = j1_.to_double(), b = j2_.to_double();
    for (HalfInt m1 = j1_; m1 >= -j1_; m1 = m1 - HalfInt(1)) {
      for (HalfInt m2 = j2_; m2 >= -j2_; m2 = m2 - HalfInt(1)) {
        const double c = v(index(m1, m2));
        if (c == 0.0) continue;
        const double x1 = m1.to_double(), x2 = m2.to_double();
        if (m1 > -j1_) out(index(m1 - HalfInt(1), m2)) += c * std::sqrt(a * (a + 1.0) - x1 * (x1 - 1.0));
        if (m2 > -j2_) out(index(m1, m2 - HalfInt(1))) += c * std::sqrt(b * (b + 1.0) - x2 * (x2 - 1.0));
      }
    }
    return out;
  }

  HalfInt j1_, j2_;
  std::map<int, std::map<int, Eigen::VectorXd>> table_;  // two_J -> two_M -> vector
};

// R^2 * integral |f|^2 dOmega by endpoint-corrected trapezoid in theta and a
// periodic rectangle rule in phi. The Euler-Maclaurin correction uses
// d/dtheta[|f|^2 sin theta] = |f|^2 at theta = 0 and -|f|^2 at theta = pi, so
// no derivative evaluations are needed and the theta error drops to O(h^4).
inline double quadrature_l2_sq(const std::function<complex<double>(double, double)>& f, double R, int n_theta,
                               int n_phi) {
  const double pi = std::numbers::pi;
  const double h = pi / (n_theta - 1);
  const double w_phi = 2.0 * pi / n_phi;
  double total = 0.0;
  for (int k = 0; k < n_phi; ++k) {
    const double phi = k * w_phi;
    double slice = 0.0;
    for (int i = 0; i < n_theta; ++i) {
      const double theta = i * h;
      const double g = std::norm(f(theta, phi)) * std::sin(theta);
      slice += (i == 0 || i == n_theta - 1) ? 0.5 * g : g;
    }
    slice *= h;
    slice += h * h / 12.0 * (std::norm(f(0.0, phi)) + std::norm(f(pi, phi)));
    total += slice * w_phi;
  }
  return R * R * total;
}

// Horner evaluation with error-free transformations (FMA product splits plus
// 2Sum), accurate to roughly twice working precision. Node residuals of the
// interpolating polynomials then reflect the stored coefficients instead of
// the evaluation scheme; a naive Horner pass at x ~ -270 loses ~1e-8 on its
// own, which is exactly the scale under test.
inline long double compensated_horner(const std::vector<long double>& c, long double x) {
  long double s = c.back();
  long double comp = 0.0L;
  for (std::size_t n = c.size() - 1; n-- > 0;) {
    const long double p = s * x;
    const long double pi_err = std::fmal(s, x, -p);
    const long double t = p + c[n];
    const long double z = t - p;
    const long double sigma = (p - (t - z)) + (c[n] - z);
    s = t;
    comp = comp * x + (pi_err + sigma);
  }
  return s + comp;
}

// Rotation Rz(phi0) * Ry(theta0) applied to a unit vector, as plain linear
// algebra on R^3; used to cross-check coefficient-space rotations pointwise.
struct PointRotation {
  std::array<std::array<double, 3>, 3> mat;

  PointRotation(double theta0, double phi0) {
    const double ct = std::cos(theta0), st = std::sin(theta0);
    const double cp = std::cos(phi0), sp = std::sin(phi0);
    // Rz(phi0) Ry(theta0)
    mat = {{{cp * ct, -sp, cp * st}, {sp * ct, cp, sp * st}, {-st, 0.0, ct}}};
  }

  std::pair<double, double> apply_inverse(double theta, double phi) const {
    const std::array<double, 3> n = {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                     std::cos(theta)};
    std::array<double, 3> r{};
    for (int i = 0; i < 3; ++i)  // transpose = inverse for a rotation
      r[i] = mat[0][i] * n[0] + mat[1][i] * n[1] + mat[2][i] * n[2];
    const double z = std::clamp(r[2], -1.0, 1.0);
    return {std::acos(z), std::atan2(r[1], r[0])};
  }
};

inline double max_coeff_diff(const spinphase::expansion::SpinWeightedExpansion& a,
                             const spinphase::expansion::SpinWeightedExpansion& b) {
  if (a.weight() != b.weight()) return 1e300;
  double worst = 0.0;
  for (const auto& [jm, c] : a.coeffs()) worst = std::max(worst, std::abs(c - b.coeff(jm.first, jm.second)));
  for (const auto& [jm, c] : b.coeffs()) worst = std::max(worst, std::abs(c - a.coeff(jm.first, jm.second)));
  return worst;
}

}  // namespace oracles
