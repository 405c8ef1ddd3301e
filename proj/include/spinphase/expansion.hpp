#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spinphase/angular.hpp"
#include "spinphase/halfint.hpp"

namespace spinphase::expansion {

using Complex = std::complex<double>;

inline constexpr double kPruneThreshold = 1e-14;

// A function on the sphere of definite spin weight, stored as a sparse
// expansion over spin-weighted spherical harmonics Y^eta_{jm}. Ranks and
// projections are integers; only j >= |eta| and |m| <= j are admissible.
// max_rank is the declared band limit and may exceed the largest stored rank
// (products track the sum of band limits even when leading terms cancel).
class SpinWeightedExpansion {
 public:
  using CoeffMap = std::map<std::pair<int, int>, Complex>;

  SpinWeightedExpansion() = default;
  explicit SpinWeightedExpansion(int weight, int max_rank = 0)
      : weight_(weight), max_rank_(std::max(max_rank, std::abs(weight))) {}

  // Unit coefficient on Y^weight_{jm}.
  static SpinWeightedExpansion basis(int weight, int j, int m) {
    SpinWeightedExpansion f(weight, j);
    f.set_coeff(j, m, Complex(1.0, 0.0));
    return f;
  }

  int weight() const { return weight_; }
  int max_rank() const { return max_rank_; }
  void declare_max_rank(int r) { max_rank_ = std::max(max_rank_, r); }
  const CoeffMap& coeffs() const { return coeffs_; }
  bool empty() const { return coeffs_.empty(); }

  Complex coeff(int j, int m) const {
    auto it = coeffs_.find({j, m});
    return it == coeffs_.end() ? Complex(0.0, 0.0) : it->second;
  }

  void set_coeff(int j, int m, Complex v) {
    if (j < std::abs(weight_) || std::abs(m) > j)
      throw std::invalid_argument("SpinWeightedExpansion: coefficient outside admissible (j,m)");
    if (v == Complex(0.0, 0.0)) {
      coeffs_.erase({j, m});
      return;
    }
    coeffs_[{j, m}] = v;
    max_rank_ = std::max(max_rank_, j);
  }

  void add_coeff(int j, int m, Complex v) { set_coeff(j, m, coeff(j, m) + v); }

  // Drops entries that fell below float noise after arithmetic.
  void prune(double threshold = kPruneThreshold) {
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
      if (std::abs(it->second) < threshold)
        it = coeffs_.erase(it);
      else
        ++it;
    }
  }

  friend bool operator==(const SpinWeightedExpansion& a, const SpinWeightedExpansion& b) {
    return a.weight_ == b.weight_ && a.coeffs_ == b.coeffs_;
  }

 private:
  int weight_ = 0;
  int max_rank_ = 0;
  CoeffMap coeffs_;
};

// Raising ladder: coefficient at (j,m) scales by sqrt((j-eta)(j+eta+1)) and
// the weight increases by one. Ranks with a vanishing factor drop out.
inline SpinWeightedExpansion eth(const SpinWeightedExpansion& f) {
  const int eta = f.weight();
  SpinWeightedExpansion out(eta + 1, f.max_rank());
  for (const auto& [jm, c] : f.coeffs()) {
    const auto [j, m] = jm;
    const double factor = std::sqrt(double(j - eta) * double(j + eta + 1));
    if (factor != 0.0 && j >= std::abs(eta + 1)) out.set_coeff(j, m, factor * c);
  }
  out.prune();
  return out;
}

// Lowering ladder: scales by -sqrt((j+eta)(j-eta+1)), weight decreases by one.
inline SpinWeightedExpansion eth_bar(const SpinWeightedExpansion& f) {
  const int eta = f.weight();
  SpinWeightedExpansion out(eta - 1, f.max_rank());
  for (const auto& [jm, c] : f.coeffs()) {
    const auto [j, m] = jm;
    const double factor = -std::sqrt(double(j + eta) * double(j - eta + 1));
    if (factor != 0.0 && j >= std::abs(eta - 1)) out.set_coeff(j, m, factor * c);
  }
  out.prune();
  return out;
}

// The ladder-normalized basis element: Y^eta_{jm} built by applying eth (or
// eth_bar for negative weight) to the ordinary harmonic and dividing by the
// accumulated factors. Equals basis(eta, j, m); kept as a cross-check and as
// the definitional constructor.
inline SpinWeightedExpansion basis_from_ladder(int eta, int j, int m) {
  if (j < std::abs(eta)) throw std::invalid_argument("basis_from_ladder: rank below |weight|");
  SpinWeightedExpansion f = SpinWeightedExpansion::basis(0, j, m);
  for (int k = 0; k < std::abs(eta); ++k) f = (eta > 0) ? eth(f) : eth_bar(f);
  BigRational norm(factorial(j - std::abs(eta)), factorial(j + std::abs(eta)));
  double scale = SqrtRational::sqrt_of(norm).to_double();
  if (eta < 0 && std::abs(eta) % 2 != 0) scale = -scale;
  SpinWeightedExpansion out(eta, j);
  for (const auto& [jm, c] : f.coeffs()) out.set_coeff(jm.first, jm.second, scale * c);
  return out;
}

// Pointwise product, decomposed back into spin-weighted harmonics through the
// double-3j coupling rule. Weights add; band limits add. A nonnegative
// rank_cap drops output ranks above it during accumulation; the kept
// coefficients are identical to truncating the full product afterwards. The
// weight-row 3j factor depends only on (j1, j2, L) and is fetched once per
// rank block, which matters for dense operands.
inline SpinWeightedExpansion multiply(const SpinWeightedExpansion& f, const SpinWeightedExpansion& g,
                                      int rank_cap = -1) {
  const int e1 = f.weight(), e2 = g.weight(), e3 = e1 + e2;
  static const double inv_sqrt_4pi = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  const int full_rank = f.max_rank() + g.max_rank();
  SpinWeightedExpansion out(e3, rank_cap < 0 ? full_rank : std::min(full_rank, rank_cap));
  int row_j1 = -1, row_j2 = -1, row_base = 0, row_top = -1;
  std::vector<double> row;
  for (const auto& [jm1, c1] : f.coeffs()) {
    const auto [j1, m1] = jm1;
    for (const auto& [jm2, c2] : g.coeffs()) {
      const auto [j2, m2] = jm2;
      if (j1 != row_j1 || j2 != row_j2) {
        row_j1 = j1;
        row_j2 = j2;
        row_base = std::max(std::abs(j1 - j2), std::abs(e3));
        row_top = rank_cap < 0 ? j1 + j2 : std::min(j1 + j2, rank_cap);
        row.assign(row_top >= row_base ? static_cast<std::size_t>(row_top - row_base + 1) : 0, 0.0);
        for (int L = row_base; L <= row_top; ++L)
          row[static_cast<std::size_t>(L - row_base)] = angular::wigner_3j_cached(j1, j2, L, -e1, -e2, e3);
      }
      const int M = m1 + m2;
      const Complex c12 = c1 * c2;
      const int lmin = std::max(row_base, std::abs(M));
      for (int L = lmin; L <= row_top; ++L) {
        const double w_e = row[static_cast<std::size_t>(L - row_base)];
        if (w_e == 0.0) continue;
        const double w_m = angular::wigner_3j_cached(j1, j2, L, m1, m2, -M);
        if (w_m == 0.0) continue;
        const double sign = ((M + e3) % 2 == 0) ? 1.0 : -1.0;
        const double scale = sign * inv_sqrt_4pi *
                             std::sqrt(double(2 * j1 + 1) * double(2 * j2 + 1) * double(2 * L + 1));
        out.add_coeff(L, M, scale * w_m * w_e * c12);
      }
    }
  }
  out.prune();
  return out;
}

// Y^eta_{jm}(theta, phi) = (-1)^m sqrt((2j+1)/4pi) e^{im phi} d^j_{-m,eta}(theta).
// Evaluation batches the d-recurrence per projection column.
inline Complex evaluate(const SpinWeightedExpansion& f, double theta, double phi) {
  const int eta = f.weight();
  static const double inv_4pi = 1.0 / (4.0 * std::numbers::pi);
  Complex total(0.0, 0.0);
  std::map<int, std::vector<std::pair<int, Complex>>> by_m;  // m -> [(j, c)]
  int j_top = 0;
  for (const auto& [jm, c] : f.coeffs()) {
    by_m[jm.second].emplace_back(jm.first, c);
    j_top = std::max(j_top, jm.first);
  }
  for (const auto& [m, terms] : by_m) {
    const int l0 = std::max(std::abs(m), std::abs(eta));
    const auto run = angular::wigner_small_d_run(HalfInt(-m), HalfInt(eta), theta, HalfInt(j_top));
    Complex radial(0.0, 0.0);
    for (const auto& [j, c] : terms) {
      const double d = run[static_cast<std::size_t>(j - l0)];
      const double norm = std::sqrt(double(2 * j + 1) * inv_4pi);
      radial += c * norm * d;
    }
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    total += sign * radial * std::polar(1.0, m * phi);
  }
  return total;
}

// Rigid rotation by Euler angles (phi0 about z after theta0 about y), acting
// on weight-0 expansions: ranks mix internally through the D-matrix,
// c'(j, m') = sum_m D^j_{m' m}(phi0, theta0, 0) c(j, m).
inline SpinWeightedExpansion rotate(const SpinWeightedExpansion& f, double theta0, double phi0) {
  if (f.weight() != 0)
    throw std::logic_error("rotate: only weight-0 expansions can be rotated");
  SpinWeightedExpansion out(0, f.max_rank());
  std::map<int, std::vector<std::pair<int, Complex>>> by_j;  // j -> [(m, c)]
  for (const auto& [jm, c] : f.coeffs()) by_j[jm.first].emplace_back(jm.second, c);
  for (const auto& [j, terms] : by_j) {
    for (int mp = -j; mp <= j; ++mp) {
      Complex acc(0.0, 0.0);
      for (const auto& [m, c] : terms) acc += angular::wigner_D(j, mp, m, phi0, theta0, 0.0) * c;
      if (acc != Complex(0.0, 0.0)) out.add_coeff(j, mp, acc);
    }
  }
  out.prune();
  return out;
}

// Coefficient-wise linear combination; all terms must share one weight.
inline SpinWeightedExpansion linear_combine(
    const std::vector<std::pair<Complex, const SpinWeightedExpansion*>>& terms) {
  if (terms.empty()) return SpinWeightedExpansion();
  const int weight = terms.front().second->weight();
  int rank = std::abs(weight);
  for (const auto& [a, f] : terms) {
    if (f->weight() != weight) throw std::invalid_argument("linear_combine: mixed spin weights");
    rank = std::max(rank, f->max_rank());
  }
  SpinWeightedExpansion out(weight, rank);
  for (const auto& [a, f] : terms)
    for (const auto& [jm, c] : f->coeffs()) out.add_coeff(jm.first, jm.second, a * c);
  out.prune();
  return out;
}

inline SpinWeightedExpansion linear_combine(std::initializer_list<std::pair<Complex, const SpinWeightedExpansion*>> terms) {
  return linear_combine(std::vector<std::pair<Complex, const SpinWeightedExpansion*>>(terms));
}

// L2 norm over the sphere of radius R: sqrt(R^2 sum |c|^2), by orthonormality
// of the harmonics under the unit-sphere measure.
inline double l2_norm(const SpinWeightedExpansion& f, double R) {
  if (R <= 0.0) throw std::invalid_argument("l2_norm: radius must be positive");
  double s = 0.0;
  for (const auto& [jm, c] : f.coeffs()) s += std::norm(c);
  return R * std::sqrt(s);
}

// Complex conjugation flips the weight: conj(Y^eta_{jm}) = (-1)^{m+eta} Y^{-eta}_{j,-m}.
inline SpinWeightedExpansion conjugate(const SpinWeightedExpansion& f) {
  const int eta = f.weight();
  SpinWeightedExpansion out(-eta, f.max_rank());
  for (const auto& [jm, c] : f.coeffs()) {
    const auto [j, m] = jm;
    const double sign = ((m + eta) % 2 == 0) ? 1.0 : -1.0;
    out.set_coeff(j, -m, sign * std::conj(c));
  }
  return out;
}

// Hard band-limit cut: drops every rank above `rank` and lowers the declared
// limit accordingly.
inline SpinWeightedExpansion truncate(const SpinWeightedExpansion& f, int rank) {
  SpinWeightedExpansion out(f.weight(), std::min(f.max_rank(), rank));
  for (const auto& [jm, c] : f.coeffs())
    if (jm.first <= rank) out.set_coeff(jm.first, jm.second, c);
  return out;
}

inline SpinWeightedExpansion scaled(const SpinWeightedExpansion& f, Complex a) {
  SpinWeightedExpansion out(f.weight(), f.max_rank());
  if (a == Complex(0.0, 0.0)) return out;
  for (const auto& [jm, c] : f.coeffs()) out.set_coeff(jm.first, jm.second, a * c);
  return out;
}

}  // namespace spinphase::expansion
