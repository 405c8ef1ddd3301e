#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spinphase/angular.hpp"
#include "spinphase/expansion.hpp"
#include "spinphase/halfint.hpp"
#include "spinphase/sqrt_rational.hpp"

namespace spinphase::tensorops {

using expansion::Complex;
using expansion::SpinWeightedExpansion;

// Dense operator on the (2J+1)-dimensional spin space. Rows and columns are
// indexed by decreasing projection: row 0 is m = +J.
class SpinOperator {
 public:
  explicit SpinOperator(int two_j)
      : two_j_(two_j), mat_(Eigen::MatrixXcd::Zero(two_j + 1, two_j + 1)) {
    if (two_j < 0) throw std::invalid_argument("SpinOperator: negative two_j");
  }

  static SpinOperator identity_op(int two_j) {
    SpinOperator a(two_j);
    a.mat_.setIdentity();
    return a;
  }

  int two_j() const { return two_j_; }
  int dim() const { return two_j_ + 1; }
  HalfInt spin() const { return HalfInt::from_twice(two_j_); }

  Eigen::MatrixXcd& mat() { return mat_; }
  const Eigen::MatrixXcd& mat() const { return mat_; }

  int row_of(HalfInt m) const {
    if (!valid_projection(spin(), m)) throw std::invalid_argument("SpinOperator: bad projection " + m.str());
    return (two_j_ - m.twice()) / 2;
  }

  Complex at(HalfInt m1, HalfInt m2) const { return mat_(row_of(m1), row_of(m2)); }
  void set(HalfInt m1, HalfInt m2, Complex v) { mat_(row_of(m1), row_of(m2)) = v; }

  Complex trace() const { return mat_.trace(); }

  SpinOperator adjoint() const {
    SpinOperator a(two_j_);
    a.mat_ = mat_.adjoint();
    return a;
  }

 private:
  int two_j_;
  Eigen::MatrixXcd mat_;
};

inline SpinOperator operator*(const SpinOperator& a, const SpinOperator& b) {
  if (a.two_j() != b.two_j()) throw std::invalid_argument("SpinOperator: dimension mismatch");
  SpinOperator c(a.two_j());
  c.mat() = a.mat() * b.mat();
  return c;
}

inline SpinOperator operator+(const SpinOperator& a, const SpinOperator& b) {
  if (a.two_j() != b.two_j()) throw std::invalid_argument("SpinOperator: dimension mismatch");
  SpinOperator c(a.two_j());
  c.mat() = a.mat() + b.mat();
  return c;
}

inline SpinOperator operator-(const SpinOperator& a, const SpinOperator& b) {
  if (a.two_j() != b.two_j()) throw std::invalid_argument("SpinOperator: dimension mismatch");
  SpinOperator c(a.two_j());
  c.mat() = a.mat() - b.mat();
  return c;
}

inline SpinOperator operator*(Complex z, const SpinOperator& a) {
  SpinOperator c(a.two_j());
  c.mat() = z * a.mat();
  return c;
}

namespace detail {

// Coupling cache for fixed J: C^{J, m2+m}_{J m2, j m} as doubles, indexed by
// (j, m, row of m2). Exact Racah values are computed once per two_J.
class CouplingCache {
 public:
  explicit CouplingCache(int two_j) : two_j_(two_j), dim_(two_j + 1) {
    HalfInt J = HalfInt::from_twice(two_j);
    table_.assign(static_cast<std::size_t>(dim_ * dim_) * (two_j + 1), 0.0);
    for (int j = 0; j <= two_j; ++j) {
      for (int m = -j; m <= j; ++m) {
        for (int r2 = 0; r2 < dim_; ++r2) {
          HalfInt m2 = HalfInt::from_twice(two_j - 2 * r2);
          HalfInt m1 = m2 + HalfInt(m);
          if (m1.abs() > J) continue;
          table_[index(j, m, r2)] =
              angular::clebsch_gordan(J, m2, HalfInt(j), HalfInt(m), J, m1).to_double();
        }
      }
    }
  }

  // C^{J, m2+m}_{J m2, j m}; zero when any projection is out of range.
  double cg(int j, int m, int row_m2) const {
    if (row_m2 < 0 || row_m2 >= dim_ || std::abs(m) > j || j > two_j_) return 0.0;
    return table_[index(j, m, row_m2)];
  }

 private:
  std::size_t index(int j, int m, int r2) const {
    return (static_cast<std::size_t>(j * j + j + m) * dim_) + r2;
  }

  int two_j_, dim_;
  std::vector<double> table_;
};

inline const CouplingCache& coupling_cache(int two_j) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<CouplingCache>> caches;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = caches[two_j];
  if (!slot) slot = std::make_unique<CouplingCache>(two_j);
  return *slot;
}

}  // namespace detail

// Irreducible tensor operator T_{jm}: [T_{jm}]_{m1 m2} = sqrt((2j+1)/(2J+1))
// C^{J m1}_{J m2, j m}. Nonzero entries sit on the diagonal m1 = m2 + m.
inline SpinOperator tensor_op(int two_j, int j, int m) {
  if (j < 0 || j > two_j || std::abs(m) > j)
    throw std::invalid_argument("tensor_op: rank or projection out of range");
  const auto& cache = detail::coupling_cache(two_j);
  SpinOperator t(two_j);
  const double scale = std::sqrt(double(2 * j + 1) / double(two_j + 1));
  for (int r2 = 0; r2 < two_j + 1; ++r2) {
    const int r1 = r2 - m;  // row of m2 + m
    if (r1 < 0 || r1 > two_j) continue;
    const double c = cache.cg(j, m, r2);
    if (c != 0.0) t.mat()(r1, r2) = scale * c;
  }
  return t;
}

// gamma_j of Eq-style weight form sqrt(2J) (2J)! / sqrt((2J+j+1)!(2J-j)!),
// exactly; zero above the band limit j = 2J.
inline SqrtRational gamma(int two_j, int j) {
  if (j < 0) throw std::invalid_argument("gamma: negative rank");
  if (j > two_j) return SqrtRational();
  BigInt f2j = factorial(HalfInt::from_twice(2 * two_j));
  BigRational radicand(BigInt(two_j) * f2j * f2j,
                       factorial(HalfInt(two_j + j + 1)) * factorial(HalfInt(two_j - j)));
  return SqrtRational::sqrt_of(radicand);
}

// gamma_j^p for real p, through 50-digit logs so extreme magnitudes at large
// J cannot degrade the double result.
inline double gamma_pow(int two_j, int j, double p) {
  if (p == 0.0) return 1.0;
  SqrtRational g = gamma(two_j, j);
  if (g.is_zero()) {
    if (p > 0.0) return 0.0;
    throw std::domain_error("gamma_pow: negative power of a vanishing weight");
  }
  using Big50 = boost::multiprecision::cpp_bin_float_50;
  Big50 r = static_cast<Big50>(g.radicand());
  return static_cast<double>(exp(Big50(0.5 * p) * log(r)).convert_to<double>());
}

// Phase-space sphere radius R = sqrt(J / (2 pi)).
inline double radius(int two_j) {
  if (two_j < 1) throw std::invalid_argument("radius: two_j must be at least 1");
  return std::sqrt(double(two_j) / (4.0 * std::numbers::pi));
}

// Generalized parity operator M_s = (1/R) sum_j sqrt((2j+1)/4pi) gamma_j^{-s} T_{j0}.
inline SpinOperator parity_operator(int two_j, double s) {
  if (s < -1.0 || s > 1.0) throw std::invalid_argument("parity_operator: s outside [-1, 1]");
  SpinOperator m_s(two_j);
  const double inv_r = 1.0 / radius(two_j);
  for (int j = 0; j <= two_j; ++j) {
    const double w = inv_r * std::sqrt(double(2 * j + 1) / (4.0 * std::numbers::pi)) * gamma_pow(two_j, j, -s);
    m_s.mat() += w * tensor_op(two_j, j, 0).mat();
  }
  return m_s;
}

// Rotation operator R(theta, phi) = e^{-i phi Jz} e^{-i theta Jy} in the spin-J
// representation; entries are Wigner D-matrix elements.
inline SpinOperator rotation_matrix(int two_j, double theta, double phi) {
  SpinOperator r(two_j);
  HalfInt J = HalfInt::from_twice(two_j);
  for (HalfInt m1 = J; m1 >= -J; m1 = m1 - HalfInt(1))
    for (HalfInt m2 = J; m2 >= -J; m2 = m2 - HalfInt(1))
      r.set(m1, m2, angular::wigner_D(J, m1, m2, phi, theta, 0.0));
  return r;
}

// A spin-J operator carried as its s-parametrized symbol: a weight-0
// band-limited expansion over ranks j <= 2J.
struct PhaseSpaceFunction {
  int two_j = 0;
  double s = 0.0;
  SpinWeightedExpansion body;
};

// F_A(Omega, s): coefficient at (j,m) is Tr[A T+_{jm}] gamma_j^{-s} / R.
inline PhaseSpaceFunction op_to_phase(const SpinOperator& a, double s) {
  if (s < -1.0 || s > 1.0) throw std::invalid_argument("op_to_phase: s outside [-1, 1]");
  const int two_j = a.two_j();
  PhaseSpaceFunction f{two_j, s, SpinWeightedExpansion(0, two_j)};
  const double inv_r = 1.0 / radius(two_j);
  const auto& cache = detail::coupling_cache(two_j);
  for (int j = 0; j <= two_j; ++j) {
    const double g = gamma_pow(two_j, j, -s) * inv_r;
    const double scale = std::sqrt(double(2 * j + 1) / double(two_j + 1));
    for (int m = -j; m <= j; ++m) {
      // Tr[A T+_{jm}] over the band m1 = m2 + m of the real matrix T_{jm}.
      Complex tr(0.0, 0.0);
      for (int r2 = 0; r2 < two_j + 1; ++r2) {
        const int r1 = r2 - m;
        if (r1 < 0 || r1 > two_j) continue;
        tr += a.mat()(r1, r2) * (scale * cache.cg(j, m, r2));
      }
      if (tr != Complex(0.0, 0.0)) f.body.set_coeff(j, m, tr * g);
    }
  }
  f.body.prune();
  f.body.declare_max_rank(two_j);
  return f;
}

// Inverse map: A = sum coeffs(j,m) R gamma_j^{s} T_{jm}.
inline SpinOperator phase_to_op(const PhaseSpaceFunction& f) {
  SpinOperator a(f.two_j);
  const double r = radius(f.two_j);
  for (const auto& [jm, c] : f.body.coeffs()) {
    const auto [j, m] = jm;
    if (j > f.two_j)
      throw std::invalid_argument("phase_to_op: body rank exceeds the operator band limit");
    const double w = r * gamma_pow(f.two_j, j, f.s);
    a.mat() += (c * w) * tensor_op(f.two_j, j, m).mat();
  }
  return a;
}

// Hermitian operators map to symbols with c(j,-m) = (-1)^m conj(c(j,m)).
inline bool hermitian_symmetry(const SpinWeightedExpansion& body, double tol = 1e-12) {
  for (const auto& [jm, c] : body.coeffs()) {
    const auto [j, m] = jm;
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    if (std::abs(body.coeff(j, -m) - sign * std::conj(c)) > tol) return false;
  }
  return true;
}

// Structure constants of the tensor-operator algebra:
// K^L_{j1 m1, j2 m2} = Tr[T_{j1 m1} T_{j2 m2} T+_{L, m1+m2}], stored for
// L in [max(|j1-j2|, |m1+m2|), min(j1+j2, 2J)]. Values are real.
class KTable {
 public:
  KTable(int two_j, int threads) : two_j_(two_j) {
    const int n_pairs = (two_j + 1) * (two_j + 1);
    entries_.resize(static_cast<std::size_t>(n_pairs) * n_pairs);
    const auto& cache = detail::coupling_cache(two_j);
    auto build_rows = [&](int begin, int end) {
      for (int p1 = begin; p1 < end; ++p1) {
        const auto [j1, m1] = unpack(p1);
        for (int p2 = 0; p2 < n_pairs; ++p2) {
          const auto [j2, m2] = unpack(p2);
          build_entry(cache, j1, m1, j2, m2);
        }
      }
    };
    if (threads <= 1) {
      build_rows(0, n_pairs);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (n_pairs + threads - 1) / threads;
      for (int t = 0; t < threads; ++t) {
        const int begin = t * chunk, end = std::min(n_pairs, begin + chunk);
        if (begin < end) pool.emplace_back(build_rows, begin, end);
      }
      for (auto& th : pool) th.join();
    }
  }

  // Deserialization constructor; contents validated by the caller.
  KTable(int two_j, std::vector<std::vector<double>> entries)
      : two_j_(two_j), entries_(std::move(entries)) {}

  int two_j() const { return two_j_; }

  int l_min(int j1, int m1, int j2, int m2) const {
    return std::max(std::abs(j1 - j2), std::abs(m1 + m2));
  }
  int l_max(int j1, int j2) const { return std::min(j1 + j2, two_j_); }

  double value(int j1, int m1, int j2, int m2, int l) const {
    const auto& row = entries_[slot(j1, m1, j2, m2)];
    const int lo = l_min(j1, m1, j2, m2);
    if (l < lo || l > l_max(j1, j2)) return 0.0;
    const std::size_t k = static_cast<std::size_t>(l - lo);
    return k < row.size() ? row[k] : 0.0;
  }

  const std::vector<std::vector<double>>& raw() const { return entries_; }

 private:
  std::pair<int, int> unpack(int p) const {
    int j = static_cast<int>(std::sqrt(double(p)));
    while ((j + 1) * (j + 1) <= p) ++j;  // guard against sqrt rounding down
    while (j * j > p) --j;
    return {j, p - j * j - j};
  }

  std::size_t slot(int j1, int m1, int j2, int m2) const {
    const int n_pairs = (two_j_ + 1) * (two_j_ + 1);
    return static_cast<std::size_t>(j1 * j1 + j1 + m1) * n_pairs + (j2 * j2 + j2 + m2);
  }

  void build_entry(const detail::CouplingCache& cache, int j1, int m1, int j2, int m2) {
    const int big_m = m1 + m2;
    const int lo = l_min(j1, m1, j2, m2), hi = l_max(j1, j2);
    if (lo > hi) return;
    auto& row = entries_[slot(j1, m1, j2, m2)];
    row.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    const double dim_scale = std::pow(double(two_j_ + 1), -1.5);
    for (int l = lo; l <= hi; ++l) {
      // Single chain sum over the Hilbert projection: rows r of m2-column c.
      double acc = 0.0;
      for (int r = 0; r < two_j_ + 1; ++r) {
        const double c3 = cache.cg(l, big_m, r);
        if (c3 == 0.0) continue;
        const double c2 = cache.cg(j2, m2, r);
        if (c2 == 0.0) continue;
        const double c1 = cache.cg(j1, m1, r - m2);
        if (c1 == 0.0) continue;
        acc += c1 * c2 * c3;
      }
      row[static_cast<std::size_t>(l - lo)] =
          acc * dim_scale * std::sqrt(double(2 * j1 + 1) * double(2 * j2 + 1) * double(2 * l + 1));
    }
  }

  int two_j_;
  std::vector<std::vector<double>> entries_;
};

namespace detail {

inline std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

// On-disk layout: magic "SPKT", u32 version, u32 two_j, u64 row count, then
// per row a u64 length and that many binary64 values, then a u64 FNV-1a
// checksum of everything after the magic.
inline std::filesystem::path k_table_path(int two_j) {
  const char* dir = std::getenv("SPINPHASE_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return {};
  return std::filesystem::path(dir) / ("ktable_" + std::to_string(two_j) + ".bin");
}

inline std::shared_ptr<const KTable> load_k_table(int two_j) {
  const auto path = k_table_path(two_j);
  if (path.empty()) return nullptr;
  std::ifstream in(path, std::ios::binary);
  if (!in) return nullptr;
  std::vector<unsigned char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < 4 + 4 + 4 + 8 + 8 || std::memcmp(blob.data(), "SPKT", 4) != 0) return nullptr;
  const unsigned char* p = blob.data() + 4;
  auto read_u32 = [&p]() {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    p += 4;
    return v;
  };
  auto read_u64 = [&p]() {
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    p += 8;
    return v;
  };
  if (read_u32() != 1u || read_u32() != static_cast<std::uint32_t>(two_j)) return nullptr;
  const std::uint64_t payload_len = blob.size() - 4 - 8;
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, blob.data() + blob.size() - 8, 8);
  if (fnv1a(blob.data() + 4, payload_len) != stored_sum) return nullptr;
  const std::uint64_t rows = read_u64();
  const int n_pairs = (two_j + 1) * (two_j + 1);
  if (rows != static_cast<std::uint64_t>(n_pairs) * n_pairs) return nullptr;
  std::vector<std::vector<double>> entries(rows);
  const unsigned char* end = blob.data() + blob.size() - 8;
  for (auto& row : entries) {
    if (p + 8 > end) return nullptr;
    const std::uint64_t len = read_u64();
    if (p + 8 * len > end) return nullptr;
    row.resize(len);
    std::memcpy(row.data(), p, 8 * len);
    p += 8 * len;
  }
  if (p != end) return nullptr;
  return std::make_shared<KTable>(two_j, std::move(entries));
}

inline void save_k_table(const KTable& table) {
  const auto path = k_table_path(table.two_j());
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::vector<unsigned char> payload;
  auto put_u32 = [&payload](std::uint32_t v) {
    const auto* b = reinterpret_cast<const unsigned char*>(&v);
    payload.insert(payload.end(), b, b + 4);
  };
  auto put_u64 = [&payload](std::uint64_t v) {
    const auto* b = reinterpret_cast<const unsigned char*>(&v);
    payload.insert(payload.end(), b, b + 8);
  };
  put_u32(1u);
  put_u32(static_cast<std::uint32_t>(table.two_j()));
  put_u64(table.raw().size());
  for (const auto& row : table.raw()) {
    put_u64(row.size());
    const auto* b = reinterpret_cast<const unsigned char*>(row.data());
    payload.insert(payload.end(), b, b + 8 * row.size());
  }
  const std::uint64_t checksum = fnv1a(payload.data(), payload.size());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return;
  out.write("SPKT", 4);
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(&checksum), 8);
}

}  // namespace detail

// Lazily built, immutable, shared per two_J. When SPINPHASE_CACHE_DIR is set,
// tables persist across processes with an integrity checksum.
inline std::shared_ptr<const KTable> k_coefficient_table(int two_j, int threads = 1) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const KTable>> tables;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = tables[two_j];
  if (!slot) {
    slot = detail::load_k_table(two_j);
    if (!slot) {
      slot = std::make_shared<KTable>(two_j, threads);
      detail::save_k_table(*slot);
    }
  }
  return slot;
}

}  // namespace spinphase::tensorops
