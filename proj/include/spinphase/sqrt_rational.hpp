#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <vector>

#include "spinphase/halfint.hpp"

namespace spinphase {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

// n! as an exact integer. Arguments must be whole and non-negative; coupling
// coefficients at large J overflow double factorials long before j ~ 30.
inline BigInt factorial(HalfInt n) {
  if (!n.is_integer() || n.twice() < 0)
    throw std::invalid_argument("factorial: argument must be a non-negative integer, got " + n.str());
  static std::vector<BigInt> table{1};
  const std::size_t k = static_cast<std::size_t>(n.to_int());
  while (table.size() <= k) table.push_back(table.back() * static_cast<int>(table.size()));
  return table[k];
}

inline double to_double(const BigRational& q) {
  using Big50 = boost::multiprecision::cpp_bin_float_50;
  return static_cast<Big50>(q).convert_to<double>();
}

inline long double to_long_double(const BigRational& q) {
  using Big50 = boost::multiprecision::cpp_bin_float_50;
  return static_cast<Big50>(q).convert_to<long double>();
}

// Exact value of the form sign * sqrt(radicand) with rational radicand >= 0.
// Closed under multiplication, division and rational scaling, which covers
// every coupling coefficient and weight factor in this library; sums are
// taken only after conversion to double.
class SqrtRational {
public:
  SqrtRational() : sign_(0), radicand_(0) {}

  static SqrtRational sqrt_of(BigRational radicand) {
    if (radicand < 0) throw std::invalid_argument("SqrtRational: negative radicand");
    SqrtRational v;
    v.sign_ = radicand == 0 ? 0 : 1;
    v.radicand_ = std::move(radicand);
    return v;
  }

  static SqrtRational exact(const BigRational& value) {
    SqrtRational v;
    v.sign_ = value == 0 ? 0 : (value > 0 ? 1 : -1);
    v.radicand_ = value * value;
    return v;
  }

  int sign() const { return sign_; }
  const BigRational& radicand() const { return radicand_; }
  bool is_zero() const { return sign_ == 0; }

  SqrtRational operator-() const {
    SqrtRational v = *this;
    v.sign_ = -v.sign_;
    return v;
  }

  friend SqrtRational operator*(const SqrtRational& a, const SqrtRational& b) {
    SqrtRational v;
    v.sign_ = a.sign_ * b.sign_;
    if (v.sign_ != 0) v.radicand_ = a.radicand_ * b.radicand_;
    return v;
  }

  friend SqrtRational operator/(const SqrtRational& a, const SqrtRational& b) {
    if (b.sign_ == 0) throw std::domain_error("SqrtRational: division by zero");
    SqrtRational v;
    v.sign_ = a.sign_ * b.sign_;
    if (v.sign_ != 0) v.radicand_ = a.radicand_ / b.radicand_;
    return v;
  }

  // Multiply by an exact rational (sign carried into the prefactor).
  SqrtRational scaled(const BigRational& q) const { return *this * exact(q); }

  friend bool operator==(const SqrtRational& a, const SqrtRational& b) = default;

  double to_double() const {
    if (sign_ == 0) return 0.0;
    using Big50 = boost::multiprecision::cpp_bin_float_50;
    Big50 r = sqrt(static_cast<Big50>(radicand_));
    return sign_ * r.convert_to<double>();
  }

private:
  int sign_;
  BigRational radicand_;
};

}  // namespace spinphase
