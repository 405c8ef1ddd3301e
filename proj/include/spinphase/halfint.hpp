#pragma once

#include <compare>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace spinphase {

// Half-integer quantum number, stored as twice its value so arithmetic stays
// in exact integers. HalfInt(3, 2) is 3/2; from_twice(3) is the same value.
class HalfInt {
public:
  constexpr HalfInt() : two_x_(0) {}
  constexpr HalfInt(int whole) : two_x_(2 * whole) {}
  constexpr HalfInt(int num, int den) : two_x_(0) {
    if (den == 1) {
      two_x_ = 2 * num;
    } else if (den == 2) {
      two_x_ = num;
    } else {
      throw std::invalid_argument("HalfInt: denominator must be 1 or 2");
    }
  }

  static constexpr HalfInt from_twice(int two_x) {
    HalfInt h;
    h.two_x_ = two_x;
    return h;
  }

  constexpr int twice() const { return two_x_; }
  constexpr bool is_integer() const { return two_x_ % 2 == 0; }

  // Whole-number value; invalid on proper half-integers.
  constexpr int to_int() const {
    if (!is_integer()) throw std::invalid_argument("HalfInt: not an integer");
    return two_x_ / 2;
  }
  constexpr double to_double() const { return 0.5 * two_x_; }

  friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return from_twice(a.two_x_ + b.two_x_); }
  friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return from_twice(a.two_x_ - b.two_x_); }
  friend constexpr HalfInt operator-(HalfInt a) { return from_twice(-a.two_x_); }
  friend constexpr auto operator<=>(HalfInt a, HalfInt b) = default;

  HalfInt abs() const { return from_twice(std::abs(two_x_)); }

  std::string str() const {
    if (is_integer()) return std::to_string(two_x_ / 2);
    return std::to_string(two_x_) + "/2";
  }

private:
  int two_x_;
};

// j and m belong to the same ladder: |m| <= j and j - m integral.
inline bool valid_projection(HalfInt j, HalfInt m) {
  return (j.twice() - m.twice()) % 2 == 0 && m.abs() <= j;
}

// (-1)^k for integral k; rejects proper half-integers, where the phase is ambiguous.
inline int phase(HalfInt k) {
  if (!k.is_integer()) throw std::invalid_argument("phase: exponent must be an integer");
  return k.to_int() % 2 == 0 ? 1 : -1;
}

}  // namespace spinphase
