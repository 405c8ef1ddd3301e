#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spinphase/expansion.hpp"

using namespace spinphase;
using namespace spinphase::expansion;
using Catch::Approx;
using std::complex;

namespace {

constexpr double pi = std::numbers::pi;

SpinWeightedExpansion random_expansion(int weight, int max_rank, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpinWeightedExpansion f(weight, max_rank);
  for (int j = std::abs(weight); j <= max_rank; ++j)
    for (int m = -j; m <= j; ++m) f.set_coeff(j, m, Complex(u(rng), u(rng)));
  return f;
}

}  // namespace

TEST_CASE("eth and eth_bar act by the exact ladder factors") {
  for (int j = 0; j <= 12; ++j) {
    for (int eta = -j; eta <= j; ++eta) {
      const int m = (j >= 1) ? 1 : 0;
      auto f = SpinWeightedExpansion::basis(eta, j, m);
      auto up = eth(f);
      REQUIRE(up.weight() == eta + 1);
      const double up_factor = std::sqrt(double(j - eta) * double(j + eta + 1));
      if (eta == j) {
        CHECK(up.empty());
      } else {
        CHECK(up.coeff(j, m).real() == up_factor);  // same sqrt, bitwise
      }
      auto down = eth_bar(f);
      REQUIRE(down.weight() == eta - 1);
      const double down_factor = -std::sqrt(double(j + eta) * double(j - eta + 1));
      if (eta == -j) {
        CHECK(down.empty());
      } else {
        CHECK(down.coeff(j, m).real() == down_factor);
      }
    }
  }
}

TEST_CASE("ladder compositions reproduce the flat Laplacian eigenvalues") {
  for (int j = 1; j <= 12; ++j) {
    for (int eta = -j + 1; eta <= j - 1; ++eta) {
      auto f = SpinWeightedExpansion::basis(eta, j, 0);
      auto down_up = eth_bar(eth(f));
      REQUIRE(down_up.weight() == eta);
      CHECK(down_up.coeff(j, 0).real() ==
            Approx(double(eta) * (eta + 1) - double(j) * (j + 1)).epsilon(1e-14));
      auto up_down = eth(eth_bar(f));
      CHECK(up_down.coeff(j, 0).real() ==
            Approx(double(eta) * (eta - 1) - double(j) * (j + 1)).epsilon(1e-14));
    }
  }
}

TEST_CASE("commutator of the ladders measures the weight") {
  auto f = random_expansion(2, 6, 11);
  auto a = eth_bar(eth(f));
  auto b = eth(eth_bar(f));
  for (int j = 2; j <= 6; ++j)
    for (int m = -j; m <= j; ++m)
      CHECK(std::abs(a.coeff(j, m) - b.coeff(j, m) - 4.0 * f.coeff(j, m)) < 1e-12);
}

TEST_CASE("ladder annihilation edge cases") {
  CHECK(eth(SpinWeightedExpansion::basis(0, 0, 0)).empty());
  CHECK(eth_bar(SpinWeightedExpansion::basis(0, 0, 0)).empty());
  auto f = SpinWeightedExpansion::basis(0, 3, 2);
  for (int k = 0; k < 3; ++k) f = eth(f);
  CHECK_FALSE(f.empty());
  CHECK(eth(f).empty());  // weight would exceed rank
}

TEST_CASE("basis_from_ladder reproduces the direct basis") {
  for (int j = 0; j <= 6; ++j)
    for (int eta = -j; eta <= j; ++eta)
      for (int m : {-j, 0, j}) {
        auto ladder = basis_from_ladder(eta, j, m);
        auto direct = SpinWeightedExpansion::basis(eta, j, m);
        CAPTURE(eta, j, m);
        REQUIRE(oracles::max_coeff_diff(ladder, direct) < 1e-13);
      }
  CHECK_THROWS_AS(basis_from_ladder(3, 2, 0), std::invalid_argument);
}

TEST_CASE("multiply reproduces the worked harmonic products") {
  auto y33 = SpinWeightedExpansion::basis(0, 3, 3);
  auto y10 = SpinWeightedExpansion::basis(0, 1, 0);
  auto p = multiply(y33, y10);
  REQUIRE(p.weight() == 0);
  CHECK(p.max_rank() == 4);
  CHECK(p.coeffs().size() == 1);
  CHECK(p.coeff(4, 3).real() == Approx(1.0 / (2.0 * std::sqrt(3.0 * pi))).epsilon(1e-14));
  CHECK(p.coeff(4, 3).imag() == 0.0);

  auto y33_1 = SpinWeightedExpansion::basis(1, 3, 3);
  auto y10_m1 = SpinWeightedExpansion::basis(-1, 1, 0);
  auto q = multiply(y33_1, y10_m1);
  REQUIRE(q.weight() == 0);
  CHECK(q.coeffs().size() == 2);
  CHECK(q.coeff(3, 3).real() == Approx(-3.0 / (4.0 * std::sqrt(2.0 * pi))).epsilon(1e-13));
  CHECK(q.coeff(4, 3).real() == Approx(1.0 / (4.0 * std::sqrt(2.0 * pi))).epsilon(1e-13));
}

TEST_CASE("multiplying by the constant harmonic rescales") {
  auto f = random_expansion(1, 4, 5);
  auto y00 = SpinWeightedExpansion::basis(0, 0, 0);
  auto p = multiply(f, y00);
  const double scale = 1.0 / std::sqrt(4.0 * pi);
  for (const auto& [jm, c] : f.coeffs())
    CHECK(std::abs(p.coeff(jm.first, jm.second) - scale * c) < 1e-15);
}

TEST_CASE("multiply is commutative and bilinear") {
  auto f = random_expansion(1, 3, 21);
  auto g = random_expansion(-1, 4, 22);
  CHECK(oracles::max_coeff_diff(multiply(f, g), multiply(g, f)) < 1e-13);

  auto h = random_expansion(1, 3, 23);
  auto fh = linear_combine({{Complex(2.0, 1.0), &f}, {Complex(0.0, -3.0), &h}});
  auto lhs = multiply(fh, g);
  auto rhs_f = multiply(f, g);
  auto rhs_h = multiply(h, g);
  auto rhs = linear_combine({{Complex(2.0, 1.0), &rhs_f}, {Complex(0.0, -3.0), &rhs_h}});
  CHECK(oracles::max_coeff_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("multiply agrees with pointwise products on a grid") {
  auto f = random_expansion(1, 3, 31);
  auto g = random_expansion(-2, 3, 32);
  auto p = multiply(f, g);
  REQUIRE(p.weight() == -1);
  for (int i = 0; i < 20; ++i) {
    for (int k = 0; k < 20; ++k) {
      const double theta = (i + 0.5) * pi / 20, phi = 2.0 * pi * k / 20;
      const auto lhs = evaluate(p, theta, phi);
      const auto rhs = evaluate(f, theta, phi) * evaluate(g, theta, phi);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("evaluate matches closed forms at low rank") {
  auto y00 = SpinWeightedExpansion::basis(0, 0, 0);
  CHECK(evaluate(y00, 0.77, 2.13).real() == Approx(1.0 / std::sqrt(4.0 * pi)));
  CHECK(evaluate(y00, 0.77, 2.13).imag() == 0.0);

  auto y10 = SpinWeightedExpansion::basis(0, 1, 0);
  CHECK(evaluate(y10, 0.0, 1.1).real() == Approx(std::sqrt(3.0 / (4.0 * pi))));
  for (double theta : {0.3, 1.4, 2.8})
    CHECK(evaluate(y10, theta, 0.5).real() == Approx(std::sqrt(3.0 / (4.0 * pi)) * std::cos(theta)));

  auto y11 = SpinWeightedExpansion::basis(0, 1, 1);
  for (double theta : {0.3, 1.4}) {
    auto v = evaluate(y11, theta, 0.9);
    auto want = -std::sqrt(3.0 / (8.0 * pi)) * std::sin(theta) * std::polar(1.0, 0.9);
    CHECK(std::abs(v - want) < 1e-14);
  }

  // Weighted forms, from lowering/raising Y_{1m} explicitly.
  auto y10_w1 = SpinWeightedExpansion::basis(1, 1, 0);
  for (double theta : {0.3, 1.4, 2.8})
    CHECK(evaluate(y10_w1, theta, 0.0).real() == Approx(std::sqrt(3.0 / (8.0 * pi)) * std::sin(theta)));
  auto y11_w1 = SpinWeightedExpansion::basis(1, 1, 1);
  for (double theta : {0.3, 1.4}) {
    auto v = evaluate(y11_w1, theta, 0.7);
    auto want = -std::sqrt(3.0 / (4.0 * pi)) * std::polar(1.0, 0.7) * (1.0 - std::cos(theta)) / 2.0;
    CHECK(std::abs(v - want) < 1e-14);
  }
}

TEST_CASE("rotation mixes coefficients by D-matrix entries") {
  auto f = random_expansion(0, 4, 41);
  CHECK(oracles::max_coeff_diff(rotate(f, 0.0, 0.0), f) < 1e-15);

  const double theta0 = 0.87, phi0 = -1.31;
  auto y1m1 = SpinWeightedExpansion::basis(0, 1, -1);
  auto r = rotate(y1m1, theta0, phi0);
  for (int mp = -1; mp <= 1; ++mp) {
    auto want = angular::wigner_D(1, mp, -1, phi0, theta0, 0.0);
    CHECK(std::abs(r.coeff(1, mp) - want) < 1e-15);
  }

  CHECK_THROWS_AS(rotate(SpinWeightedExpansion::basis(1, 1, 0), 0.1, 0.2), std::logic_error);
}

TEST_CASE("rotation agrees with moving the evaluation point") {
  auto f = random_expansion(0, 3, 51);
  const double theta0 = 1.12, phi0 = 2.45;
  auto rf = rotate(f, theta0, phi0);
  oracles::PointRotation rot(theta0, phi0);
  for (int i = 1; i < 7; ++i) {
    for (int k = 0; k < 7; ++k) {
      const double theta = i * pi / 7, phi = 2.0 * pi * k / 7;
      auto [tp, pp] = rot.apply_inverse(theta, phi);
      CHECK(std::abs(evaluate(rf, theta, phi) - evaluate(f, tp, pp)) < 1e-10);
    }
  }
}

TEST_CASE("linear_combine basics") {
  auto f = random_expansion(1, 3, 61);
  auto g = random_expansion(1, 2, 62);
  auto same = linear_combine({{1.0, &f}, {0.0, &g}});
  CHECK(oracles::max_coeff_diff(same, f) == 0.0);
  auto zero = linear_combine({{1.0, &f}, {-1.0, &f}});
  CHECK(zero.empty());

  auto y11 = SpinWeightedExpansion::basis(0, 1, 1);
  auto five = linear_combine({{2.0, &y11}, {3.0, &y11}});
  CHECK(five.coeff(1, 1) == Complex(5.0, 0.0));

  auto h = random_expansion(0, 2, 63);
  CHECK_THROWS_AS(linear_combine({{1.0, &f}, {1.0, &h}}), std::invalid_argument);
}

TEST_CASE("l2_norm is exact on the basis and matches quadrature") {
  for (int j : {0, 2, 5})
    CHECK(l2_norm(SpinWeightedExpansion::basis(0, j, std::min(j, 1)), 1.0) == 1.0);
  CHECK(l2_norm(SpinWeightedExpansion(0), 3.7) == 0.0);
  CHECK(l2_norm(SpinWeightedExpansion::basis(0, 1, 0), 2.5) == 2.5);
  CHECK_THROWS_AS(l2_norm(SpinWeightedExpansion(0), 0.0), std::invalid_argument);

  auto f = random_expansion(0, 8, 71);
  const double R = 1.8;
  const double exact = l2_norm(f, R);
  const double quad = std::sqrt(oracles::quadrature_l2_sq(
      [&](double theta, double phi) { return evaluate(f, theta, phi); }, R, 400, 400));
  CHECK(quad == Approx(exact).epsilon(1e-6));

  auto g = random_expansion(2, 6, 72);  // weighted functions obey the same Parseval identity
  const double exact_g = l2_norm(g, 1.0);
  const double quad_g = std::sqrt(oracles::quadrature_l2_sq(
      [&](double theta, double phi) { return evaluate(g, theta, phi); }, 1.0, 400, 400));
  CHECK(quad_g == Approx(exact_g).epsilon(1e-6));
}

TEST_CASE("conjugate flips the weight and conjugates pointwise") {
  auto f = random_expansion(2, 4, 81);
  auto fc = conjugate(f);
  REQUIRE(fc.weight() == -2);
  for (double theta : {0.4, 1.3, 2.7})
    for (double phi : {0.0, 1.9, 4.4})
      CHECK(std::abs(evaluate(fc, theta, phi) - std::conj(evaluate(f, theta, phi))) < 1e-12);
  CHECK(oracles::max_coeff_diff(conjugate(fc), f) < 1e-15);
}

TEST_CASE("truncate and scaled") {
  auto f = random_expansion(0, 5, 91);
  auto t = truncate(f, 3);
  CHECK(t.max_rank() == 3);
  for (const auto& [jm, c] : t.coeffs()) CHECK(jm.first <= 3);
  CHECK(t.coeff(2, 1) == f.coeff(2, 1));
  auto s = scaled(f, Complex(0.0, 2.0));
  CHECK(s.coeff(3, -2) == Complex(0.0, 2.0) * f.coeff(3, -2));
  CHECK(scaled(f, Complex(0.0, 0.0)).empty());
}

TEST_CASE("coefficient validation") {
  SpinWeightedExpansion f(2);
  CHECK_THROWS_AS(f.set_coeff(1, 0, Complex(1, 0)), std::invalid_argument);   // j < |weight|
  CHECK_THROWS_AS(f.set_coeff(3, 4, Complex(1, 0)), std::invalid_argument);   // |m| > j
  f.set_coeff(2, -2, Complex(1, 0));
  CHECK(f.max_rank() == 2);
  f.set_coeff(2, -2, Complex(0, 0));
  CHECK(f.empty());
}
