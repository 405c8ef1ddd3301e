#include <cmath>
#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "spinphase/states.hpp"

using namespace spinphase;
using Catch::Approx;
using expansion::Complex;
using expansion::SpinWeightedExpansion;
using tensorops::PhaseSpaceFunction;
using tensorops::SpinOperator;

namespace {

double body_diff(const SpinWeightedExpansion& a, const SpinWeightedExpansion& b) {
  double worst = 0.0;
  for (const auto& [jm, c] : a.coeffs())
    worst = std::max(worst, std::abs(c - b.coeff(jm.first, jm.second)));
  for (const auto& [jm, c] : b.coeffs())
    worst = std::max(worst, std::abs(c - a.coeff(jm.first, jm.second)));
  return worst;
}

SpinOperator spin_up_matrix(int two_j) {
  SpinOperator up(two_j);
  up.set(HalfInt::from_twice(two_j), HalfInt::from_twice(two_j), Complex(1.0, 0.0));
  return up;
}

double grid_min(const SpinWeightedExpansion& body, int n_theta, int n_phi) {
  double mn = 1e300;
  for (int i = 0; i < n_theta; ++i)
    for (int k = 0; k < n_phi; ++k) {
      const double th = (i + 0.5) * std::numbers::pi / n_theta;
      const double ph = k * 2.0 * std::numbers::pi / n_phi;
      mn = std::min(mn, expansion::evaluate(body, th, ph).real());
    }
  return mn;
}

}  // namespace

TEST_CASE("spin-up symbol: trace oracle, coefficient form, validation") {
  for (int two_j : {1, 2, 3, 5, 8}) {
    const SpinOperator up = spin_up_matrix(two_j);
    for (double s : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
      const auto f = states::spin_up_phase(two_j, s);
      CHECK(body_diff(f.body, tensorops::op_to_phase(up, s).body) < 1e-14);
      CHECK(std::abs(f.body.coeff(0, 0) - states::unit_trace_c00(two_j, s)) < 1e-15);
      const HalfInt big_j = HalfInt::from_twice(two_j);
      for (const auto& [jm, c] : f.body.coeffs()) {
        CHECK(jm.second == 0);
        CHECK(c.imag() == 0.0);
        CHECK(c.real() > 0.0);
        // c(j,0) = sqrt((2j+1)/(2J+1)) C^{JJ}_{JJ,j0} gamma_j^{-s} / R
        const double cg =
            angular::clebsch_gordan(big_j, big_j, HalfInt(jm.first), HalfInt(0), big_j, big_j)
                .to_double();
        const double want = std::sqrt(double(2 * jm.first + 1) / double(two_j + 1)) * cg *
                            tensorops::gamma_pow(two_j, jm.first, -s) /
                            tensorops::radius(two_j);
        CHECK(c.real() == Approx(want).epsilon(1e-13));
      }
    }
  }
  CHECK_THROWS_AS(states::spin_up_phase(0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(states::spin_up_phase(2, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(states::spin_up_phase(2, -1.01), std::invalid_argument);
}

TEST_CASE("coherent symbol: rotated spin-up, matrix oracle, tilt location") {
  CHECK(body_diff(states::coherent_phase(4, 0.25, 0.0, 0.0).body,
                  states::spin_up_phase(4, 0.25).body) == 0.0);

  for (int two_j : {1, 3, 6}) {
    for (double s : {-1.0, 0.0, 0.5}) {
      for (double th0 : {0.4, 1.4, 2.7}) {
        const double phi0 = 0.6;
        const SpinOperator r = tensorops::rotation_matrix(two_j, th0, phi0);
        SpinOperator rot(two_j);
        rot.mat() = r.mat() * spin_up_matrix(two_j).mat() * r.mat().adjoint();
        CHECK(body_diff(states::coherent_phase(two_j, s, th0, phi0).body,
                        tensorops::op_to_phase(rot, s).body) < 1e-10);
      }
    }
  }

  // Q-function of the tilted state peaks at the tilt and stays nonnegative.
  const auto q = states::coherent_phase(12, -1.0, 1.0, 0.5);
  double mx = -1e300, mx_th = 0.0, mx_ph = 0.0, mn = 1e300;
  for (int i = 0; i < 100; ++i)
    for (int k = 0; k < 100; ++k) {
      const double th = (i + 0.5) * std::numbers::pi / 100;
      const double ph = k * 2.0 * std::numbers::pi / 100;
      const double v = expansion::evaluate(q.body, th, ph).real();
      mn = std::min(mn, v);
      if (v > mx) {
        mx = v;
        mx_th = th;
        mx_ph = ph;
      }
    }
  CHECK(mn >= -1e-12);
  CHECK(std::abs(mx_th - 1.0) <= std::numbers::pi / 100);
  CHECK(std::abs(mx_ph - 0.5) <= 2.0 * std::numbers::pi / 100);
}

TEST_CASE("lowering-kernel normalization: closed form, oracle, singularity") {
  CHECK(states::normalization_N(3, 0.0) == 1.0);

  // N dips to a single interior minimum at acos(1/(2J-1)) and then grows
  // monotonically into the singular tilt; for 2J <= 2 the minimum sits at
  // zero and the growth is global.
  for (int two_j : {1, 2, 4, 9}) {
    const double turn = two_j <= 2 ? 0.0 : std::acos(1.0 / (two_j - 1));
    double prev = states::normalization_N(two_j, turn);
    for (int k = 1; k <= 30; ++k) {
      const double th = turn + k * (3.1 - turn) / 30;
      const double n = states::normalization_N(two_j, th);
      CHECK(n > prev);
      prev = n;
    }
    if (turn > 0.0) {
      CHECK(states::normalization_N(two_j, turn) < 1.0);
      double before = states::normalization_N(two_j, 0.0);
      for (int k = 1; k <= 10; ++k) {
        const double n = states::normalization_N(two_j, k * turn / 10);
        CHECK(n < before);
        before = n;
      }
    }
  }

  // 1/N^2 equals <JJ| Kt^dag Kt |JJ> with the normalization factor removed.
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int two_j : {1, 2, 3, 4, 5, 6}) {
    for (int rep = 0; rep < 4; ++rep) {
      const double th0 = u(rng);
      const double n = states::normalization_N(two_j, th0);
      const SpinOperator k = states::k_operator(two_j, th0, 0.8);
      const Eigen::MatrixXcd kt = k.mat() / n;
      const Eigen::MatrixXcd prod = kt.adjoint() * kt;
      CHECK(std::abs(prod(0, 0).real() - 1.0 / (n * n)) < 1e-12);
      // K itself leaves the spin-up state with unit norm (row 0 is m = +J).
      CHECK(k.mat().col(0).norm() == Approx(1.0).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(states::normalization_N(4, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(states::normalization_N(4, 3.2), std::invalid_argument);
  CHECK_THROWS_AS(states::normalization_N(4, std::numbers::pi), std::domain_error);
  CHECK_THROWS_AS(states::k_operator(4, std::numbers::pi, 0.0), std::domain_error);
}

TEST_CASE("lowering kernel: pole form and rank-one rotated symbol") {
  // At the pole the kernel is the plain normalized lowering matrix.
  for (int two_j : {1, 3, 4}) {
    const SpinOperator k = states::k_operator(two_j, 0.0, 0.0);
    SpinOperator lower(two_j);
    for (int two_m = -two_j + 2; two_m <= two_j; two_m += 2) {
      const HalfInt m = HalfInt::from_twice(two_m);
      const double a = std::sqrt(0.25 * double(two_j + two_m) * double(two_j - two_m + 2));
      lower.set(m - HalfInt(1), m, Complex(a, 0.0));
    }
    CHECK((k.mat() - lower.mat() / std::sqrt(double(two_j))).cwiseAbs().maxCoeff() < 1e-14);
  }

  // Symbol closed form: F_K = N sqrt((J+1)(2J+1)/3) gamma_1^{-s}/R times the
  // rotated Y_{1,-1}.
  for (int two_j : {1, 2, 3, 6}) {
    for (double s : {-1.0, 0.0, 0.5}) {
      for (double th0 : {0.0, 0.7, 2.1}) {
        const double phi0 = 1.1;
        const double big_j = 0.5 * two_j;
        const double cs = states::normalization_N(two_j, th0) *
                          std::sqrt((big_j + 1.0) * (two_j + 1) / 3.0) *
                          tensorops::gamma_pow(two_j, 1, -s) / tensorops::radius(two_j);
        SpinWeightedExpansion closed =
            expansion::rotate(SpinWeightedExpansion::basis(0, 1, -1), th0, phi0);
        closed = expansion::linear_combine({{Complex(cs, 0.0), &closed}});
        const auto fk = tensorops::op_to_phase(states::k_operator(two_j, th0, phi0), s);
        CHECK(body_diff(fk.body, closed) < 1e-13);
      }
    }
  }
}

TEST_CASE("excited family: exact route equals the sandwiched matrix oracle") {
  for (int two_j : {1, 2, 3, 5, 6}) {
    for (double s : {-1.0, 0.0, 0.5}) {
      for (double th0 : {0.0, 0.9, 2.2}) {
        const double phi0 = 0.6;
        const SpinOperator k = states::k_operator(two_j, th0, phi0);
        SpinOperator exc(two_j);
        exc.mat() = k.mat() * spin_up_matrix(two_j).mat() * k.mat().adjoint();
        const auto exact =
            states::excited_coherent(two_j, s, th0, phi0, states::StateMethod::exact);
        CHECK(body_diff(exact.body, tensorops::op_to_phase(exc, s).body) < 1e-10);
        CHECK(std::abs(exact.body.coeff(0, 0) - states::unit_trace_c00(two_j, s)) < 1e-14);
      }
    }
  }
}

TEST_CASE("excited family: nonnegative husimi values and the central-node shape") {
  // The exact excited state is a density operator, so its s=-1 values stay
  // nonnegative.
  const auto qe = states::excited_coherent(12, -1.0, 0.9, 1.2, states::StateMethod::exact);
  CHECK(grid_min(qe.body, 100, 100) >= -1e-10);

  // At zero tilt the s=0 function dips below zero at the center and carries a
  // positive ring around it.
  const auto w = states::excited_coherent(12, 0.0, 0.0, 0.0, states::StateMethod::exact);
  CHECK(expansion::evaluate(w.body, 1e-9, 0.0).real() < -1.0);
  double ring_max = -1e300, ring_theta = 0.0;
  for (int i = 1; i < 200; ++i) {
    const double th = i * std::numbers::pi / 200;
    const double v = expansion::evaluate(w.body, th, 0.0).real();
    if (v > ring_max) {
      ring_max = v;
      ring_theta = th;
    }
  }
  CHECK(ring_max > 0.5);
  CHECK(ring_theta > 0.2);
  CHECK(ring_theta < 1.0);
}

TEST_CASE("excited family: first-order constructions track the exact state") {
  const int two_j = 16;
  const double th0 = 2.4 / std::sqrt(double(two_j));
  const auto exact = states::excited_coherent(two_j, 0.0, th0, 0.3, states::StateMethod::exact);
  for (auto method : {states::StateMethod::approx_eth, states::StateMethod::approx_planar}) {
    const auto approx_state = states::excited_coherent(two_j, 0.0, th0, 0.3, method);
    // Both approximations share the pinned identity share.
    CHECK(std::abs(approx_state.body.coeff(0, 0) - states::unit_trace_c00(two_j, 0.0)) < 1e-14);
    const SpinWeightedExpansion diff = expansion::linear_combine(
        {{Complex(1.0, 0.0), &exact.body}, {Complex(-1.0, 0.0), &approx_state.body}});
    const double err = expansion::l2_norm(diff, tensorops::radius(two_j));
    CHECK(err < 0.1);
    CHECK(err > 1e-3);  // a genuine first-order method, not the exact route
  }
}

TEST_CASE("excited family: both first-order methods lose one power of J") {
  const std::vector<int> sweep{3, 8, 12, 16, 20, 24};

  auto eth = states::excited_error_sweep(states::StateMethod::approx_eth, 0.0, sweep);
  REQUIRE(eth.fitted);
  CHECK(eth.slope == Approx(-0.9231).margin(0.02));
  CHECK(eth.slope > -1.3);
  CHECK(eth.slope < -0.7);
  CHECK(eth.error.front() == Approx(0.268263).epsilon(1e-4));
  CHECK(eth.error.back() == Approx(0.0398612).epsilon(1e-4));

  auto planar = states::excited_error_sweep(states::StateMethod::approx_planar, 0.0, sweep);
  REQUIRE(planar.fitted);
  CHECK(planar.slope == Approx(-0.8026).margin(0.02));
  CHECK(planar.slope > -1.3);
  CHECK(planar.slope < -0.7);
  CHECK(planar.error.front() == Approx(0.243388).epsilon(1e-4));
  CHECK(planar.error.back() == Approx(0.0466920).epsilon(1e-4));

  for (std::size_t i = 1; i < sweep.size(); ++i) {
    CHECK(eth.error[i] < eth.error[i - 1]);
    CHECK(planar.error[i] < planar.error[i - 1]);
  }

  CHECK_THROWS_AS(states::excited_error_sweep(states::StateMethod::exact, 0.0, sweep),
                  std::invalid_argument);
}

TEST_CASE("dicke and projector symbols: matrices, symmetry, validation") {
  // m = J reduces to the spin-up symbol.
  CHECK(body_diff(states::dicke_phase(5, 0.3, HalfInt(5, 2)).body,
                  states::spin_up_phase(5, 0.3).body) < 1e-15);

  // conj-flip: conjugating the symbol swaps the projector's indices.
  for (double s : {-0.5, 0.25}) {
    for (int two_m1 : {-3, 1}) {
      for (int two_m2 : {-1, 3}) {
        const auto a =
            states::projector_phase(3, s, HalfInt::from_twice(two_m1), HalfInt::from_twice(two_m2));
        const auto b =
            states::projector_phase(3, s, HalfInt::from_twice(two_m2), HalfInt::from_twice(two_m1));
        CHECK(body_diff(expansion::conjugate(a.body), b.body) < 1e-15);
      }
    }
  }

  // Dicke states are density operators: s=-1 values stay nonnegative.
  for (int two_m : {-4, 0, 2})
    CHECK(grid_min(states::dicke_phase(4, -1.0, HalfInt::from_twice(two_m)).body, 60, 60) >=
          -1e-10);

  CHECK_THROWS_AS(states::dicke_phase(4, 0.0, HalfInt(3)), std::invalid_argument);
  CHECK_THROWS_AS(states::dicke_phase(4, 0.0, HalfInt(1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(states::projector_phase(4, 0.0, HalfInt(1), HalfInt(5)), std::invalid_argument);
}

TEST_CASE("ladder constructions land on the dicke and projector symbols") {
  for (int two_j : {1, 2, 3, 4}) {
    for (double s : {-0.5, 0.0, 1.0}) {
      for (int two_m = -two_j; two_m <= two_j; two_m += 2) {
        const auto img = states::dicke_ladder(two_j, s, HalfInt::from_twice(two_m));
        const auto target = states::dicke_phase(two_j, s, HalfInt::from_twice(two_m));
        CHECK(body_diff(img.state.body, target.body) < 1e-10);
      }
    }
  }

  // m = J means no ladder steps; the image is the spin-up symbol unscaled.
  const auto top = states::dicke_ladder(3, 0.2, HalfInt(3, 2));
  CHECK(std::abs(top.scale - Complex(1.0, 0.0)) < 1e-14);

  // Off-diagonal targets are traceless, so the match is a least-squares fit;
  // its residual vanishes because the ladder image is exactly proportional.
  for (int two_j : {1, 2, 3, 4}) {
    for (double s : {-0.5, 1.0}) {
      for (int two_m1 = -two_j; two_m1 <= two_j; two_m1 += 2) {
        for (int two_m2 = -two_j; two_m2 <= two_j; two_m2 += 2) {
          const auto img = states::projector_ladder(two_j, s, HalfInt::from_twice(two_m1),
                                                    HalfInt::from_twice(two_m2));
          const auto target = states::projector_phase(two_j, s, HalfInt::from_twice(two_m1),
                                                      HalfInt::from_twice(two_m2));
          const SpinWeightedExpansion diff = expansion::linear_combine(
              {{Complex(1.0, 0.0), &img.state.body}, {Complex(-1.0, 0.0), &target.body}});
          CHECK(expansion::l2_norm(diff, 1.0) /
                    expansion::l2_norm(target.body, 1.0) <
                1e-8);
        }
      }
    }
  }
}

TEST_CASE("state specs dispatch to the constructors and validate the method") {
  states::StateSpec spec;
  spec.two_j = 4;
  spec.s = -0.5;

  spec.kind = states::StateKind::spin_up;
  CHECK(body_diff(states::build_state(spec).body, states::spin_up_phase(4, -0.5).body) == 0.0);

  spec.kind = states::StateKind::coherent;
  spec.theta0 = 1.1;
  spec.phi0 = 2.0;
  CHECK(body_diff(states::build_state(spec).body,
                  states::coherent_phase(4, -0.5, 1.1, 2.0).body) == 0.0);

  spec.kind = states::StateKind::excited_coherent;
  spec.method = states::StateMethod::approx_eth;
  CHECK(body_diff(states::build_state(spec).body,
                  states::excited_coherent(4, -0.5, 1.1, 2.0, states::StateMethod::approx_eth)
                      .body) == 0.0);
  spec.method = states::StateMethod::exact;

  spec.kind = states::StateKind::dicke;
  spec.two_m = -2;
  CHECK(body_diff(states::build_state(spec).body,
                  states::dicke_phase(4, -0.5, HalfInt(-1)).body) == 0.0);

  spec.kind = states::StateKind::projector;
  spec.two_m1 = 2;
  spec.two_m2 = -4;
  CHECK(body_diff(states::build_state(spec).body,
                  states::projector_phase(4, -0.5, HalfInt(1), HalfInt(-2)).body) == 0.0);

  // Approximation methods only make sense for the excited family.
  for (auto kind : {states::StateKind::spin_up, states::StateKind::coherent,
                    states::StateKind::dicke, states::StateKind::projector}) {
    states::StateSpec bad;
    bad.kind = kind;
    bad.two_j = 2;
    bad.method = states::StateMethod::approx_planar;
    CHECK_THROWS_AS(states::build_state(bad), std::invalid_argument);
  }
}

TEST_CASE("sphere rule: quadrature nodes and band-limited round trips") {
  // One node: the midpoint rule on [-1, 1].
  const auto one = grid::gauss_legendre(1);
  CHECK(one.x[0] == Approx(0.0).margin(1e-15));
  CHECK(one.w[0] == Approx(2.0).epsilon(1e-15));

  const auto g7 = grid::gauss_legendre(7);
  double wsum = 0.0;
  for (int i = 0; i < 7; ++i) {
    wsum += g7.w[i];
    CHECK(g7.x[i] == Approx(-g7.x[6 - i]).margin(1e-14));
  }
  CHECK(wsum == Approx(2.0).epsilon(1e-14));

  // Exact for polynomials of degree 2n-1: x^8 and x^9 at n=5.
  const auto g5 = grid::gauss_legendre(5);
  double even = 0.0, odd = 0.0;
  for (int i = 0; i < 5; ++i) {
    even += g5.w[i] * std::pow(g5.x[i], 8);
    odd += g5.w[i] * std::pow(g5.x[i], 9);
  }
  CHECK(even == Approx(2.0 / 9.0).epsilon(1e-13));
  CHECK(std::abs(odd) < 1e-15);

  // Projection inverts pointwise evaluation for band-limited functions of
  // any stored weight.
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto rule = grid::sphere_rule(24, 18);
  for (int weight : {0, 1, -2}) {
    SpinWeightedExpansion f(weight, 6);
    for (int j = std::abs(weight); j <= 6; ++j)
      for (int m = -j; m <= j; ++m) f.set_coeff(j, m, Complex(u(rng), u(rng)));
    const auto back = grid::project(
        [&](double th, double ph) { return expansion::evaluate(f, th, ph); }, weight, 6, rule);
    CHECK(body_diff(back, f) < 1e-13);
  }

  CHECK_THROWS_AS(grid::sphere_rule(0, 8), std::invalid_argument);
  CHECK_THROWS_AS(grid::project([](double, double) { return Complex(0, 0); }, 2, 1,
                                grid::sphere_rule(8, 8)),
                  std::invalid_argument);
  CHECK_THROWS_AS(grid::project([](double, double) { return Complex(0, 0); }, 0, 6,
                                grid::sphere_rule(8, 8)),
                  std::invalid_argument);
}
