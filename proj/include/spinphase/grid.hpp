#pragma once

// Spherical sampling grids and band-limited projection of pointwise-defined
// functions back onto spin-weighted expansions. The polar direction uses
// Gauss-Legendre nodes in theta itself: every integrand assembled here
// (harmonic products, and the flat-chart derivative terms whose 1/theta
// factors pair with numerators vanishing at the poles) is analytic in theta
// on the closed interval, so the rule converges exponentially and never
// places a node on the poles.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "spinphase/angular.hpp"
#include "spinphase/expansion.hpp"
#include "spinphase/halfint.hpp"

namespace spinphase::grid {

using expansion::Complex;
using expansion::SpinWeightedExpansion;

struct QuadratureRule {
  std::vector<double> x;  // ascending nodes in (-1, 1)
  std::vector<double> w;  // weights summing to 2
};

// Gauss-Legendre rule by Newton iteration on the Legendre recurrence.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  QuadratureRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.x[i] = -x;
    rule.x[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.w[i] = w;
    rule.w[n - 1 - i] = w;
  }
  return rule;
}

struct SphereRule {
  std::vector<double> thetas;    // Gauss-Legendre nodes mapped to (0, pi)
  std::vector<double> theta_w;   // node weight times sin(theta) and the map scale
  std::vector<double> phis;      // uniform nodes in [0, 2pi)
  double phi_step = 0.0;

  double weight(std::size_t theta_index) const { return theta_w[theta_index] * phi_step; }
};

inline SphereRule sphere_rule(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("sphere_rule: empty grid");
  const QuadratureRule gl = gauss_legendre(n_theta);
  SphereRule rule;
  rule.phi_step = 2.0 * std::numbers::pi / n_phi;
  rule.thetas.resize(n_theta);
  rule.theta_w.resize(n_theta);
  const double half_pi = 0.5 * std::numbers::pi;
  for (int i = 0; i < n_theta; ++i) {
    const double theta = half_pi * (gl.x[i] + 1.0);
    rule.thetas[i] = theta;
    rule.theta_w[i] = half_pi * gl.w[i] * std::sin(theta);
  }
  rule.phis.resize(n_phi);
  for (int k = 0; k < n_phi; ++k) rule.phis[k] = k * rule.phi_step;
  return rule;
}

// Projects a pointwise-defined function onto the orthonormal weight-`weight`
// harmonics up to `max_rank`. The phi pass is a plain discrete Fourier sum,
// so n_phi must stay above the combined azimuthal content of the integrand
// and the deepest projection column to avoid aliasing.
inline SpinWeightedExpansion project(const std::function<Complex(double, double)>& f, int weight,
                                     int max_rank, const SphereRule& rule) {
  if (max_rank < std::abs(weight))
    throw std::invalid_argument("project: band limit below the spin weight");
  if (int(rule.phis.size()) < 2 * max_rank + 2)
    throw std::invalid_argument("project: phi grid too coarse for the requested band limit");

  static const double inv_4pi = 1.0 / (4.0 * std::numbers::pi);
  const int n_phi = int(rule.phis.size());
  SpinWeightedExpansion out(weight, max_rank);
  std::vector<Complex> acc((max_rank + 1) * (max_rank + 1), Complex(0.0, 0.0));
  std::vector<Complex> row(n_phi);

  for (std::size_t i = 0; i < rule.thetas.size(); ++i) {
    const double theta = rule.thetas[i];
    const double w = rule.weight(i);
    for (int k = 0; k < n_phi; ++k) row[k] = f(theta, rule.phis[k]);

    for (int m = -max_rank; m <= max_rank; ++m) {
      Complex s_m(0.0, 0.0);
      for (int k = 0; k < n_phi; ++k) s_m += row[k] * std::polar(1.0, -m * rule.phis[k]);
      if (s_m == Complex(0.0, 0.0)) continue;

      // conj(Y^w_{jm}) = (-1)^m sqrt((2j+1)/4pi) e^{-im phi} d^j_{-m,w}(theta).
      const int l0 = std::max(std::abs(m), std::abs(weight));
      const auto run = angular::wigner_small_d_run(HalfInt(-m), HalfInt(weight), theta,
                                                   HalfInt(max_rank));
      const double sign = (m % 2 == 0) ? 1.0 : -1.0;
      for (int j = l0; j <= max_rank; ++j) {
        const double norm = sign * std::sqrt(double(2 * j + 1) * inv_4pi);
        acc[std::size_t(j) * (j + 1) + m] += w * s_m * norm * run[std::size_t(j - l0)];
      }
    }
  }
  for (int j = std::abs(weight); j <= max_rank; ++j)
    for (int m = -j; m <= j; ++m) {
      const Complex c = acc[std::size_t(j) * (j + 1) + m];
      if (c != Complex(0.0, 0.0)) out.set_coeff(j, m, c);
    }
  out.prune();
  return out;
}

}  // namespace spinphase::grid
