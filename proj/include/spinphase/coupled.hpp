#pragma once

// Multi-site extension: phase-space functions over a tensor product of
// spins, the trace transform against products of single-site tensor
// operators, and a star product that applies the single-site bilinear
// kernel independently in every site's index pair. Storage is a sparse map
// over multi-index tuples; the verified envelope is desk-scale (up to three
// sites, product dimension 64).

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spinphase/approx.hpp"
#include "spinphase/evolution.hpp"
#include "spinphase/starprod.hpp"
#include "spinphase/tensorops.hpp"

namespace spinphase::coupled {

using expansion::Complex;

// One (j_k, m_k) pair per site, leftmost site most significant in the
// Kronecker layout.
using MultiIndex = std::vector<std::pair<int, int>>;

struct CoupledPhaseFunction {
  std::vector<int> sites;  // two_j per site
  double s = 0.0;
  std::map<MultiIndex, Complex> coeffs;
};

inline int hilbert_dim(const std::vector<int>& sites) {
  if (sites.empty()) throw std::invalid_argument("coupled: no sites");
  long dim = 1;
  for (int two_j : sites) {
    if (two_j < 1) throw std::invalid_argument("coupled: each site needs two_j >= 1");
    dim *= two_j + 1;
    if (dim > (1 << 20)) throw std::invalid_argument("coupled: product dimension too large");
  }
  return int(dim);
}

inline void validate(const CoupledPhaseFunction& f) {
  hilbert_dim(f.sites);
  if (f.s < -1.0 || f.s > 1.0) throw std::invalid_argument("coupled: s outside [-1, 1]");
  for (const auto& [idx, c] : f.coeffs) {
    if (idx.size() != f.sites.size())
      throw std::invalid_argument("coupled: multi-index length does not match the site list");
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto [j, m] = idx[k];
      if (j < 0 || j > f.sites[k] || std::abs(m) > j)
        throw std::invalid_argument("coupled: coefficient outside a site's admissible (j,m)");
    }
    (void)c;
  }
}

// Coefficient at (j_1 m_1, ..., j_N m_N) is
// Tr[A (T^dag_{j_1 m_1} x ... x T^dag_{j_N m_N})] prod_k gamma_{j_k}^{-s}/R_k.
inline CoupledPhaseFunction coupled_op_to_phase(const Eigen::MatrixXcd& a,
                                                const std::vector<int>& sites, double s) {
  const int dim = hilbert_dim(sites);
  if (a.rows() != dim || a.cols() != dim)
    throw std::invalid_argument("coupled_op_to_phase: matrix dimension does not match the sites");
  if (s < -1.0 || s > 1.0) throw std::invalid_argument("coupled_op_to_phase: s outside [-1, 1]");

  const std::size_t n = sites.size();
  std::vector<const tensorops::detail::CouplingCache*> caches(n);
  std::vector<double> inv_r(n);
  for (std::size_t k = 0; k < n; ++k) {
    caches[k] = &tensorops::detail::coupling_cache(sites[k]);
    inv_r[k] = 1.0 / tensorops::radius(sites[k]);
  }

  CoupledPhaseFunction out{sites, s, {}};
  MultiIndex idx(n, {0, 0});
  std::vector<int> r2(n, 0);

  // Odometer over all per-site (j, m) pairs.
  auto advance_jm = [&]() -> bool {
    for (std::size_t k = n; k-- > 0;) {
      auto& [j, m] = idx[k];
      if (m < j) {
        ++m;
        return true;
      }
      if (j < sites[k]) {
        ++j;
        m = -j;
        return true;
      }
      j = 0;
      m = 0;
    }
    return false;
  };

  do {
    double weight = 1.0;
    for (std::size_t k = 0; k < n; ++k)
      weight *= tensorops::gamma_pow(sites[k], idx[k].first, -s) * inv_r[k] *
                std::sqrt(double(2 * idx[k].first + 1) / double(sites[k] + 1));

    // Sum A over the banded rows r1_k = r2_k - m_k of the product operator.
    Complex tr(0.0, 0.0);
    std::fill(r2.begin(), r2.end(), 0);
    bool more = true;
    while (more) {
      long flat1 = 0, flat2 = 0;
      bool in_band = true;
      for (std::size_t k = 0; k < n; ++k) {
        const int r1 = r2[k] - idx[k].second;
        if (r1 < 0 || r1 > sites[k]) {
          in_band = false;
          break;
        }
        flat1 = flat1 * (sites[k] + 1) + r1;
        flat2 = flat2 * (sites[k] + 1) + r2[k];
      }
      if (in_band) {
        double cg = 1.0;
        for (std::size_t k = 0; k < n; ++k)
          cg *= caches[k]->cg(idx[k].first, idx[k].second, r2[k]);
        tr += a(flat1, flat2) * cg;
      }
      more = false;
      for (std::size_t k = n; k-- > 0;) {
        if (r2[k] < sites[k]) {
          ++r2[k];
          std::fill(r2.begin() + long(k) + 1, r2.end(), 0);
          more = true;
          break;
        }
      }
    }
    if (tr != Complex(0.0, 0.0)) out.coeffs[idx] = tr * weight;
  } while (advance_jm());
  return out;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Inverse map: A = sum coeffs prod_k R_k gamma_{j_k}^{s} T_{j_k m_k}.
inline Eigen::MatrixXcd coupled_phase_to_op(const CoupledPhaseFunction& f) {
  validate(f);
  const int dim = hilbert_dim(f.sites);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& [idx, c] : f.coeffs) {
    Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(1, 1);
    Complex w = c;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      term = kron(term, tensorops::tensor_op(f.sites[k], idx[k].first, idx[k].second).mat());
      w *= tensorops::radius(f.sites[k]) *
           tensorops::gamma_pow(f.sites[k], idx[k].first, f.s);
    }
    out += w * term;
  }
  return out;
}

namespace detail {

inline int basis_index(int j, int m) { return j * j + j + m; }

// Star products of every basis pair of one site: the structure constants the
// multi-site contraction multiplies together.
struct SiteKernel {
  int two_j = 0;
  std::vector<std::vector<std::pair<std::pair<int, int>, Complex>>> rows;
};

inline SiteKernel build_site_kernel(int two_j, double s, const evolution::RhsMode& mode) {
  const int nb = (two_j + 1) * (two_j + 1);
  SiteKernel kernel;
  kernel.two_j = two_j;
  kernel.rows.resize(std::size_t(nb) * nb);
  for (int ja = 0; ja <= two_j; ++ja)
    for (int ma = -ja; ma <= ja; ++ma) {
      const tensorops::PhaseSpaceFunction fa{two_j, s,
                                             expansion::SpinWeightedExpansion::basis(0, ja, ma)};
      for (int jb = 0; jb <= two_j; ++jb)
        for (int mb = -jb; mb <= jb; ++mb) {
          const tensorops::PhaseSpaceFunction fb{
              two_j, s, expansion::SpinWeightedExpansion::basis(0, jb, mb)};
          const tensorops::PhaseSpaceFunction prod =
              mode.is_exact ? starprod::star_general(fa, fb, starprod::StarRoute::via_q)
                            : approx::star_approx_general(fa, fb, mode.n);
          auto& row =
              kernel.rows[std::size_t(basis_index(ja, ma)) * nb + basis_index(jb, mb)];
          for (const auto& [jm, c] : prod.body.coeffs()) row.emplace_back(jm, c);
        }
    }
  return kernel;
}

inline std::vector<SiteKernel> site_kernels(const std::vector<int>& sites, double s,
                                            const evolution::RhsMode& mode) {
  std::vector<SiteKernel> kernels(sites.size());
  std::map<int, std::size_t> seen;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto it = seen.find(sites[k]);
    if (it != seen.end()) {
      kernels[k] = kernels[it->second];
      continue;
    }
    kernels[k] = build_site_kernel(sites[k], s, mode);
    seen[sites[k]] = k;
  }
  return kernels;
}

inline void check_operands(const CoupledPhaseFunction& f, const CoupledPhaseFunction& g) {
  validate(f);
  validate(g);
  if (f.sites != g.sites)
    throw std::invalid_argument("coupled star: operands live on different site lists");
  if (std::abs(f.s - g.s) > starprod::detail::kSTagSlack)
    throw std::invalid_argument("coupled star: operands carry different s parameters");
}

inline CoupledPhaseFunction contract(const CoupledPhaseFunction& f, const CoupledPhaseFunction& g,
                                     const std::vector<SiteKernel>& kernels) {
  const std::size_t n = f.sites.size();
  CoupledPhaseFunction out{f.sites, f.s, {}};
  MultiIndex scratch(n, {0, 0});

  for (const auto& [ia, ca] : f.coeffs) {
    for (const auto& [ib, cb] : g.coeffs) {
      // Rows of per-site structure constants for this operand pair.
      bool dead = false;
      std::vector<const std::vector<std::pair<std::pair<int, int>, Complex>>*> rows(n);
      for (std::size_t k = 0; k < n; ++k) {
        const int nb = (f.sites[k] + 1) * (f.sites[k] + 1);
        rows[k] = &kernels[k].rows[std::size_t(basis_index(ia[k].first, ia[k].second)) * nb +
                                   basis_index(ib[k].first, ib[k].second)];
        if (rows[k]->empty()) {
          dead = true;
          break;
        }
      }
      if (dead) continue;

      const Complex base = ca * cb;
      // Odometer over one entry from each site's row.
      std::vector<std::size_t> pick(n, 0);
      bool more = true;
      while (more) {
        Complex v = base;
        for (std::size_t k = 0; k < n; ++k) {
          const auto& [jm, c] = (*rows[k])[pick[k]];
          scratch[k] = jm;
          v *= c;
        }
        out.coeffs[scratch] += v;
        more = false;
        for (std::size_t k = n; k-- > 0;) {
          if (pick[k] + 1 < rows[k]->size()) {
            ++pick[k];
            std::fill(pick.begin() + long(k) + 1, pick.end(), 0);
            more = true;
            break;
          }
        }
      }
    }
  }

  for (auto it = out.coeffs.begin(); it != out.coeffs.end();) {
    if (std::abs(it->second) < expansion::kPruneThreshold)
      it = out.coeffs.erase(it);
    else
      ++it;
  }
  return out;
}

}  // namespace detail

// Site-wise star product: the single-site bilinear kernel acts independently
// in every site's index pair, so images of operator products come out as
// products of images.
inline CoupledPhaseFunction coupled_star(const CoupledPhaseFunction& f,
                                         const CoupledPhaseFunction& g) {
  detail::check_operands(f, g);
  const auto kernels = detail::site_kernels(f.sites, f.s, evolution::RhsMode::exact());
  return detail::contract(f, g, kernels);
}

// -i (H star rho - rho star H); order-n mode truncates each site's kernel at
// total differential order n, whose leading antisymmetric part is the sum of
// per-site spherical Poisson brackets.
inline CoupledPhaseFunction coupled_moyal_rhs(const CoupledPhaseFunction& h,
                                              const CoupledPhaseFunction& rho,
                                              evolution::RhsMode mode = evolution::RhsMode::exact()) {
  detail::check_operands(h, rho);
  const auto kernels = detail::site_kernels(h.sites, h.s, mode);
  const CoupledPhaseFunction hr = detail::contract(h, rho, kernels);
  const CoupledPhaseFunction rh = detail::contract(rho, h, kernels);
  CoupledPhaseFunction out{h.sites, h.s, {}};
  const Complex mi(0.0, -1.0), pi(0.0, 1.0);
  for (const auto& [idx, c] : hr.coeffs) out.coeffs[idx] += mi * c;
  for (const auto& [idx, c] : rh.coeffs) out.coeffs[idx] += pi * c;
  for (auto it = out.coeffs.begin(); it != out.coeffs.end();) {
    if (std::abs(it->second) < expansion::kPruneThreshold)
      it = out.coeffs.erase(it);
    else
      ++it;
  }
  return out;
}

}  // namespace spinphase::coupled
