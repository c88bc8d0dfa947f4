#pragma once

#include <random>

#include "avsdoa/covariance.hpp"
#include "avsdoa/cpd_acdc.hpp"
#include "avsdoa/sim.hpp"

namespace testutil {

using namespace avsdoa;

inline CMatrix random_complex(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

inline CMatrix random_hermitian(Eigen::Index n, Rng& rng) {
  const CMatrix x = random_complex(n, n, rng);
  return 0.5 * (x + x.adjoint());
}

inline CMatrix random_pd(Eigen::Index n, Rng& rng, double floor = 0.1) {
  const CMatrix x = random_complex(n, n + 2, rng);
  CMatrix r = x * x.adjoint() / static_cast<double>(n + 2);
  r.diagonal().array() += floor;
  return r;
}

/// Random steering matrix with real, positive first row.
inline CMatrix random_steering(int m, int d, Rng& rng) {
  CMatrix a = random_complex(m, d, rng);
  for (int k = 0; k < d; ++k) {
    a.col(k) *= std::conj(a(0, k)) / std::abs(a(0, k));
    a(0, k) = cplx(a(0, k).real(), 0.0);
  }
  return a;
}

/// Ascending angles in [-pi, pi) with pairwise circular gap >= min_gap.
inline RVector random_doas(int d, Rng& rng, double min_gap = 0.3) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (;;) {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (auto& x : v) x = u(rng);
    std::sort(v.begin(), v.end());
    bool ok = true;
    for (int i = 0; i < d && ok; ++i)
      for (int j = i + 1; j < d && ok; ++j) {
        const double g = std::abs(wrap_angle(v[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)]));
        if (g < min_gap) ok = false;
      }
    if (ok) return Eigen::Map<RVector>(v.data(), d);
  }
}

/// Exact R_y for unit-power sources.
inline CMatrix exact_ry(const CMatrix& a, const RVector& theta, double s2) {
  return model_covariance(avs_manifold(a, theta).matrix, s2);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace testutil
