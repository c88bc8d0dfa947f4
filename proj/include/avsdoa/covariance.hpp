#pragma once

// Second-order statistics of AVS array measurements.

#include <utility>

#include "avsdoa/types.hpp"

namespace avsdoa {

/// Sensor channel of an AVS element; the covariance is partitioned into
/// 3 x 3 blocks of M x M slabs in this order.
enum class Channel : int { Pressure = 0, VelocityX = 1, VelocityY = 2 };

/// Empirical covariance, its noise-variance estimate, and the denoised
/// matrix with its 3 x 3 x M x M tensor view.
class CovarianceStats {
 public:
  CovarianceStats() = default;
  CovarianceStats(CMatrix ry, double noise_variance);

  const CMatrix& ry() const { return ry_; }
  const CMatrix& rx() const { return rx_; }
  double noise_variance() const { return noise_variance_; }
  int sensors() const { return sensors_; }

  /// (i, j) slab of the denoised covariance, i, j in {0, 1, 2}.
  CMatrix slab(int i, int j) const;
  CMatrix slab(Channel i, Channel j) const { return slab(static_cast<int>(i), static_cast<int>(j)); }
  auto slab_view(int i, int j) const { return rx_.block(i * sensors_, j * sensors_, sensors_, sensors_); }

 private:
  CMatrix ry_;
  CMatrix rx_;
  double noise_variance_ = 0.0;
  int sensors_ = 0;
};

/// (1/T) sum_t y[t] y[t]^H, Hermitian by construction.
CMatrix empirical_covariance(const CMatrix& y);

/// A A^H + sigma^2 I for a unit-power source model.
CMatrix model_covariance(const CMatrix& manifold, double noise_variance);

/// Mean of the 3M - D smallest eigenvalues.
double estimate_noise_variance(const CMatrix& ry, int sources);

/// R_x = R_y - sigma^2 I with every (i, j) slab pair Hermitianized.
CovarianceStats denoise(const CMatrix& ry, double noise_variance);

/// Empirical covariance, noise estimate and denoising in one call.
CovarianceStats compute_stats(const CMatrix& y, int sources);

/// Gaussian-case covariance and pseudo-covariance of the covariance-estimate
/// errors: (E[e_ij e_kl^*], E[e_ij e_kl]) with e = R_hat - R.
std::pair<cplx, cplx> gaussian_error_cov(const CMatrix& ry, double samples, int i, int j, int k, int l);

/// Max-abs deviation from Hermitian symmetry.
double hermitian_defect(const CMatrix& m);

}  // namespace avsdoa
