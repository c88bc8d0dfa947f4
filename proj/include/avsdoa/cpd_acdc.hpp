#pragma once

// CPD-based blind DOA estimation: the parametric least-squares fit of the
// covariance tensor by alternating column updates (AC) and a DOA-parametric
// diagonal-centers phase (DC), initialized by exact joint diagonalization.

#include <array>
#include <vector>

#include "avsdoa/covariance.hpp"

namespace avsdoa {

struct CpdState {
  CMatrix a;      ///< M x D core steering estimate
  RVector theta;  ///< D DOA estimates, radians
  double cost = 0.0;
  int iterations = 0;
  std::vector<double> cost_history;
  bool converged = false;
};

/// Weighted sum over the six distinct slab pairs (weight 2 off the diagonal)
/// of ||A diag(F_ij(theta)) A^H - slab(i,j)||_F^2. Equal to the full 3M x 3M
/// Frobenius misfit when the slabs are Hermitianized.
double cls_cost(const RVector& theta, const CMatrix& a, const CovarianceStats& stats);

/// Coefficients of dC/dtheta_d = alpha cos - beta sin + gamma cos2 - delta sin2.
struct DcConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;

  double derivative(double theta) const;
  double second_derivative(double theta) const;
  double magnitude() const;
};

DcConstants dc_constants(int d, const RVector& theta, const CMatrix& a, const CovarianceStats& stats);

/// Coefficients (constant term first) of the quartic in tau = tan(theta/2)
/// obtained by multiplying the stationarity equation by (1 + tau^2)^2.
std::array<double, 5> dc_quartic(const DcConstants& k);

/// Stationary points of the single-DOA cost, in [-pi, pi). theta = -pi is
/// included when it is itself a stationary point (vanishing quartic term).
/// Empty when all constants vanish.
std::vector<double> dc_stationary_angles(const DcConstants& k);

/// Residual bound every returned stationary angle satisfies.
double dc_residual_bound(const DcConstants& k);

/// N_s sweeps of the modified DC phase: each theta_d moves to the global
/// minimizer of the cost among its stationary points and its current value.
CpdState modified_dc_sweep(CpdState state, const CovarianceStats& stats, int sweeps = 1);

/// Exact minimizer of the cost w.r.t. column d of A, all else fixed.
CpdState ac_column_update(CpdState state, const CovarianceStats& stats, int d);

/// Half-vectorization of a Hermitian matrix that preserves the trace inner
/// product: (diag; sqrt2 Re(upper); sqrt2 Im(upper)).
RVector svec(const CMatrix& q);
CMatrix unsvec(const RVector& v);

/// Closed-form initial estimate from exact joint diagonalization of the
/// two dominant svec-space directions of the slab set.
CpdState ejd_init(const CovarianceStats& stats, int sources);

/// atan2(c3, c2) wrapped to [-pi, pi).
double extract_doa(double c2, double c3);

/// First-row entries real and non-negative, theta wrapped and ascending,
/// columns of A permuted with theta.
CpdState normalize(CpdState state);

struct AcdcSchedule {
  int ac_sweeps = 1;
  int dc_sweeps = 1;
  int max_interleaves = 500;
  double relative_tolerance = 1e-10;
};

/// Alternates AC sweeps and modified DC phases until the relative cost
/// decrease over an interleave drops below the tolerance.
CpdState acdc_run(const CovarianceStats& stats, CpdState init, const AcdcSchedule& schedule = {});

}  // namespace avsdoa
