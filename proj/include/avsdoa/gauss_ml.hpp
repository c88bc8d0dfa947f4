#pragma once

// Gaussian likelihood of the AVS covariance model: parameter packing, model
// gradients, Fisher information, and Fisher-scoring refinement of the
// KLD-optimal fit.

#include <vector>

#include "avsdoa/types.hpp"

namespace avsdoa {

/// Index map of phi = [vec Re A; vec Im A without row 0; theta; sigma^2].
struct ParamLayout {
  int sensors = 0;
  int sources = 0;

  Eigen::Index size() const { return 2 * Eigen::Index{sensors} * sources + 1; }
  Eigen::Index re(int m, int d) const { return Eigen::Index{d} * sensors + m; }
  /// Imaginary part of A(m, d); m >= 1.
  Eigen::Index im(int m, int d) const {
    return Eigen::Index{sensors} * sources + Eigen::Index{d} * (sensors - 1) + (m - 1);
  }
  Eigen::Index theta(int d) const { return 2 * Eigen::Index{sensors} * sources - sources + d; }
  Eigen::Index noise() const { return size() - 1; }
};

struct ParamVector {
  ParamLayout layout;
  RVector phi;
};

struct ModelParams {
  CMatrix a;
  RVector theta;
  double noise_variance = 0.0;
};

/// Row 0 of A must be real and non-negative; sigma^2 must be non-negative.
ParamVector pack(const CMatrix& a, const RVector& theta, double noise_variance);
ModelParams unpack(const ParamVector& p);

/// Khatri-Rao manifold A-bar of the packed parameters, 3M x D.
CMatrix manifold_of(const ParamVector& p);

/// R_y(phi) = A-bar A-bar^H + sigma^2 I.
CMatrix model_covariance(const ParamVector& p);

/// dR_y/dphi_i (0-based i).
CMatrix cov_gradient(const ParamVector& p, Eigen::Index i);

/// R_y^{-1} by the Woodbury identity with inner matrix (sigma^2 I_D + A-bar^H A-bar).
CMatrix cov_inverse(const ParamVector& p);

struct FisherInfo {
  RMatrix j;
  double samples = 0.0;
};

/// J_ij = T Tr(R^{-1} dR_i R^{-1} dR_j), evaluated through the rank-2 structure
/// of each gradient.
FisherInfo fim(const ParamVector& p, double samples);

/// Same quantity from the dense gradients; O(K^2 M^3).
FisherInfo fim_dense(const ParamVector& p, double samples);

struct CrlbResult {
  RMatrix bound;
  bool pseudo_inverse = false;  ///< condition number of J exceeded 1e12
  double condition = 0.0;
};

CrlbResult crlb(const ParamVector& p, double samples);

/// -T (log det R_y + Tr(R_hat R_y^{-1})).
double log_likelihood(const ParamVector& p, const CMatrix& r_hat, double samples);

/// log det(R_y)/det(R_hat) + Tr(R_hat R_y^{-1}) - n.
double kld(const ParamVector& p, const CMatrix& r_hat);
double kld(const CMatrix& r_model, const CMatrix& r_hat);

/// dL/dphi.
RVector score(const ParamVector& p, const CMatrix& r_hat, double samples);

struct FsaOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-9;
  int max_halvings = 20;
  double noise_floor = 1e-12;
  /// A step rejected after every halving still counts as converged when its
  /// full length is below this (relative to |phi|).
  double stall_tolerance = 1e-6;
};

struct FsaResult {
  ParamVector phi;  ///< theta ascending, A columns permuted to match
  std::vector<double> loglik_history;
  int iterations = 0;
  bool converged = false;
  bool used_pseudo_inverse = false;
  bool step_rejected = false;
};

/// Damped Fisher scoring phi <- phi + mu J^{-1} dL/dphi from phi0.
FsaResult fsa_run(const ParamVector& phi0, const CMatrix& r_hat, double samples, const FsaOptions& opts = {});

}  // namespace avsdoa
