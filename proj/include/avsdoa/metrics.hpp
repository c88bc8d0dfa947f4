#pragma once

// Scoring of estimates against the truth.

#include <string>
#include <vector>

#include "avsdoa/types.hpp"

namespace avsdoa {

/// est - truth wrapped into (-pi, pi].
double circular_error(double est, double truth);

/// |circular_error(a, b)|, symmetric, in [0, pi].
double circular_distance(double a, double b);

struct Alignment {
  RVector theta;
  CMatrix a;
  std::vector<int> permutation;  ///< theta(d) = theta_hat(permutation[d])
};

/// Exhaustive search over the D! orderings of theta_hat for the one closest
/// to theta_true in summed squared circular distance. D <= 6. A-hat may be
/// empty when only angles are scored.
Alignment align(const RVector& theta_hat, const RVector& theta_true, const CMatrix& a_hat = CMatrix());

/// One Monte-Carlo trial of one estimator.
struct TrialRecord {
  std::string scenario;
  std::string estimator;
  double samples = 0.0;
  double snr_db = 0.0;
  RVector errors;  ///< signed circular errors per DOA, radians
  RMatrix isr;     ///< D x D, zero diagonal; empty when not computed
  bool failed = false;
  double seconds = 0.0;
};

struct RmseSummary {
  double rmse_rad = 0.0;
  double rmse_deg = 0.0;
  /// Standard deviation of the mean squared error (rad^2).
  double mse_std = 0.0;
  int count = 0;

  /// First-order standard deviation of the RMSE itself (rad).
  double rmse_std() const { return rmse_rad > 0.0 ? mse_std / (2.0 * rmse_rad) : 0.0; }
};

RmseSummary rmse(const std::vector<double>& errors);

/// RMSE of DOA d over the non-failed records.
RmseSummary rmse(const std::vector<TrialRecord>& records, int d);

/// ISR_ij = |(A_hat^+ A)_ij|^2 / |(A_hat^+ A)_ii|^2 off the diagonal, zero on it.
RMatrix isr(const CMatrix& a_hat, const CMatrix& a_true);

}  // namespace avsdoa
