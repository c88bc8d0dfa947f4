#include "avsdoa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace avsdoa {

double circular_error(double est, double truth) { return -wrap_angle(truth - est); }

double circular_distance(double a, double b) { return std::abs(circular_error(a, b)); }

Alignment align(const RVector& theta_hat, const RVector& theta_true, const CMatrix& a_hat) {
  const Eigen::Index dc = theta_true.size();
  if (theta_hat.size() != dc) throw InvalidInput("align: estimate and truth differ in length");
  if (dc > 6) throw InvalidInput("align: exhaustive search limited to D <= 6");
  if (a_hat.size() != 0 && a_hat.cols() != dc) throw InvalidInput("align: A-hat must have D columns");

  std::vector<int> perm(static_cast<std::size_t>(dc));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Eigen::Index d = 0; d < dc; ++d) {
      const double e = circular_distance(theta_hat(perm[static_cast<std::size_t>(d)]), theta_true(d));
      cost += e * e;
    }
    // strict comparison keeps the identity on ties
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Alignment out;
  out.permutation = best;
  out.theta.resize(dc);
  if (a_hat.size() != 0) out.a.resize(a_hat.rows(), dc);
  for (Eigen::Index d = 0; d < dc; ++d) {
    const int src = best[static_cast<std::size_t>(d)];
    out.theta(d) = theta_hat(src);
    if (a_hat.size() != 0) out.a.col(d) = a_hat.col(src);
  }
  return out;
}

RmseSummary rmse(const std::vector<double>& errors) {
  if (errors.empty()) throw InvalidInput("rmse: no records");
  const double n = static_cast<double>(errors.size());
  double mean_sq = 0.0;
  for (double e : errors) mean_sq += e * e;
  mean_sq /= n;
  double var = 0.0;
  for (double e : errors) var += (e * e - mean_sq) * (e * e - mean_sq);
  var = errors.size() > 1 ? var / (n - 1.0) : 0.0;

  RmseSummary s;
  s.rmse_rad = std::sqrt(mean_sq);
  s.rmse_deg = rad2deg(s.rmse_rad);
  s.mse_std = std::sqrt(var / n);
  s.count = static_cast<int>(errors.size());
  return s;
}

RmseSummary rmse(const std::vector<TrialRecord>& records, int d) {
  std::vector<double> errs;
  for (const auto& r : records) {
    if (r.failed) continue;
    if (d < 0 || d >= r.errors.size()) throw InvalidInput("rmse: DOA index out of range");
    errs.push_back(r.errors(d));
  }
  return rmse(errs);
}

RMatrix isr(const CMatrix& a_hat, const CMatrix& a_true) {
  if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols()) {
    throw InvalidInput("isr: A-hat and A must have equal shape");
  }
  const Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(a_hat);
  if (cod.rank() < a_hat.cols()) throw NumericalError("isr: A-hat is rank deficient");
  const RMatrix g = (cod.pseudoInverse() * a_true).cwiseAbs2();
  const Eigen::Index dc = g.rows();
  RMatrix out = RMatrix::Zero(dc, dc);
  for (Eigen::Index i = 0; i < dc; ++i) {
    if (!(g(i, i) > 0.0)) throw NumericalError("isr: zero gain on the diagonal");
    for (Eigen::Index j = 0; j < dc; ++j)
      if (i != j) out(i, j) = g(i, j) / g(i, i);
  }
  return out;
}

}  // namespace avsdoa
