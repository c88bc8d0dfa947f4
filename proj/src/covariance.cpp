#include "avsdoa/covariance.hpp"

#include <limits>

#include <Eigen/Eigenvalues>

namespace avsdoa {

double hermitian_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

CMatrix empirical_covariance(const CMatrix& y) {
  if (y.cols() == 0) throw InvalidInput("empirical_covariance: empty batch");
  CMatrix r(y.rows(), y.rows());
  r.setZero();
  r.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0 / static_cast<double>(y.cols()));
  CMatrix full = r.selfadjointView<Eigen::Lower>();
  return full;
}

CMatrix model_covariance(const CMatrix& manifold, double noise_variance) {
  CMatrix r = manifold * manifold.adjoint();
  r.diagonal().array() += noise_variance;
  return 0.5 * (r + r.adjoint());
}

double estimate_noise_variance(const CMatrix& ry, int sources) {
  if (ry.rows() != ry.cols()) throw InvalidInput("estimate_noise_variance: matrix must be square");
  if (sources < 0 || sources >= ry.rows()) throw InvalidInput("estimate_noise_variance: need D < 3M");
  const double scale = std::max(1.0, ry.cwiseAbs().maxCoeff());
  if (hermitian_defect(ry) > 1e-8 * scale) throw InvalidInput("estimate_noise_variance: input not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(ry, Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();  // ascending
  const Eigen::Index n = ry.rows() - sources;
  return ev.head(n).mean();
}

CovarianceStats::CovarianceStats(CMatrix ry, double noise_variance)
    : ry_(std::move(ry)), noise_variance_(noise_variance) {
  if (ry_.rows() != ry_.cols() || ry_.rows() % 3 != 0) {
    throw InvalidInput("CovarianceStats: covariance must be 3M x 3M");
  }
  sensors_ = static_cast<int>(ry_.rows() / 3);
  const int m = sensors_;
  CMatrix rx = ry_;
  rx.diagonal().array() -= noise_variance_;
  rx_.resize(rx.rows(), rx.cols());
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const CMatrix sym = 0.5 * (rx.block(i * m, j * m, m, m) + rx.block(j * m, i * m, m, m).adjoint());
      rx_.block(i * m, j * m, m, m) = sym;
      rx_.block(j * m, i * m, m, m) = sym.adjoint();
    }
  }
}

CMatrix CovarianceStats::slab(int i, int j) const {
  if (i < 0 || i > 2 || j < 0 || j > 2) throw std::out_of_range("CovarianceStats::slab: index out of range");
  return slab_view(i, j);
}

CovarianceStats denoise(const CMatrix& ry, double noise_variance) { return CovarianceStats(ry, noise_variance); }

CovarianceStats compute_stats(const CMatrix& y, int sources) {
  CMatrix ry = empirical_covariance(y);
  const double s2 = estimate_noise_variance(ry, sources);
  return CovarianceStats(std::move(ry), s2);
}

std::pair<cplx, cplx> gaussian_error_cov(const CMatrix& ry, double samples, int i, int j, int k, int l) {
  if (!(samples > 0.0)) throw InvalidInput("gaussian_error_cov: T must be positive");
  const Eigen::Index n = ry.rows();
  for (int idx : {i, j, k, l}) {
    if (idx < 0 || idx >= n) throw std::out_of_range("gaussian_error_cov: index out of range");
  }
  const cplx cov = ry(i, k) * std::conj(ry(j, l)) / samples;
  const cplx pcov = ry(i, l) * std::conj(ry(j, k)) / samples;
  return {cov, pcov};
}

}  // namespace avsdoa
