#include "avsdoa/roots.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace avsdoa {

std::vector<double> real_polynomial_roots(std::vector<double> coeffs, double rel_degenerate, double imag_tol) {
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};
  while (!coeffs.empty() && std::abs(coeffs.back()) < rel_degenerate * scale) coeffs.pop_back();
  const int degree = static_cast<int>(coeffs.size()) - 1;
  if (degree < 1) return {};

  const double lead = coeffs.back();
  RMatrix companion = RMatrix::Zero(degree, degree);
  for (int k = 0; k < degree; ++k) companion(0, k) = -coeffs[degree - 1 - k] / lead;
  for (int k = 1; k < degree; ++k) companion(k, k - 1) = 1.0;

  Eigen::EigenSolver<RMatrix> es(companion, false);
  std::vector<double> roots;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const cplx z = es.eigenvalues()(k);
    if (std::abs(z.imag()) < imag_tol * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace avsdoa
