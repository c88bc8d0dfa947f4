#pragma once

#include <vector>

#include "avsdoa/types.hpp"

namespace avsdoa {

/// Real roots of sum_k coeffs[k] x^k (coeffs[0] is the constant term).
///
/// Leading coefficients below rel_degenerate * max|coeff| are dropped before
/// forming the companion matrix, so a vanishing quartic term deflates to a
/// cubic (or lower). Eigenvalues with |Im| < imag_tol * (1 + |Re|) are kept.
std::vector<double> real_polynomial_roots(std::vector<double> coeffs, double rel_degenerate = 1e-12,
                                          double imag_tol = 1e-8);

}  // namespace avsdoa
