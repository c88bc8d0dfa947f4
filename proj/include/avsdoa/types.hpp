#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace avsdoa {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Seedable generator used by every stochastic routine in the library.
using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double theta) {
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  w -= kPi;
  if (w >= kPi) w -= 2.0 * kPi;
  return w;
}

/// Thrown when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a meaningful result
/// (singular systems, rank deficiency, non-definite covariance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Azimuth angles in radians, strictly ascending, each in [-pi, pi).
class DoaVector {
 public:
  DoaVector() = default;
  explicit DoaVector(RVector angles);
  static DoaVector from_degrees(const std::vector<double>& deg);

  const RVector& radians() const { return angles_; }
  Eigen::Index size() const { return angles_.size(); }
  double operator[](Eigen::Index d) const { return angles_(d); }

 private:
  RVector angles_;
};

inline DoaVector::DoaVector(RVector angles) : angles_(std::move(angles)) {
  for (Eigen::Index d = 0; d < angles_.size(); ++d) {
    if (!(angles_(d) >= -kPi && angles_(d) < kPi)) {
      throw InvalidInput("DoaVector: angle outside [-pi, pi)");
    }
    if (d > 0 && !(angles_(d - 1) < angles_(d))) {
      throw InvalidInput("DoaVector: angles must be strictly ascending");
    }
  }
}

inline DoaVector DoaVector::from_degrees(const std::vector<double>& deg) {
  RVector r(static_cast<Eigen::Index>(deg.size()));
  for (std::size_t i = 0; i < deg.size(); ++i) r(static_cast<Eigen::Index>(i)) = deg2rad(deg[i]);
  return DoaVector(std::move(r));
}

}  // namespace avsdoa
