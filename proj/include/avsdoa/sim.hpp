#pragma once

// Array scenarios, AVS steering manifolds and synthetic measurement batches.

#include <set>

#include "avsdoa/types.hpp"

namespace avsdoa {

enum class Geometry { ULA, UCA, Explicit };

/// A passive array of M acoustic vector-sensors. Distances are in
/// wavelengths, so the wavenumber defaults to 2*pi.
struct ArrayScenario {
  Geometry geometry = Geometry::ULA;
  int sensors = 2;
  double spacing = 0.5;  ///< ULA inter-element spacing
  double radius = 0.5;   ///< UCA radius
  CMatrix explicit_steering;  ///< M x D, used when geometry == Explicit
  RVector gains;              ///< per-sensor gain, empty means all ones
  Eigen::MatrixX2d position_offsets;  ///< per-sensor (dx, dy), empty means zero
  std::set<int> faulty;       ///< 0-based sensor indices carrying noise only
  double wavenumber = 2.0 * kPi;

  /// Throws InvalidInput when the scenario violates its invariants.
  void validate() const;

  /// Pressure steering matrix for the given DOAs with perturbations and
  /// faults applied.
  CMatrix steering(const RVector& theta) const;
};

/// exp(j*k*spacing*(m-1)*cos(theta)); the default spacing gives exp(j*pi*(m-1)*cos(theta)).
CVector ula_pressure_steering(int sensors, double theta, double spacing = 0.5,
                              double wavenumber = 2.0 * kPi);

/// exp(j*k*radius*cos(theta - 2*pi*(m-1)/M)).
CVector uca_pressure_steering(int sensors, double theta, double radius = 0.5,
                              double wavenumber = 2.0 * kPi);

/// A_md <- A_md * g_m * exp(j*k*(cos(theta_d)*dx_m + sin(theta_d)*dy_m)).
CMatrix apply_perturbations(const CMatrix& a, const ArrayScenario& scenario, const RVector& theta);

/// Zeroes the rows of faulty sensors.
CMatrix apply_faults(const CMatrix& a, const std::set<int>& faulty);

/// Draws gains ~ U(gain_lo, gain_hi) and offsets ~ U(offset_lo, offset_hi)
/// once, storing them in the scenario.
void draw_calibration_errors(ArrayScenario& scenario, Rng& rng, double gain_lo = 0.7,
                             double gain_hi = 1.3, double offset_lo = -1.0, double offset_hi = 1.0);

/// (1, cos(theta), sin(theta)).
Eigen::Vector3d c_vector(double theta);

/// d/dtheta of c_vector: (0, -sin(theta), cos(theta)).
Eigen::Vector3d c_vector_derivative(double theta);

/// F(theta) = c(theta) c(theta)^T.
Eigen::Matrix3d f_matrix(double theta);

/// 3M x D AVS manifold C(theta) <khatri-rao> A, together with C itself.
struct AvsManifold {
  CMatrix matrix;  ///< rows [A; A diag(cos); A diag(sin)]
  RMatrix c;       ///< 3 x D
};

AvsManifold avs_manifold(const CMatrix& a, const RVector& theta);

enum class SourceKind { CircularComplexNormal, QPSK, GaussianMixture };
enum class NoiseKind { CircularComplexNormal, ComplexLaplace };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::CircularComplexNormal;
  double variance = 1.0;  ///< E|v_i[t]|^2
};

/// D x T matrix of unit-power, mutually independent source samples.
CMatrix generate_sources(SourceKind kind, int sources, int samples, Rng& rng);

/// Additive noise matrix of the given shape.
CMatrix generate_noise(const NoiseSpec& spec, Eigen::Index rows, Eigen::Index samples, Rng& rng);

/// Y = manifold * S + V.
CMatrix synthesize(const CMatrix& manifold, const CMatrix& sources, const NoiseSpec& noise, Rng& rng);

/// Independent stream for one trial, derived from (master seed, stream index).
Rng trial_rng(std::uint64_t master_seed, std::uint64_t stream);

std::string to_string(SourceKind kind);
std::string to_string(NoiseKind kind);
std::string to_string(Geometry geometry);
SourceKind parse_source_kind(const std::string& s);
NoiseKind parse_noise_kind(const std::string& s);
Geometry parse_geometry(const std::string& s);

}  // namespace avsdoa
