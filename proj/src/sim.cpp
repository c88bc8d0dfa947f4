#include "avsdoa/sim.hpp"

#include <cmath>

namespace avsdoa {

void ArrayScenario::validate() const {
  if (sensors < 2) throw InvalidInput("ArrayScenario: at least two sensors required");
  if (geometry == Geometry::UCA && sensors < 3) throw InvalidInput("ArrayScenario: UCA needs M >= 3");
  if (geometry == Geometry::Explicit && explicit_steering.rows() != sensors) {
    throw InvalidInput("ArrayScenario: explicit steering must have M rows");
  }
  if (gains.size() != 0) {
    if (gains.size() != sensors) throw InvalidInput("ArrayScenario: gains must have M entries");
    if ((gains.array() <= 0.0).any()) throw InvalidInput("ArrayScenario: gains must be positive");
  }
  if (position_offsets.rows() != 0 && position_offsets.rows() != sensors) {
    throw InvalidInput("ArrayScenario: position offsets must have M rows");
  }
  for (int m : faulty) {
    if (m < 0 || m >= sensors) throw InvalidInput("ArrayScenario: faulty sensor index out of range");
  }
}

CMatrix ArrayScenario::steering(const RVector& theta) const {
  validate();
  const Eigen::Index d_count = theta.size();
  CMatrix a(sensors, d_count);
  switch (geometry) {
    case Geometry::ULA:
      for (Eigen::Index d = 0; d < d_count; ++d)
        a.col(d) = ula_pressure_steering(sensors, theta(d), spacing, wavenumber);
      break;
    case Geometry::UCA:
      for (Eigen::Index d = 0; d < d_count; ++d)
        a.col(d) = uca_pressure_steering(sensors, theta(d), radius, wavenumber);
      break;
    case Geometry::Explicit:
      if (explicit_steering.cols() != d_count) {
        throw InvalidInput("ArrayScenario: explicit steering column count differs from D");
      }
      a = explicit_steering;
      break;
  }
  return apply_faults(apply_perturbations(a, *this, theta), faulty);
}

CVector ula_pressure_steering(int sensors, double theta, double spacing, double wavenumber) {
  CVector a(sensors);
  const double phase = wavenumber * spacing * std::cos(theta);
  for (int m = 0; m < sensors; ++m) a(m) = std::polar(1.0, phase * m);
  return a;
}

CVector uca_pressure_steering(int sensors, double theta, double radius, double wavenumber) {
  if (sensors < 3) throw InvalidInput("uca_pressure_steering: M >= 3 required");
  CVector a(sensors);
  for (int m = 0; m < sensors; ++m) {
    const double phi = 2.0 * kPi * m / sensors;
    a(m) = std::polar(1.0, wavenumber * radius * std::cos(theta - phi));
  }
  return a;
}

CMatrix apply_perturbations(const CMatrix& a, const ArrayScenario& scenario, const RVector& theta) {
  if (a.cols() != theta.size()) throw InvalidInput("apply_perturbations: dimension mismatch");
  CMatrix out = a;
  const bool has_gain = scenario.gains.size() != 0;
  const bool has_offset = scenario.position_offsets.rows() != 0;
  if (!has_gain && !has_offset) return out;
  for (Eigen::Index m = 0; m < a.rows(); ++m) {
    const double g = has_gain ? scenario.gains(m) : 1.0;
    for (Eigen::Index d = 0; d < a.cols(); ++d) {
      double phase = 0.0;
      if (has_offset) {
        phase = scenario.wavenumber * (std::cos(theta(d)) * scenario.position_offsets(m, 0) +
                                       std::sin(theta(d)) * scenario.position_offsets(m, 1));
      }
      out(m, d) *= std::polar(g, phase);
    }
  }
  return out;
}

CMatrix apply_faults(const CMatrix& a, const std::set<int>& faulty) {
  CMatrix out = a;
  for (int m : faulty) {
    if (m < 0 || m >= a.rows()) throw InvalidInput("apply_faults: index out of range");
    out.row(m).setZero();
  }
  return out;
}

void draw_calibration_errors(ArrayScenario& scenario, Rng& rng, double gain_lo, double gain_hi,
                             double offset_lo, double offset_hi) {
  std::uniform_real_distribution<double> gain(gain_lo, gain_hi);
  std::uniform_real_distribution<double> offset(offset_lo, offset_hi);
  scenario.gains.resize(scenario.sensors);
  scenario.position_offsets.resize(scenario.sensors, 2);
  for (int m = 0; m < scenario.sensors; ++m) scenario.gains(m) = gain(rng);
  for (int m = 0; m < scenario.sensors; ++m) {
    scenario.position_offsets(m, 0) = offset(rng);
    scenario.position_offsets(m, 1) = offset(rng);
  }
}

Eigen::Vector3d c_vector(double theta) { return {1.0, std::cos(theta), std::sin(theta)}; }

Eigen::Vector3d c_vector_derivative(double theta) { return {0.0, -std::sin(theta), std::cos(theta)}; }

Eigen::Matrix3d f_matrix(double theta) {
  const Eigen::Vector3d c = c_vector(theta);
  return c * c.transpose();
}

AvsManifold avs_manifold(const CMatrix& a, const RVector& theta) {
  if (a.cols() != theta.size()) throw InvalidInput("avs_manifold: A columns must pair with theta");
  const Eigen::Index m = a.rows();
  AvsManifold out;
  out.c.resize(3, theta.size());
  out.matrix.resize(3 * m, theta.size());
  for (Eigen::Index d = 0; d < theta.size(); ++d) {
    const Eigen::Vector3d c = c_vector(theta(d));
    out.c.col(d) = c;
    for (int block = 0; block < 3; ++block) out.matrix.block(block * m, d, m, 1) = c(block) * a.col(d);
  }
  return out;
}

namespace {

cplx standard_cn(Rng& rng, std::normal_distribution<double>& n) {
  const double re = n(rng);
  const double im = n(rng);
  return {re * std::sqrt(0.5), im * std::sqrt(0.5)};
}

double laplace(Rng& rng, double scale) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double x = u(rng);
  while (std::abs(x) >= 0.5) x = u(rng);
  const double s = x < 0.0 ? -1.0 : 1.0;
  return -scale * s * std::log1p(-2.0 * std::abs(x));
}

}  // namespace

CMatrix generate_sources(SourceKind kind, int sources, int samples, Rng& rng) {
  if (sources < 1 || samples < 1) throw InvalidInput("generate_sources: D and T must be positive");
  CMatrix s(sources, samples);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  // column-major fill keeps the stream order independent of D
  for (int t = 0; t < samples; ++t) {
    for (int d = 0; d < sources; ++d) {
      switch (kind) {
        case SourceKind::CircularComplexNormal:
          s(d, t) = standard_cn(rng, normal);
          break;
        case SourceKind::QPSK: {
          const double re = coin(rng) ? 1.0 : -1.0;
          const double im = coin(rng) ? 1.0 : -1.0;
          s(d, t) = cplx(re, im) * std::sqrt(0.5);
          break;
        }
        case SourceKind::GaussianMixture: {
          // each part: equiprobable N(+-1/sqrt2, 1/2), unit variance; 1/sqrt2 gives E|s|^2 = 1
          auto part = [&]() {
            const double mean = coin(rng) ? std::sqrt(0.5) : -std::sqrt(0.5);
            return mean + std::sqrt(0.5) * normal(rng);
          };
          const double re = part();
          const double im = part();
          s(d, t) = cplx(re, im) * std::sqrt(0.5);
          break;
        }
      }
    }
  }
  return s;
}

CMatrix generate_noise(const NoiseSpec& spec, Eigen::Index rows, Eigen::Index samples, Rng& rng) {
  if (spec.variance < 0.0) throw InvalidInput("generate_noise: negative variance");
  CMatrix v(rows, samples);
  if (spec.variance == 0.0) {
    v.setZero();
    return v;
  }
  const double sigma = std::sqrt(spec.variance);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index t = 0; t < samples; ++t) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      switch (spec.kind) {
        case NoiseKind::CircularComplexNormal:
          v(i, t) = sigma * standard_cn(rng, normal);
          break;
        case NoiseKind::ComplexLaplace: {
          // scale sigma/2 per part: variance 2b^2 = sigma^2/2 each
          const double re = laplace(rng, 0.5 * sigma);
          const double im = laplace(rng, 0.5 * sigma);
          v(i, t) = cplx(re, im);
          break;
        }
      }
    }
  }
  return v;
}

CMatrix synthesize(const CMatrix& manifold, const CMatrix& sources, const NoiseSpec& noise, Rng& rng) {
  if (manifold.cols() != sources.rows()) throw InvalidInput("synthesize: dimension mismatch");
  CMatrix y = manifold * sources;
  if (noise.variance > 0.0) y += generate_noise(noise, y.rows(), y.cols(), rng);
  return y;
}

Rng trial_rng(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x41565344u};
  return Rng(seq);
}

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::CircularComplexNormal: return "cn";
    case SourceKind::QPSK: return "qpsk";
    case SourceKind::GaussianMixture: return "gaussian_mixture";
  }
  return "?";
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::CircularComplexNormal: return "cn";
    case NoiseKind::ComplexLaplace: return "laplace";
  }
  return "?";
}

std::string to_string(Geometry geometry) {
  switch (geometry) {
    case Geometry::ULA: return "ula";
    case Geometry::UCA: return "uca";
    case Geometry::Explicit: return "explicit";
  }
  return "?";
}

SourceKind parse_source_kind(const std::string& s) {
  if (s == "cn") return SourceKind::CircularComplexNormal;
  if (s == "qpsk") return SourceKind::QPSK;
  if (s == "gaussian_mixture") return SourceKind::GaussianMixture;
  throw InvalidInput("unknown source kind: " + s);
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "cn") return NoiseKind::CircularComplexNormal;
  if (s == "laplace") return NoiseKind::ComplexLaplace;
  throw InvalidInput("unknown noise kind: " + s);
}

Geometry parse_geometry(const std::string& s) {
  if (s == "ula") return Geometry::ULA;
  if (s == "uca") return Geometry::UCA;
  if (s == "explicit") return Geometry::Explicit;
  throw InvalidInput("unknown geometry: " + s);
}

}  // namespace avsdoa
