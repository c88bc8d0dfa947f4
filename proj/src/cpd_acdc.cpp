#include "avsdoa/cpd_acdc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "avsdoa/roots.hpp"
#include "avsdoa/sim.hpp"

namespace avsdoa {

namespace {

constexpr std::array<std::pair<int, int>, 6> kSlabPairs{{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};

double circular_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

void check_dims(const RVector& theta, const CMatrix& a, const CovarianceStats& stats) {
  if (a.cols() != theta.size() || a.rows() != stats.sensors()) {
    throw InvalidInput("cpd: dimensions of (theta, A) inconsistent with the statistics");
  }
}

CMatrix hermitian_part(const CMatrix& q) { return 0.5 * (q + q.adjoint()); }

}  // namespace

double cls_cost(const RVector& theta, const CMatrix& a, const CovarianceStats& stats) {
  check_dims(theta, a, stats);
  const Eigen::Index dc = theta.size();
  RMatrix c(3, dc);
  for (Eigen::Index d = 0; d < dc; ++d) c.col(d) = c_vector(theta(d));
  double total = 0.0;
  for (auto [i, j] : kSlabPairs) {
    const RVector fij = c.row(i).cwiseProduct(c.row(j)).transpose();
    const CMatrix model = a * fij.asDiagonal() * a.adjoint();
    const double w = i == j ? 1.0 : 2.0;
    total += w * (model - stats.slab_view(i, j)).squaredNorm();
  }
  return total;
}

double DcConstants::derivative(double t) const {
  return alpha * std::cos(t) - beta * std::sin(t) + gamma * std::cos(2 * t) - delta * std::sin(2 * t);
}

double DcConstants::second_derivative(double t) const {
  return -alpha * std::sin(t) - beta * std::cos(t) - 2 * gamma * std::sin(2 * t) - 2 * delta * std::cos(2 * t);
}

double DcConstants::magnitude() const {
  return std::abs(alpha) + std::abs(beta) + std::abs(gamma) + std::abs(delta);
}

DcConstants dc_constants(int d, const RVector& theta, const CMatrix& a, const CovarianceStats& stats) {
  check_dims(theta, a, stats);
  if (d < 0 || d >= theta.size()) throw InvalidInput("dc_constants: source index out of range");
  const CVector ad = a.col(d);

  // cross-source part of d/dtheta_d ||R(theta, A)||^2
  double a1 = 0, b1 = 0, g1 = 0, d1 = 0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    if (k == d) continue;
    const double w = std::norm(ad.dot(a.col(k)));
    a1 += 4 * w * std::sin(theta(k));
    b1 += 4 * w * std::cos(theta(k));
    g1 += 2 * w * std::sin(2 * theta(k));
    d1 += 2 * w * std::cos(2 * theta(k));
  }

  // d/dtheta_d Tr(R(theta, A) R_x) quadratic forms
  auto form = [&](int i, int j) { return ad.dot(stats.slab_view(i, j) * ad).real(); };
  const double a2 = 2 * form(0, 2);
  const double b2 = 2 * form(0, 1);
  const double g2 = 2 * form(1, 2);
  const double d2 = form(1, 1) - form(2, 2);

  DcConstants k;
  k.alpha = a1 - 2 * a2;
  k.beta = b1 - 2 * b2;
  k.gamma = g1 - 2 * g2;
  k.delta = d1 - 2 * d2;
  return k;
}

std::array<double, 5> dc_quartic(const DcConstants& k) {
  // cos = (1-t^2)/(1+t^2), sin = 2t/(1+t^2), cos2 = (1-6t^2+t^4)/(1+t^2)^2, sin2 = 4t(1-t^2)/(1+t^2)^2
  return {k.alpha + k.gamma, -2 * k.beta - 4 * k.delta, -6 * k.gamma, 4 * k.delta - 2 * k.beta,
          k.gamma - k.alpha};
}

double dc_residual_bound(const DcConstants& k) {
  return 1e-8 * (k.magnitude() + std::numeric_limits<double>::min());
}

std::vector<double> dc_stationary_angles(const DcConstants& k) {
  if (k.magnitude() == 0.0) return {};
  const auto q = dc_quartic(k);
  const double bound = dc_residual_bound(k);

  std::vector<double> candidates;
  for (double tau : real_polynomial_roots({q.begin(), q.end()})) {
    double t = 2.0 * std::atan(tau);
    // Newton polishing on the trigonometric form; keep only improvements
    for (int it = 0; it < 4; ++it) {
      const double f = k.derivative(t);
      const double fp = k.second_derivative(t);
      if (f == 0.0 || fp == 0.0) break;
      const double next = t - f / fp;
      if (std::abs(k.derivative(next)) >= std::abs(f)) break;
      t = next;
    }
    candidates.push_back(wrap_angle(t));
  }
  // tau -> infinity corresponds to theta = pi
  if (std::abs(k.derivative(-kPi)) < bound) candidates.push_back(-kPi);

  std::vector<double> out;
  std::sort(candidates.begin(), candidates.end());
  for (double t : candidates) {
    if (std::abs(k.derivative(t)) >= bound) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](double o) { return circular_distance(o, t) < 1e-12; });
    if (!dup) out.push_back(t);
  }
  return out;
}

CpdState modified_dc_sweep(CpdState state, const CovarianceStats& stats, int sweeps) {
  if (sweeps < 1) throw InvalidInput("modified_dc_sweep: at least one sweep required");
  check_dims(state.theta, state.a, stats);
  double current_cost = cls_cost(state.theta, state.a, stats);
  for (int s = 0; s < sweeps; ++s) {
    for (Eigen::Index d = 0; d < state.theta.size(); ++d) {
      const DcConstants k = dc_constants(static_cast<int>(d), state.theta, state.a, stats);
      const std::vector<double> candidates = dc_stationary_angles(k);
      if (candidates.empty()) continue;

      const double theta_now = state.theta(d);
      std::vector<std::pair<double, double>> evaluated{{theta_now, current_cost}};
      RVector trial = state.theta;
      for (double t : candidates) {
        trial(d) = t;
        evaluated.emplace_back(t, cls_cost(trial, state.a, stats));
      }
      double best = current_cost;
      for (const auto& e : evaluated) best = std::min(best, e.second);
      const double tie = 1e-12 * std::max(std::abs(best), std::numeric_limits<double>::min());
      double chosen = theta_now;
      double chosen_cost = current_cost;
      double chosen_dist = std::numeric_limits<double>::infinity();
      for (const auto& [t, c] : evaluated) {
        if (c > best + tie || c > current_cost) continue;
        const double dist = circular_distance(t, theta_now);
        if (dist < chosen_dist) {
          chosen = t;
          chosen_cost = c;
          chosen_dist = dist;
        }
      }
      state.theta(d) = chosen;
      current_cost = chosen_cost;
    }
  }
  state.cost = current_cost;
  return state;
}

CpdState ac_column_update(CpdState state, const CovarianceStats& stats, int d) {
  check_dims(state.theta, state.a, stats);
  if (d < 0 || d >= state.theta.size()) throw InvalidInput("ac_column_update: source index out of range");
  const int m = stats.sensors();
  const Eigen::Vector3d cd = c_vector(state.theta(d));

  // P = sum_{i,j} F_ij(theta_d) slab(i,j) - sum_{l != d} (c_d . c_l)^2 a_l a_l^H
  CMatrix p = CMatrix::Zero(m, m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) p += (cd(i) * cd(j)) * stats.slab_view(i, j);
  for (Eigen::Index l = 0; l < state.theta.size(); ++l) {
    if (l == d) continue;
    const double inner = cd.dot(c_vector(state.theta(l)));
    p -= (inner * inner) * (state.a.col(l) * state.a.col(l).adjoint());
  }
  p = hermitian_part(p);
  const double weight = cd.squaredNorm() * cd.squaredNorm();

  Eigen::SelfAdjointEigenSolver<CMatrix> es(p);
  const double mu = es.eigenvalues()(m - 1);
  if (mu > 0.0) {
    CVector v = es.eigenvectors().col(m - 1);
    // keep the phase continuous with the previous column
    const cplx overlap = v.dot(state.a.col(d));
    if (std::abs(overlap) > 0.0) v *= overlap / std::abs(overlap);
    state.a.col(d) = std::sqrt(mu / weight) * v;
  } else {
    state.a.col(d).setZero();
  }
  state.cost = cls_cost(state.theta, state.a, stats);
  return state;
}

RVector svec(const CMatrix& q) {
  if (q.rows() != q.cols()) throw InvalidInput("svec: matrix must be square");
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if (hermitian_defect(q) > 1e-8 * scale) throw InvalidInput("svec: matrix not Hermitian");
  const Eigen::Index n = q.rows();
  RVector v(n * n);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) v(idx++) = q(i, i).real();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) v(idx++) = std::sqrt(2.0) * q(i, j).real();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) v(idx++) = std::sqrt(2.0) * q(i, j).imag();
  return v;
}

CMatrix unsvec(const RVector& v) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != v.size()) throw InvalidInput("unsvec: length must be a perfect square");
  CMatrix q(n, n);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) q(i, i) = v(idx++);
  const Eigen::Index off = n * (n - 1) / 2;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      q(i, j) = cplx(v(idx) / std::sqrt(2.0), v(idx + off) / std::sqrt(2.0));
      q(j, i) = std::conj(q(i, j));
      ++idx;
    }
  }
  return q;
}

double extract_doa(double c2, double c3) {
  if (c2 == 0.0 && c3 == 0.0) throw InvalidInput("extract_doa: zero direction vector");
  return wrap_angle(std::atan2(c3, c2));
}

CpdState normalize(CpdState state) {
  const Eigen::Index dc = state.theta.size();
  for (Eigen::Index d = 0; d < dc; ++d) {
    state.theta(d) = wrap_angle(state.theta(d));
    const cplx first = state.a(0, d);
    if (std::abs(first) > 0.0) state.a.col(d) *= std::conj(first) / std::abs(first);
    state.a(0, d) = cplx(state.a(0, d).real(), 0.0);
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(dc));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return state.theta(x) < state.theta(y); });
  RVector theta(dc);
  CMatrix a(state.a.rows(), dc);
  for (Eigen::Index d = 0; d < dc; ++d) {
    theta(d) = state.theta(order[static_cast<std::size_t>(d)]);
    a.col(d) = state.a.col(order[static_cast<std::size_t>(d)]);
  }
  state.theta = std::move(theta);
  state.a = std::move(a);
  return state;
}

namespace {

struct TruncatedEig {
  CMatrix vectors;  // M x D
  RVector values;   // D, by decreasing magnitude
  double conditioning;  // |lambda_D| / |lambda_1|
};

TruncatedEig truncated_eig(const CMatrix& p, int rank) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(p));
  const Eigen::Index n = p.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return std::abs(es.eigenvalues()(x)) > std::abs(es.eigenvalues()(y));
  });
  TruncatedEig out;
  out.vectors.resize(n, rank);
  out.values.resize(rank);
  for (int r = 0; r < rank; ++r) {
    out.vectors.col(r) = es.eigenvectors().col(order[static_cast<std::size_t>(r)]);
    out.values(r) = es.eigenvalues()(order[static_cast<std::size_t>(r)]);
  }
  const double top = std::abs(out.values(0));
  out.conditioning = top > 0.0 ? std::abs(out.values(rank - 1)) / top : 0.0;
  return out;
}

}  // namespace

CpdState ejd_init(const CovarianceStats& stats, int sources) {
  const int m = stats.sensors();
  if (sources < 1 || sources >= m) throw InvalidInput("ejd_init: need 1 <= D < M");

  std::vector<RVector> targets;
  for (auto [i, j] : kSlabPairs) targets.push_back(svec(hermitian_part(stats.slab(i, j))));
  RMatrix mx = RMatrix::Zero(m * m, m * m);
  for (const auto& t : targets) mx.noalias() += t * t.transpose();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(mx);
  const Eigen::Index last = mx.rows() - 1;
  CMatrix p1 = unsvec(es.eigenvectors().col(last));
  CMatrix p2 = unsvec(es.eigenvectors().col(last - 1));

  // Eigenvectors of P1 P2^+ on the range of the better-conditioned denominator
  TruncatedEig e1 = truncated_eig(p1, sources);
  TruncatedEig e2 = truncated_eig(p2, sources);
  if (e2.conditioning < e1.conditioning) {
    std::swap(p1, p2);
    std::swap(e1, e2);
  }
  CMatrix a_ejd;
  if (sources == 1) {
    // every slab is a multiple of a a^H, so the second direction carries no information
    a_ejd = truncated_eig(unsvec(es.eigenvectors().col(last)), 1).vectors;
  } else if (e2.conditioning > 1e-12) {
    const CMatrix reduced = e2.vectors.adjoint() * p1 * e2.vectors * e2.values.cwiseInverse().asDiagonal();
    Eigen::ComplexEigenSolver<CMatrix> ces(reduced);
    if (ces.info() != Eigen::Success) throw NumericalError("ejd_init: eigen-decomposition failed");
    a_ejd = e2.vectors * ces.eigenvectors();
  } else {
    const double reg = 1e-10 * p2.norm();
    const CMatrix den = p2 + reg * CMatrix::Identity(m, m);
    Eigen::ComplexEigenSolver<CMatrix> ces(p1 * den.inverse());
    if (ces.info() != Eigen::Success) throw NumericalError("ejd_init: eigen-decomposition failed");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
      return std::abs(ces.eigenvalues()(x)) > std::abs(ces.eigenvalues()(y));
    });
    a_ejd.resize(m, sources);
    for (int d = 0; d < sources; ++d) a_ejd.col(d) = ces.eigenvectors().col(order[static_cast<std::size_t>(d)]);
  }
  for (int d = 0; d < sources; ++d) {
    const double nrm = a_ejd.col(d).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("ejd_init: fewer than D usable eigenvectors");
    a_ejd.col(d) /= nrm;
    const cplx first = a_ejd(0, d);
    if (std::abs(first) > 0.0) a_ejd.col(d) *= std::conj(first) / std::abs(first);
  }

  const Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(a_ejd);
  if (cod.rank() < sources) throw NumericalError("ejd_init: estimated steering matrix is rank deficient");
  const CMatrix pinv = cod.pseudoInverse();
  auto diag_of = [&](int j) -> RVector { return (pinv * stats.slab(0, j) * a_ejd).real().diagonal(); };
  const RVector d11 = diag_of(0);
  const RVector d12 = diag_of(1);
  const RVector d13 = diag_of(2);
  const RVector d22 = (pinv * stats.slab(1, 1) * a_ejd).real().diagonal();
  const RVector d33 = (pinv * stats.slab(2, 2) * a_ejd).real().diagonal();

  CpdState state;
  state.a = a_ejd;
  state.theta.resize(sources);
  for (int d = 0; d < sources; ++d) {
    state.theta(d) = (d12(d) == 0.0 && d13(d) == 0.0) ? 0.0 : extract_doa(d12(d), d13(d));
    // ||c||^2 = 2, so the three auto-slab diagonals sum to 2 ||a_d||^2
    const double power = 0.5 * (d11(d) + d22(d) + d33(d));
    if (power > 0.0) state.a.col(d) *= std::sqrt(power);
  }
  state = normalize(std::move(state));
  state.cost = cls_cost(state.theta, state.a, stats);
  state.cost_history = {state.cost};
  return state;
}

CpdState acdc_run(const CovarianceStats& stats, CpdState init, const AcdcSchedule& schedule) {
  CpdState state = std::move(init);
  check_dims(state.theta, state.a, stats);
  const int dc = static_cast<int>(state.theta.size());
  state.cost = cls_cost(state.theta, state.a, stats);
  state.cost_history = {state.cost};
  state.iterations = 0;
  state.converged = false;

  while (state.iterations < schedule.max_interleaves) {
    const double before = state.cost;
    for (int s = 0; s < schedule.ac_sweeps; ++s) {
      for (int d = 0; d < dc; ++d) {
        state = ac_column_update(std::move(state), stats, d);
        if (state.a.col(d).squaredNorm() == 0.0) {
          // collapsed column: restart from the dominant direction of the pressure residual
          CMatrix resid = stats.slab(0, 0);
          for (int l = 0; l < dc; ++l)
            if (l != d) resid -= state.a.col(l) * state.a.col(l).adjoint();
          Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(resid));
          const double lam = es.eigenvalues()(stats.sensors() - 1);
          if (lam > 0.0) {
            CpdState probe = state;
            probe.a.col(d) = std::sqrt(lam) * es.eigenvectors().col(stats.sensors() - 1);
            probe.cost = cls_cost(probe.theta, probe.a, stats);
            if (probe.cost <= state.cost) state = std::move(probe);
          }
        }
      }
    }
    state.cost_history.push_back(state.cost);
    state = modified_dc_sweep(std::move(state), stats, schedule.dc_sweeps);
    state.cost_history.push_back(state.cost);
    ++state.iterations;
    if (state.cost == 0.0 || before - state.cost <= schedule.relative_tolerance * before) {
      state.converged = true;
      break;
    }
  }
  std::vector<double> history = std::move(state.cost_history);
  const int iterations = state.iterations;
  const bool converged = state.converged;
  state = normalize(std::move(state));
  state.cost = cls_cost(state.theta, state.a, stats);
  state.cost_history = std::move(history);
  state.iterations = iterations;
  state.converged = converged;
  return state;
}

}  // namespace avsdoa
