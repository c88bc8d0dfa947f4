#include "avsdoa/gauss_ml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "avsdoa/covariance.hpp"
#include "avsdoa/sim.hpp"

namespace avsdoa {

namespace {

void require_positive_noise(const ParamVector& p, const char* who) {
  if (p.phi.size() != p.layout.size()) throw InvalidInput(std::string(who) + ": phi length does not match layout");
  if (!(p.phi(p.layout.noise()) > 0.0)) throw InvalidInput(std::string(who) + ": sigma^2 must be positive");
}

// Each non-noise gradient is P_i Q_i^H + Q_i P_i^H; columns 0..n-1 of the
// result hold P, columns n..2n-1 hold Q.
CMatrix rank2_factors(const ParamVector& p) {
  const ModelParams mp = unpack(p);
  const int m = p.layout.sensors;
  const int dc = p.layout.sources;
  const Eigen::Index n = p.layout.size() - 1;
  const CMatrix bar = avs_manifold(mp.a, mp.theta).matrix;
  CMatrix v = CMatrix::Zero(3 * m, 2 * n);
  for (int d = 0; d < dc; ++d) {
    const Eigen::Vector3d c = c_vector(mp.theta(d));
    for (int row = 0; row < m; ++row) {
      const Eigen::Index ir = p.layout.re(row, d);
      for (int b = 0; b < 3; ++b) v(b * m + row, ir) = c(b);
      v.col(n + ir) = bar.col(d);
      if (row >= 1) {
        const Eigen::Index ii = p.layout.im(row, d);
        for (int b = 0; b < 3; ++b) v(b * m + row, ii) = cplx(0.0, c(b));
        v.col(n + ii) = bar.col(d);
      }
    }
    const Eigen::Vector3d dcv = c_vector_derivative(mp.theta(d));
    const Eigen::Index it = p.layout.theta(d);
    for (int b = 0; b < 3; ++b) v.block(b * m, it, m, 1) = dcv(b) * mp.a.col(d);
    v.col(n + it) = bar.col(d);
  }
  return v;
}

double trace_product(const CMatrix& x, const CMatrix& y) {
  return (x.cwiseProduct(y.transpose())).sum().real();
}

struct InverseAndLogdet {
  CMatrix inverse;
  double logdet = 0.0;
};

InverseAndLogdet woodbury(const ParamVector& p) {
  const double s2 = p.phi(p.layout.noise());
  const CMatrix bar = manifold_of(p);
  const Eigen::Index n = bar.rows();
  const Eigen::Index dc = bar.cols();
  CMatrix inner = bar.adjoint() * bar;
  inner.diagonal().array() += s2;
  Eigen::LLT<CMatrix> llt(inner);
  if (llt.info() != Eigen::Success) throw NumericalError("cov_inverse: inner matrix not positive definite");
  InverseAndLogdet out;
  out.inverse = -(bar * llt.solve(bar.adjoint()));
  out.inverse.diagonal().array() += 1.0;
  out.inverse /= s2;
  out.inverse = 0.5 * (out.inverse + out.inverse.adjoint()).eval();
  const CMatrix l = llt.matrixL();
  double ld = 0.0;
  for (Eigen::Index d = 0; d < dc; ++d) ld += 2.0 * std::log(l(d, d).real());
  out.logdet = static_cast<double>(n - dc) * std::log(s2) + ld;
  return out;
}

double logdet_pd(const CMatrix& r, const char* who) {
  Eigen::LLT<CMatrix> llt(0.5 * (r + r.adjoint()));
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(who) + ": matrix not positive definite");
  const CMatrix l = llt.matrixL();
  double ld = 0.0;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    if (!(l(i, i).real() > 0.0)) throw NumericalError(std::string(who) + ": matrix not positive definite");
    ld += 2.0 * std::log(l(i, i).real());
  }
  return ld;
}

double clamp_roundoff(double v, Eigen::Index n) {
  // Gibbs: non-negative up to rounding
  return (v < 0.0 && v > -1e-10 * static_cast<double>(n)) ? 0.0 : v;
}

}  // namespace

ParamVector pack(const CMatrix& a, const RVector& theta, double noise_variance) {
  if (a.cols() != theta.size()) throw InvalidInput("pack: A columns must pair with theta");
  if (a.rows() < 1 || a.cols() < 1) throw InvalidInput("pack: empty A");
  if (!(noise_variance >= 0.0)) throw InvalidInput("pack: negative sigma^2");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index d = 0; d < a.cols(); ++d) {
    if (std::abs(a(0, d).imag()) > 1e-12 * scale || a(0, d).real() < -1e-12 * scale) {
      throw InvalidInput("pack: first row of A must be real and non-negative");
    }
  }
  ParamVector p;
  p.layout = {static_cast<int>(a.rows()), static_cast<int>(a.cols())};
  p.phi.resize(p.layout.size());
  for (int d = 0; d < p.layout.sources; ++d) {
    for (int m = 0; m < p.layout.sensors; ++m) {
      p.phi(p.layout.re(m, d)) = a(m, d).real();
      if (m >= 1) p.phi(p.layout.im(m, d)) = a(m, d).imag();
    }
    p.phi(p.layout.theta(d)) = theta(d);
  }
  p.phi(p.layout.noise()) = noise_variance;
  return p;
}

ModelParams unpack(const ParamVector& p) {
  if (p.phi.size() != p.layout.size()) throw InvalidInput("unpack: phi length does not match layout");
  ModelParams mp;
  mp.a.resize(p.layout.sensors, p.layout.sources);
  mp.theta.resize(p.layout.sources);
  for (int d = 0; d < p.layout.sources; ++d) {
    for (int m = 0; m < p.layout.sensors; ++m) {
      mp.a(m, d) = cplx(p.phi(p.layout.re(m, d)), m >= 1 ? p.phi(p.layout.im(m, d)) : 0.0);
    }
    mp.theta(d) = p.phi(p.layout.theta(d));
  }
  mp.noise_variance = p.phi(p.layout.noise());
  return mp;
}

CMatrix manifold_of(const ParamVector& p) {
  const ModelParams mp = unpack(p);
  return avs_manifold(mp.a, mp.theta).matrix;
}

CMatrix model_covariance(const ParamVector& p) {
  return model_covariance(manifold_of(p), p.phi(p.layout.noise()));
}

CMatrix cov_gradient(const ParamVector& p, Eigen::Index i) {
  if (i < 0 || i >= p.layout.size()) throw InvalidInput("cov_gradient: parameter index out of range");
  const int m = p.layout.sensors;
  if (i == p.layout.noise()) return CMatrix::Identity(3 * m, 3 * m);
  const ModelParams mp = unpack(p);

  Eigen::Matrix3d f;
  CMatrix inner(m, m);
  const Eigen::Index per_re = Eigen::Index{m} * p.layout.sources;
  const Eigen::Index per_im = Eigen::Index{m - 1} * p.layout.sources;
  if (i < per_re) {
    const int d = static_cast<int>(i / m);
    const int row = static_cast<int>(i % m);
    f = f_matrix(mp.theta(d));
    CVector e = CVector::Zero(m);
    e(row) = 1.0;
    inner = e * mp.a.col(d).adjoint() + mp.a.col(d) * e.transpose();
  } else if (i < per_re + per_im) {
    const Eigen::Index k = i - per_re;
    const int d = static_cast<int>(k / (m - 1));
    const int row = static_cast<int>(k % (m - 1)) + 1;
    f = f_matrix(mp.theta(d));
    CVector e = CVector::Zero(m);
    e(row) = 1.0;
    inner = cplx(0.0, 1.0) * (e * mp.a.col(d).adjoint() - mp.a.col(d) * e.transpose());
  } else {
    const int d = static_cast<int>(i - per_re - per_im);
    const double t = mp.theta(d);
    // derivative of c c^T with c = (1, cos, sin)
    f << 0.0, -std::sin(t), std::cos(t),
         -std::sin(t), -std::sin(2 * t), std::cos(2 * t),
         std::cos(t), std::cos(2 * t), std::sin(2 * t);
    inner = mp.a.col(d) * mp.a.col(d).adjoint();
  }
  CMatrix g(3 * m, 3 * m);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) g.block(r * m, c * m, m, m) = f(r, c) * inner;
  return g;
}

CMatrix cov_inverse(const ParamVector& p) {
  require_positive_noise(p, "cov_inverse");
  return woodbury(p).inverse;
}

FisherInfo fim(const ParamVector& p, double samples) {
  require_positive_noise(p, "fim");
  const Eigen::Index k = p.layout.size();
  const Eigen::Index n = k - 1;
  const CMatrix rinv = woodbury(p).inverse;
  const CMatrix v = rank2_factors(p);
  const CMatrix w = rinv * v;
  const CMatrix h = v.adjoint() * w;

  FisherInfo out;
  out.samples = samples;
  out.j.resize(k, k);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index pa = a, qa = n + a;
    for (Eigen::Index b = a; b < n; ++b) {
      const Eigen::Index pb = b, qb = n + b;
      const cplx t = h(qa, pb) * h(qb, pa) + h(qa, qb) * h(pb, pa) + h(pa, pb) * h(qb, qa) + h(pa, qb) * h(pb, qa);
      out.j(a, b) = samples * t.real();
      out.j(b, a) = out.j(a, b);
    }
    out.j(a, n) = samples * 2.0 * w.col(pa).dot(w.col(qa)).real();
    out.j(n, a) = out.j(a, n);
  }
  out.j(n, n) = samples * rinv.squaredNorm();
  return out;
}

FisherInfo fim_dense(const ParamVector& p, double samples) {
  require_positive_noise(p, "fim_dense");
  const Eigen::Index k = p.layout.size();
  const CMatrix rinv = woodbury(p).inverse;
  std::vector<CMatrix> prod;
  prod.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) prod.push_back(rinv * cov_gradient(p, i));
  FisherInfo out;
  out.samples = samples;
  out.j.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      out.j(a, b) = samples * trace_product(prod[static_cast<std::size_t>(a)], prod[static_cast<std::size_t>(b)]);
      out.j(b, a) = out.j(a, b);
    }
  }
  return out;
}

CrlbResult crlb(const ParamVector& p, double samples) {
  const FisherInfo info = fim(p, samples);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(info.j);
  const RVector& lam = es.eigenvalues();
  const double top = lam.cwiseAbs().maxCoeff();
  CrlbResult out;
  out.condition = lam(0) > 0.0 ? top / lam(0) : std::numeric_limits<double>::infinity();
  out.pseudo_inverse = !(out.condition <= 1e12);
  RVector inv(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    inv(i) = (lam(i) > 1e-12 * top) ? 1.0 / lam(i) : 0.0;
  }
  out.bound = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  out.bound = 0.5 * (out.bound + out.bound.transpose()).eval();
  return out;
}

double log_likelihood(const ParamVector& p, const CMatrix& r_hat, double samples) {
  require_positive_noise(p, "log_likelihood");
  const InverseAndLogdet w = woodbury(p);
  if (r_hat.rows() != w.inverse.rows() || r_hat.cols() != w.inverse.cols()) {
    throw InvalidInput("log_likelihood: R_hat has the wrong size");
  }
  return -samples * (w.logdet + trace_product(r_hat, w.inverse));
}

double kld(const ParamVector& p, const CMatrix& r_hat) {
  require_positive_noise(p, "kld");
  return kld(model_covariance(p), r_hat);
}

double kld(const CMatrix& r_model, const CMatrix& r_hat) {
  if (r_model.rows() != r_model.cols() || r_model.rows() != r_hat.rows() || r_hat.rows() != r_hat.cols()) {
    throw InvalidInput("kld: matrices must be square and of equal size");
  }
  if (r_model == r_hat) {
    logdet_pd(r_model, "kld");
    return 0.0;
  }
  const CMatrix sym = 0.5 * (r_model + r_model.adjoint());
  Eigen::LLT<CMatrix> llt(sym);
  if (llt.info() != Eigen::Success) throw NumericalError("kld: model covariance not positive definite");
  const double ld_model = logdet_pd(sym, "kld");
  const double tr = llt.solve(r_hat).trace().real();
  const double v = ld_model - logdet_pd(r_hat, "kld") + tr - static_cast<double>(r_hat.rows());
  return clamp_roundoff(v, r_hat.rows());
}

RVector score(const ParamVector& p, const CMatrix& r_hat, double samples) {
  require_positive_noise(p, "score");
  const Eigen::Index n = p.layout.size() - 1;
  const CMatrix rinv = woodbury(p).inverse;
  if (r_hat.rows() != rinv.rows() || r_hat.cols() != rinv.cols()) {
    throw InvalidInput("score: R_hat has the wrong size");
  }
  CMatrix e = rinv - rinv * r_hat * rinv;
  e = 0.5 * (e + e.adjoint()).eval();
  const CMatrix v = rank2_factors(p);
  const CMatrix ev = e * v.rightCols(n);
  RVector s(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = -samples * 2.0 * v.col(i).dot(ev.col(i)).real();
  s(n) = -samples * e.trace().real();
  return s;
}

namespace {

void canonicalize(ParamVector& p, double noise_floor) {
  const ParamLayout& l = p.layout;
  p.phi(l.noise()) = std::max(p.phi(l.noise()), noise_floor);
  for (int d = 0; d < l.sources; ++d) {
    p.phi(l.theta(d)) = wrap_angle(p.phi(l.theta(d)));
    if (p.phi(l.re(0, d)) < 0.0) {
      for (int m = 0; m < l.sensors; ++m) {
        p.phi(l.re(m, d)) = -p.phi(l.re(m, d));
        if (m >= 1) p.phi(l.im(m, d)) = -p.phi(l.im(m, d));
      }
    }
  }
}

ParamVector sorted_output(const ParamVector& p) {
  ModelParams mp = unpack(p);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(mp.theta.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return mp.theta(x) < mp.theta(y); });
  CMatrix a(mp.a.rows(), mp.a.cols());
  RVector theta(mp.theta.size());
  for (std::size_t d = 0; d < order.size(); ++d) {
    a.col(static_cast<Eigen::Index>(d)) = mp.a.col(order[d]);
    theta(static_cast<Eigen::Index>(d)) = mp.theta(order[d]);
  }
  return pack(a, theta, mp.noise_variance);
}

}  // namespace

FsaResult fsa_run(const ParamVector& phi0, const CMatrix& r_hat, double samples, const FsaOptions& opts) {
  require_positive_noise(phi0, "fsa_run");
  if (!(samples > 0.0)) throw InvalidInput("fsa_run: T must be positive");
  FsaResult res;
  ParamVector cur = phi0;
  canonicalize(cur, opts.noise_floor);
  double loglik = log_likelihood(cur, r_hat, samples);
  res.loglik_history.push_back(loglik);

  while (res.iterations < opts.max_iterations) {
    const RVector s = score(cur, r_hat, samples);
    const FisherInfo info = fim(cur, samples);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(info.j);
    const RVector& lam = es.eigenvalues();
    const double top = lam.cwiseAbs().maxCoeff();
    const bool singular = !(lam(0) > 0.0) || top / lam(0) > 1e12;
    if (singular) res.used_pseudo_inverse = true;
    RVector inv(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) inv(i) = (lam(i) > 1e-12 * top) ? 1.0 / lam(i) : 0.0;
    const RVector step = es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * s));
    const double rel = step.norm() / std::max(cur.phi.norm(), std::numeric_limits<double>::min());

    double mu = 1.0;
    bool accepted = false;
    ParamVector cand = cur;
    double cand_ll = loglik;
    for (int h = 0; h <= opts.max_halvings; ++h, mu *= 0.5) {
      cand.phi = cur.phi + mu * step;
      canonicalize(cand, opts.noise_floor);
      cand_ll = log_likelihood(cand, r_hat, samples);
      if (cand_ll >= loglik) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (rel < opts.stall_tolerance) {
        res.converged = true;
      } else {
        res.step_rejected = true;
      }
      break;
    }
    cur = std::move(cand);
    loglik = cand_ll;
    res.loglik_history.push_back(loglik);
    ++res.iterations;
    if (rel < opts.step_tolerance) {
      res.converged = true;
      break;
    }
  }
  res.phi = sorted_output(cur);
  return res;
}

}  // namespace avsdoa
