#include <doctest.h>

#include "avsdoa/roots.hpp"
#include "helpers.hpp"

using namespace avsdoa;
using namespace testutil;

namespace {

CovarianceStats exact_stats(const CMatrix& a, const RVector& theta, double s2 = 0.2) {
  return CovarianceStats(exact_ry(a, theta, s2), s2);
}

CpdState make_state(const CMatrix& a, const RVector& theta) {
  CpdState s;
  s.a = a;
  s.theta = theta;
  return s;
}

std::vector<double> grid_sign_changes(const DcConstants& k, double step) {
  std::vector<double> out;
  double prev_t = -kPi;
  double prev = k.derivative(prev_t);
  const long n = static_cast<long>(2 * kPi / step);
  for (long i = 1; i <= n; ++i) {
    const double t = -kPi + static_cast<double>(i) * step;
    const double f = k.derivative(t);
    if ((prev < 0.0) != (f < 0.0) || prev == 0.0) out.push_back(prev == 0.0 ? prev_t : 0.5 * (prev_t + t));
    prev = f;
    prev_t = t;
  }
  return out;
}

}  // namespace

TEST_CASE("real polynomial roots") {
  // (x-1)(x+2)(x-3) = x^3 - 2x^2 - 5x + 6
  const auto r = real_polynomial_roots({6, -5, -2, 1});
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(-2.0));
  CHECK(r[1] == doctest::Approx(1.0));
  CHECK(r[2] == doctest::Approx(3.0));
  CHECK(real_polynomial_roots({1, 0, 1}).empty());
  // vanishing leading term deflates
  const auto q = real_polynomial_roots({-4, 0, 1, 1e-20});
  REQUIRE(q.size() == 2);
  CHECK(q[0] == doctest::Approx(-2.0));
}

TEST_CASE("cls cost reference values") {
  Rng rng(1);
  const CMatrix a = random_steering(4, 2, rng);
  const RVector theta = random_doas(2, rng);
  const CovarianceStats st = exact_stats(a, theta);
  CHECK(cls_cost(theta, a, st) < 1e-20);
  CHECK(cls_cost(theta, CMatrix::Zero(4, 2), st) == doctest::Approx(st.rx().squaredNorm()));

  for (int k = 0; k < 20; ++k) {
    const CovarianceStats r(random_hermitian(6, rng), 0.1);
    const CMatrix a1 = random_complex(2, 1, rng);
    const RVector t1 = random_doas(1, rng);
    const CMatrix bar = avs_manifold(a1, t1).matrix;
    const double brute = (bar * bar.adjoint() - r.rx()).squaredNorm();
    CHECK(rel_err(cls_cost(t1, a1, r), brute) < 1e-12);
  }
  CHECK_THROWS_AS(cls_cost(theta, CMatrix::Zero(3, 2), st), InvalidInput);
}

TEST_CASE("dc constants reference values") {
  const CovarianceStats zero(CMatrix::Identity(6, 6), 1.0);
  RVector t(1);
  t << 0.3;
  const DcConstants k0 = dc_constants(0, t, CMatrix::Zero(2, 1), zero);
  CHECK(k0.magnitude() == 0.0);

  CMatrix rx = CMatrix::Zero(3, 3);
  rx(0, 2) = rx(2, 0) = 1.0;
  const CovarianceStats st(rx, 0.0);
  CMatrix a(1, 1);
  a(0, 0) = 1.0;
  const DcConstants k = dc_constants(0, t, a, st);
  CHECK(k.alpha == doctest::Approx(-4.0));
  CHECK(k.beta == 0.0);
  CHECK(k.gamma == 0.0);
  CHECK(k.delta == 0.0);
  CHECK_THROWS_AS(dc_constants(1, t, a, st), InvalidInput);
}

TEST_CASE("dc derivative matches finite differences of the cost") {
  Rng rng(2);
  for (int inst = 0; inst < 100; ++inst) {
    const int m = 2 + inst % 4;
    const int dc = 1 + inst % 3;
    const CovarianceStats st(random_hermitian(3 * m, rng), 0.3);
    const CMatrix a = random_complex(m, dc, rng);
    const RVector theta = random_doas(dc, rng, 0.0);
    for (int d = 0; d < dc; ++d) {
      const DcConstants k = dc_constants(d, theta, a, st);
      const double h = 1e-5;
      RVector tp = theta, tm = theta;
      tp(d) += h;
      tm(d) -= h;
      const double fd = (cls_cost(tp, a, st) - cls_cost(tm, a, st)) / (2 * h);
      const double cf = k.derivative(theta(d));
      CHECK(std::abs(fd - cf) <= 1e-6 * std::max(std::abs(cf), 1e-3 * k.magnitude()));
    }
  }
}

TEST_CASE("quartic is the Weierstrass image of the derivative") {
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const DcConstants k{n(rng), n(rng), n(rng), n(rng)};
    const auto q = dc_quartic(k);
    const double th = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    const double tau = std::tan(th / 2);
    double p = 0.0;
    for (int j = 4; j >= 0; --j) p = p * tau + q[static_cast<std::size_t>(j)];
    const double w = (1 + tau * tau) * (1 + tau * tau);
    CHECK(std::abs(p - w * k.derivative(th)) < 1e-10 * w * k.magnitude());
  }
}

TEST_CASE("stationary angles reference values") {
  const auto g = dc_stationary_angles({0, 0, 1, 0});
  REQUIRE(g.size() == 4);
  CHECK(g[0] == doctest::Approx(-3 * kPi / 4));
  CHECK(g[1] == doctest::Approx(-kPi / 4));
  CHECK(g[2] == doctest::Approx(kPi / 4));
  CHECK(g[3] == doctest::Approx(3 * kPi / 4));
  const auto a = dc_stationary_angles({1, 0, 0, 0});
  REQUIRE(a.size() == 2);
  CHECK(a[0] == doctest::Approx(-kPi / 2));
  CHECK(a[1] == doctest::Approx(kPi / 2));
  CHECK(dc_stationary_angles({0, 0, 0, 0}).empty());
  // theta = -pi is stationary when the quartic term vanishes
  const auto b = dc_stationary_angles({0, 1, 0, 0});
  REQUIRE(b.size() == 2);
  CHECK(b[0] == doctest::Approx(-kPi));
  CHECK(b[1] == doctest::Approx(0.0));

  const DcConstants k{0.3, -1.1, 0.7, 0.2};
  const auto roots = dc_stationary_angles(k);
  const auto grid = grid_sign_changes(k, 1e-6);
  REQUIRE(roots.size() == grid.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    CHECK(std::abs(roots[i] - grid[i]) < 1e-6);
    CHECK(std::abs(k.derivative(roots[i])) < dc_residual_bound(k));
  }
}

TEST_CASE("modified dc sweep") {
  Rng rng(4);
  const RVector theta = DoaVector::from_degrees({-56, 43, 71}).radians();
  ArrayScenario ula;
  ula.sensors = 7;
  const CMatrix a = ula.steering(theta);
  const CovarianceStats st = exact_stats(a, theta);
  const CpdState same = modified_dc_sweep(make_state(a, theta), st);
  CHECK((same.theta - theta).cwiseAbs().maxCoeff() < 1e-9);

  {
    // orthogonal columns decouple the DOAs: one sweep is exact
    const Eigen::HouseholderQR<CMatrix> qr(random_complex(5, 3, rng));
    const CMatrix q = CMatrix(qr.householderQ()).leftCols(3) * 2.0;
    const CovarianceStats so = exact_stats(q, theta);
    CpdState s = make_state(q, RVector(theta.array() + 0.1));
    s = modified_dc_sweep(std::move(s), so);
    for (int d = 0; d < 3; ++d) CHECK(std::abs(wrap_angle(s.theta(d) - theta(d))) < 1e-8);
  }
  // overlapping columns: coordinate-wise minimization contracts linearly through the
  // column overlaps |a_d^H a_k|^2
  RVector off = theta.array() + 0.1;
  CpdState s = make_state(a, off);
  double err = 0.0;
  for (int i = 0; i < 8; ++i) {
    s = modified_dc_sweep(std::move(s), st);
    const double e = (s.theta - theta).cwiseAbs().maxCoeff();
    if (i > 0) CHECK(e < err);
    err = e;
  }
  CHECK(err < 1e-8);

  for (int i = 0; i < 50; ++i) {
    const CovarianceStats r(random_hermitian(12, rng), 0.5);
    const CpdState x = make_state(random_complex(4, 2, rng), random_doas(2, rng, 0.0));
    const double before = cls_cost(x.theta, x.a, r);
    const CpdState y = modified_dc_sweep(x, r, 2);
    CHECK(y.cost <= before + 1e-10);
    CHECK(y.cost == doctest::Approx(cls_cost(y.theta, y.a, r)));
  }
  CHECK_THROWS_AS(modified_dc_sweep(make_state(a, theta), st, 0), InvalidInput);
}

TEST_CASE("ac column update") {
  Rng rng(5);
  const CMatrix a = random_steering(5, 3, rng);
  const RVector theta = random_doas(3, rng);
  const CovarianceStats st = exact_stats(a, theta);
  for (int d = 0; d < 3; ++d) {
    const CpdState s = ac_column_update(make_state(a, theta), st, d);
    const cplx c = s.a.col(d).dot(a.col(d));
    CHECK(std::abs(std::abs(c) - a.col(d).squaredNorm()) < 1e-9 * a.col(d).squaredNorm());
    CHECK((s.a.col(d) - a.col(d)).norm() < 1e-9 * a.col(d).norm());
  }

  const CMatrix a1 = random_complex(6, 1, rng);
  const RVector t1 = random_doas(1, rng);
  const CovarianceStats s1 = exact_stats(a1, t1);
  const CpdState r1 = ac_column_update(make_state(random_complex(6, 1, rng), t1), s1, 0);
  const double corr = std::abs(r1.a.col(0).dot(a1.col(0))) / (r1.a.norm() * a1.norm());
  CHECK(corr > 1 - 1e-8);
  CHECK(r1.a.norm() == doctest::Approx(a1.norm()));

  for (int i = 0; i < 50; ++i) {
    const CovarianceStats r(random_hermitian(12, rng), 0.5);
    const CpdState x = make_state(random_complex(4, 2, rng), random_doas(2, rng, 0.0));
    const double before = cls_cost(x.theta, x.a, r);
    const CpdState y = ac_column_update(x, r, i % 2);
    CHECK(y.cost <= before + 1e-10);
  }
}

TEST_CASE("svec") {
  const RVector v = svec(CMatrix::Identity(2, 2));
  REQUIRE(v.size() == 4);
  CHECK((v - Eigen::Vector4d(1, 1, 0, 0)).norm() == 0.0);
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const CMatrix q1 = random_hermitian(5, rng);
    const CMatrix q2 = random_hermitian(5, rng);
    CHECK((unsvec(svec(q1)) - q1).cwiseAbs().maxCoeff() < 1e-15);
    const double tr = (q1 * q2).trace().real();
    CHECK(std::abs(svec(q1).dot(svec(q2)) - tr) < 1e-12 * q1.norm() * q2.norm());
  }
  CHECK_THROWS_AS(svec(random_complex(3, 3, rng)), InvalidInput);
  CHECK_THROWS_AS(unsvec(RVector::Zero(5)), InvalidInput);
}

TEST_CASE("extract doa") {
  CHECK(extract_doa(1, 0) == 0.0);
  CHECK(extract_doa(0, 1) == doctest::Approx(kPi / 2));
  CHECK(extract_doa(std::cos(deg2rad(-56)), std::sin(deg2rad(-56))) == doctest::Approx(deg2rad(-56)));
  CHECK(extract_doa(-1, 0) == doctest::Approx(-kPi));
  CHECK_THROWS_AS(extract_doa(0, 0), InvalidInput);
}

TEST_CASE("ejd initialization on exact statistics") {
  Rng rng(7);
  const RVector theta = DoaVector::from_degrees({-56, 43, 71}).radians();
  const CMatrix a = random_steering(7, 3, rng);
  const CovarianceStats st = exact_stats(a, theta);
  const CpdState e = ejd_init(st, 3);
  for (int d = 0; d < 3; ++d) CHECK(std::abs(e.theta(d) - theta(d)) < 1e-6);

  // source order in the ground truth does not matter
  const std::vector<int> perm{2, 0, 1};
  CMatrix ap(7, 3);
  RVector tp(3);
  for (int d = 0; d < 3; ++d) {
    ap.col(d) = a.col(perm[static_cast<std::size_t>(d)]);
    tp(d) = theta(perm[static_cast<std::size_t>(d)]);
  }
  const CpdState ep = ejd_init(CovarianceStats(exact_ry(ap, tp, 0.2), 0.2), 3);
  CHECK((ep.theta - e.theta).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((ep.a - e.a).cwiseAbs().maxCoeff() < 1e-7);

  const CMatrix a1 = random_complex(4, 1, rng);
  const RVector t1 = random_doas(1, rng);
  const CpdState e1 = ejd_init(exact_stats(a1, t1), 1);
  CHECK(std::abs(e1.a.col(0).dot(a1.col(0))) / (e1.a.norm() * a1.norm()) > 1 - 1e-8);
  CHECK(std::abs(wrap_angle(e1.theta(0) - t1(0))) < 1e-6);
  CHECK_THROWS_AS(ejd_init(st, 7), InvalidInput);
}

TEST_CASE("normalize is idempotent and enforces the convention") {
  Rng rng(8);
  CpdState s = make_state(random_complex(4, 3, rng), RVector::Zero(3));
  s.theta << 2.0, -1.0, 4.0;
  const CpdState n1 = normalize(s);
  const CpdState n2 = normalize(n1);
  CHECK((n1.a - n2.a).norm() == 0.0);
  CHECK((n1.theta - n2.theta).norm() == 0.0);
  for (int d = 0; d < 3; ++d) {
    CHECK(n1.a(0, d).imag() == 0.0);
    CHECK(n1.a(0, d).real() >= 0.0);
  }
  CHECK(n1.theta(0) < n1.theta(1));
  CHECK(n1.theta(1) < n1.theta(2));
}

TEST_CASE("acdc on exact statistics recovers the truth") {
  Rng rng(9);
  const RVector theta = DoaVector::from_degrees({-56, 43, 71}).radians();
  const CMatrix a = random_steering(7, 3, rng);
  const CovarianceStats st = exact_stats(a, theta);
  const CpdState r = acdc_run(st, ejd_init(st, 3));
  CHECK(r.cost < 1e-12 * st.rx().squaredNorm());
  for (int d = 0; d < 3; ++d) CHECK(std::abs(r.theta(d) - theta(d)) < 1e-6);
  for (std::size_t i = 1; i < r.cost_history.size(); ++i)
    CHECK(r.cost_history[i] <= r.cost_history[i - 1] + 1e-10);
}

TEST_CASE("noiseless identifiability over random regular arrays") {
  Rng rng(10);
  for (int inst = 0; inst < 30; ++inst) {
    const int m = 4 + inst % 5;
    const int dc = 2 + inst % 2;
    CAPTURE(inst);
    const CMatrix a = random_steering(m, dc, rng);
    const RVector theta = random_doas(dc, rng);
    const CovarianceStats st = exact_stats(a, theta);
    const CpdState r = acdc_run(st, ejd_init(st, dc));
    for (int d = 0; d < dc; ++d) CHECK(std::abs(wrap_angle(r.theta(d) - theta(d))) < 1e-6);
  }
}

TEST_CASE("acdc cost history is non-increasing on noisy data") {
  Rng rng(11);
  for (int run = 0; run < 20; ++run) {
    const CMatrix a = random_steering(5, 2, rng);
    const RVector theta = random_doas(2, rng);
    const CMatrix man = avs_manifold(a, theta).matrix;
    const CMatrix s = generate_sources(SourceKind::CircularComplexNormal, 2, 60, rng);
    const CMatrix y = synthesize(man, s, {NoiseKind::CircularComplexNormal, 0.5}, rng);
    const CovarianceStats st = compute_stats(y, 2);
    const CpdState r = acdc_run(st, ejd_init(st, 2));
    for (std::size_t i = 1; i < r.cost_history.size(); ++i)
      CHECK(r.cost_history[i] <= r.cost_history[i - 1] + 1e-10);
    CHECK(r.cost == doctest::Approx(cls_cost(r.theta, r.a, st)));
  }
}
