#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"

using namespace avsdoa;
using namespace testutil;

TEST_CASE("empirical covariance") {
  Rng rng(1);
  const CMatrix y1 = random_complex(6, 1, rng);
  CHECK((empirical_covariance(y1) - y1 * y1.adjoint()).norm() < 1e-14);
  CHECK(empirical_covariance(CMatrix::Zero(6, 10)).norm() == 0.0);
  CHECK_THROWS_AS(empirical_covariance(CMatrix(6, 0)), InvalidInput);
  const CMatrix y = random_complex(6, 40, rng);
  const CMatrix r = empirical_covariance(y);
  CHECK(hermitian_defect(r) == 0.0);
  CHECK((r - y * y.adjoint() / 40.0).norm() < 1e-13);
}

TEST_CASE("empirical covariance converges as 1/sqrt(T)") {
  Rng rng(2);
  const RVector theta = DoaVector::from_degrees({-20, 50}).radians();
  const CMatrix a = random_steering(3, 2, rng);
  const CMatrix man = avs_manifold(a, theta).matrix;
  const CMatrix ry = model_covariance(man, 0.5);
  auto mean_dev = [&](int t) {
    double acc = 0.0;
    for (int k = 0; k < 8; ++k) {
      const CMatrix s = generate_sources(SourceKind::CircularComplexNormal, 2, t, rng);
      const CMatrix y = synthesize(man, s, {NoiseKind::CircularComplexNormal, 0.5}, rng);
      acc += (empirical_covariance(y) - ry).cwiseAbs().maxCoeff();
    }
    return acc / 8.0;
  };
  const double ratio = mean_dev(1000) / mean_dev(100000);
  CHECK(ratio > 5.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("model covariance") {
  Rng rng(3);
  CHECK((model_covariance(CMatrix::Zero(6, 2), 0.7) - 0.7 * CMatrix::Identity(6, 6)).norm() < 1e-15);
  const CVector abar = random_complex(6, 1, rng);
  const CMatrix r1 = model_covariance(abar, 0.0);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(r1);
  CHECK(std::abs(es.eigenvalues()(4)) < 1e-12);
  CHECK(es.eigenvalues()(5) == doctest::Approx(abar.squaredNorm()));

  const RVector theta = DoaVector::from_degrees({-56, 43, 71}).radians();
  ArrayScenario s;
  s.sensors = 7;
  const CMatrix a = s.steering(theta);
  const double s2 = 0.1;
  const CMatrix r = model_covariance(avs_manifold(a, theta).matrix, s2);
  CMatrix block = s2 * CMatrix::Identity(21, 21);
  for (int d = 0; d < 3; ++d) {
    const Eigen::Matrix3d f = f_matrix(theta(d));
    const CMatrix aa = a.col(d) * a.col(d).adjoint();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) block.block(7 * i, 7 * j, 7, 7) += f(i, j) * aa;
  }
  CHECK((r - block).norm() < 1e-12);

  for (int k = 0; k < 20; ++k) {
    const CMatrix m = random_complex(9, 2, rng);
    const double v = 0.01 * k;
    Eigen::SelfAdjointEigenSolver<CMatrix> e(model_covariance(m, v));
    CHECK(e.eigenvalues()(0) >= v - 1e-10);
  }
}

TEST_CASE("noise variance estimate") {
  CHECK(estimate_noise_variance(2.0 * CMatrix::Identity(6, 6), 0) == doctest::Approx(2.0));
  CHECK(estimate_noise_variance(2.0 * CMatrix::Identity(6, 6), 4) == doctest::Approx(2.0));
  RVector d(6);
  d << 5, 5, 1, 1, 1, 1;
  CHECK(estimate_noise_variance(d.cast<cplx>().asDiagonal().toDenseMatrix(), 2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(estimate_noise_variance(CMatrix::Identity(6, 6), 6), InvalidInput);
  CMatrix nonh = CMatrix::Identity(6, 6);
  nonh(0, 1) = 1.0;
  CHECK_THROWS_AS(estimate_noise_variance(nonh, 1), InvalidInput);

  Rng rng(4);
  const CMatrix v = generate_noise({NoiseKind::CircularComplexNormal, 0.3}, 9, 10000, rng);
  CHECK(estimate_noise_variance(empirical_covariance(v), 1) == doctest::Approx(0.3).epsilon(0.05));

  // unitary invariance
  const CMatrix r = random_pd(9, rng);
  const Eigen::HouseholderQR<CMatrix> qr(random_complex(9, 9, rng));
  const CMatrix q = qr.householderQ();
  CHECK(estimate_noise_variance(q * r * q.adjoint(), 3) == doctest::Approx(estimate_noise_variance(r, 3)));
}

TEST_CASE("denoising and slabs") {
  Rng rng(5);
  const CMatrix ry = random_pd(9, rng);
  const CovarianceStats z = denoise(ry, 0.0);
  CHECK((z.rx() - ry).norm() < 1e-14);

  const CMatrix h = random_hermitian(9, rng);
  const CovarianceStats st = denoise(h, 0.2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK((st.slab(i, j) - st.slab(j, i).adjoint()).norm() == 0.0);
  CHECK(st.sensors() == 3);
  CHECK_THROWS_AS(st.slab(3, 0), std::out_of_range);
  CHECK_THROWS_AS(st.slab(0, -1), std::out_of_range);
  CHECK((st.slab(Channel::VelocityX, Channel::VelocityY) - st.slab(1, 2)).norm() == 0.0);

  const CMatrix a = random_steering(4, 1, rng);
  RVector t0(1);
  t0 << 0.0;
  const CovarianceStats ex = denoise(exact_ry(a, t0, 0.4), 0.4);
  CHECK(ex.slab(0, 2).norm() < 1e-14);
  CHECK((ex.slab(0, 1) - a * a.adjoint()).norm() < 1e-13);

  const RVector theta = random_doas(3, rng);
  const CMatrix a3 = random_steering(4, 3, rng);
  const CovarianceStats e3 = denoise(exact_ry(a3, theta, 0.3), 0.3);
  CMatrix want = CMatrix::Zero(4, 4);
  for (int d = 0; d < 3; ++d) want += 0.5 * std::sin(2 * theta(d)) * a3.col(d) * a3.col(d).adjoint();
  CHECK((e3.slab(1, 2) - want).norm() < 1e-12);
  const CMatrix bar = avs_manifold(a3, theta).matrix;
  CHECK((e3.rx() - bar * bar.adjoint()).norm() < 1e-12);

  // the (3M)^2 flattening of the exact tensor has rank <= D
  const int m = 4;
  CMatrix flat(9, m * m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const CMatrix sl = e3.slab(i, j);
      flat.row(3 * i + j) = Eigen::Map<const Eigen::RowVectorXcd>(sl.data(), m * m);
    }
  Eigen::JacobiSVD<CMatrix> svd(flat);
  CHECK(svd.singularValues()(3) < 1e-8 * e3.rx().norm());
}

TEST_CASE("gaussian error covariance closed form") {
  const CMatrix id = CMatrix::Identity(6, 6);
  CHECK(std::abs(gaussian_error_cov(id, 50.0, 2, 2, 2, 2).first - 1.0 / 50.0) < 1e-15);
  CHECK(std::abs(gaussian_error_cov(id, 50.0, 1, 2, 3, 2).first) == 0.0);
  CHECK(std::abs(gaussian_error_cov(id, 50.0, 1, 2, 1, 2).first - 1.0 / 50.0) < 1e-15);
  Rng rng(6);
  const CMatrix r = random_pd(6, rng);
  for (int i = 0; i < 6; ++i) {
    const auto a = gaussian_error_cov(r, 10.0, i, (i + 1) % 6, (i + 2) % 6, (i + 4) % 6);
    const auto b = gaussian_error_cov(r, 1000.0, i, (i + 1) % 6, (i + 2) % 6, (i + 4) % 6);
    CHECK(std::abs(a.first * 10.0 - b.first * 1000.0) < 1e-13);
    CHECK(std::abs(a.second * 10.0 - b.second * 1000.0) < 1e-13);
  }
  CHECK_THROWS_AS(gaussian_error_cov(r, 0.0, 0, 0, 0, 0), InvalidInput);
  CHECK_THROWS_AS(gaussian_error_cov(r, 1.0, 6, 0, 0, 0), std::out_of_range);
}
