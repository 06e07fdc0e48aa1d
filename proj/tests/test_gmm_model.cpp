#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rntr/gmm_model.hpp"
#include "test_util.hpp"

using namespace rntr;
using testutil::random_params;
using testutil::random_points;

TEST_CASE("augment") {
  Matrix x(1, 2);
  x << 1, 2;
  const Dataset d = augment(x);
  Matrix expected(1, 3);
  expected << 1, 2, 1;
  CHECK(d.augmented() == expected);

  const Dataset z(Matrix::Zero(3, 2));
  CHECK(z.augmented().col(2) == Vector::Ones(3));
  CHECK(z.augmented().leftCols(2) == z.points());
  CHECK_THROWS_AS(Dataset(Matrix(0, 2)), Error);
}

TEST_CASE("forward transform examples") {
  GmmParams p;
  p.weights = Vector::Ones(1);
  p.means = {Vector::Zero(3)};
  p.covariances = {SpdMatrix::identity(3)};
  const ThetaPoint t = forward_transform(p);
  CHECK(t.s(0).matrix() == Matrix::Identity(4, 4));
  CHECK(t.eta().size() == 0);

  GmmParams q;
  q.weights = Eigen::Vector2d(0.5, 0.5);
  q.means = {Vector::Zero(1), Vector::Ones(1)};
  q.covariances = {SpdMatrix::identity(1), SpdMatrix::identity(1)};
  CHECK(forward_transform(q).eta()(0) == doctest::Approx(0.0));
  q.weights = Eigen::Vector2d(0.8, 0.2);
  CHECK(forward_transform(q).eta()(0) == doctest::Approx(std::log(4.0)).epsilon(1e-14));

  // Block structure [[Sigma + mu mu^T, mu], [mu^T, 1]].
  std::mt19937_64 rng(2);
  const GmmParams r = random_params(3, 2, rng);
  const ThetaPoint tr = forward_transform(r);
  const Matrix& s = tr.s(1).matrix();
  CHECK((s.topLeftCorner(3, 3) - r.covariances[1].matrix() - r.means[1] * r.means[1].transpose()).norm() < 1e-13);
  CHECK((s.topRightCorner(3, 1) - r.means[1]).norm() == 0.0);
  CHECK(s(3, 3) == 1.0);
}

TEST_CASE("backward transform") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const GmmParams p = random_params(1 + t % 4, 1 + t % 3, rng);
    const GmmParams q = backward_transform(forward_transform(p));
    CHECK((q.weights - p.weights).cwiseAbs().maxCoeff() <= 1e-12);
    for (int j = 0; j < p.num_components(); ++j) {
      const auto jj = static_cast<size_t>(j);
      CHECK((q.means[jj] - p.means[jj]).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, p.means[jj].norm()));
      CHECK((q.covariances[jj].matrix() - p.covariances[jj].matrix()).cwiseAbs().maxCoeff() <=
            1e-12 * std::max(1.0, p.covariances[jj].matrix().norm() + p.means[jj].squaredNorm()));
    }
  }

  const ThetaPoint id({SpdMatrix::identity(3), SpdMatrix::identity(3), SpdMatrix::identity(3)}, Vector::Zero(2));
  const GmmParams g = backward_transform(id);
  CHECK((g.weights - Vector::Constant(3, 1.0 / 3)).norm() < 1e-15);
  CHECK(g.means[0].norm() == 0.0);
  CHECK(g.covariances[0].matrix() == Matrix::Identity(2, 2));

  // Scaled block: S[d,d] != 1 is divided out.
  const ThetaPoint scaled({SpdMatrix(4.0 * Matrix::Identity(3, 3))}, Vector(0));
  CHECK(backward_transform(scaled).covariances[0].matrix().isApprox(Matrix::Identity(2, 2)));
}

TEST_CASE("component density") {
  Vector y(2);
  y << 0, 1;
  CHECK(component_density(y, SpdMatrix::identity(2)) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-14));

  // Reformulation identity against the textbook Gaussian pdf.
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const GmmParams p = random_params(3, 1, rng);
    const ThetaPoint th = forward_transform(p);
    const Vector x = testutil::random_matrix(3, 1, rng);
    Vector yy(4);
    yy << x, 1.0;
    const double oracle = testutil::gaussian_pdf(x, p.means[0], p.covariances[0].matrix());
    CHECK(std::abs(component_density(yy, th.s(0)) - oracle) <= 1e-12 * std::max(1.0, oracle));
  }

  Vector far = Vector::Constant(4, 1e3);
  far(3) = 1.0;
  const double lq = log_component_density(far, SpdMatrix::identity(4));
  CHECK(std::isfinite(lq));
  CHECK(lq < -1e5);
}

TEST_CASE("responsibilities") {
  std::mt19937_64 rng(8);
  const Dataset data(random_points(30, 2, rng));
  const ThetaPoint same({SpdMatrix::identity(3), SpdMatrix::identity(3), SpdMatrix::identity(3)}, Vector::Zero(2));
  const Responsibilities r = responsibilities(same, data);
  CHECK((r.f.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);

  Matrix logs(2, 2);
  logs << 0.0, -1e6, 5.0, 5.0 - 1e6;
  const Responsibilities sat = responsibilities_from_logs(logs);
  CHECK(sat.f(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sat.f(1, 0) == doctest::Approx(1.0).epsilon(1e-6));

  const GmmParams p = random_params(2, 3, rng);
  const Responsibilities rr = responsibilities(forward_transform(p), data);
  CHECK((rr.f.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
  CHECK(rr.f.minCoeff() >= 0.0);
  CHECK(rr.f.maxCoeff() <= 1.0);

  // Shift invariance of each row.
  Matrix lw = log_weighted_densities(forward_transform(p), data);
  Matrix shifted = lw;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.row(i).array() += 37.0 * i;
  CHECK((responsibilities_from_logs(lw).f - responsibilities_from_logs(shifted).f).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("objective") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 10; ++t) {
    const GmmParams p = random_params(2, 3, rng);
    const Matrix x = random_points(25, 2, rng);
    const double oracle = testutil::classical_log_likelihood(p, x);
    const double ours = objective(forward_transform(p), Dataset(x));
    CHECK(std::abs(ours - oracle) <= 1e-10 * std::abs(oracle));
    CHECK(std::abs(log_likelihood(p, Dataset(x)) - oracle) <= 1e-10 * std::abs(oracle));
  }

  Matrix one = Matrix::Zero(1, 1);
  const ThetaPoint id({SpdMatrix::identity(2)}, Vector(0));
  CHECK(objective(id, Dataset(one)) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(objective(id, Dataset(one)) == doctest::Approx(-0.918939).epsilon(1e-6));

  const GmmParams p = random_params(2, 2, rng);
  const Matrix x = random_points(10, 2, rng);
  Matrix twice(20, 2);
  twice << x, x;
  const ThetaPoint th = forward_transform(p);
  CHECK(objective(th, Dataset(twice)) == doctest::Approx(2.0 * objective(th, Dataset(x))).epsilon(1e-13));
}

TEST_CASE("penalty terms") {
  PenaltyConfig cfg = PenaltyConfig::none(2);
  cfg.beta = 0.3;
  cfg.gamma = 0.0;
  cfg.rho = 0.3;
  // psi = I (lambda = 0, kappa = 1 with gamma/beta Lambda = I).
  cfg.psi = SpdMatrix::identity(3);
  CHECK(penalty_matrix_term(SpdMatrix::identity(3), cfg) == doctest::Approx(-0.3 * 3 / 2));

  // The Wishart mode S = (beta / rho) psi maximizes psi(S): nearby points are lower.
  std::mt19937_64 rng(12);
  cfg.rho = 0.9;
  cfg.psi = SpdMatrix(testutil::random_spd(3, rng));
  const SpdMatrix mode(cfg.beta / cfg.rho * cfg.psi.matrix());
  const double at_mode = penalty_matrix_term(mode, cfg);
  for (int t = 0; t < 10; ++t) {
    Matrix pert = testutil::random_sym(3, rng);
    const SpdMatrix near(mode.matrix() + 1e-3 * pert);
    CHECK(penalty_matrix_term(near, cfg) < at_mode);
  }

  CHECK(penalty_weight_term(Vector::Zero(2), 2.0) == doctest::Approx(-2.0 * 3 * std::log(3.0)));
  CHECK(penalty_weight_term(Vector::Constant(1, -50.0), 1.0) < -45.0);
  CHECK(penalty_weight_term(Vector::Constant(1, -500.0), 1.0) < -495.0);
  CHECK(penalty_weight_term(Vector::Constant(2, 3.3), 0.0) == 0.0);
}

TEST_CASE("penalized objective") {
  std::mt19937_64 rng(14);
  const Dataset data(random_points(20, 2, rng));
  const GmmParams p = random_params(2, 3, rng);
  const ThetaPoint th = forward_transform(p);
  CHECK(penalized_objective(th, data, PenaltyConfig::none(2)) == objective(th, data));

  // Permutation invariance.
  const PenaltyConfig cfg = build_penalty_config(data);
  GmmParams perm;
  perm.weights = Eigen::Vector3d(p.weights(2), p.weights(0), p.weights(1));
  perm.means = {p.means[2], p.means[0], p.means[1]};
  perm.covariances = {p.covariances[2], p.covariances[0], p.covariances[1]};
  CHECK(std::abs(penalized_objective(forward_transform(perm), data, cfg) - penalized_objective(th, data, cfg)) <= 1e-10);

  // Bounded above: random search stays below a finite level.
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double best = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 10000; ++t) {
    std::vector<SpdMatrix> blocks;
    for (int j = 0; j < 3; ++j) {
      Matrix a = testutil::random_matrix(3, 3, rng) * std::exp(u(rng));
      blocks.emplace_back(a * a.transpose() + 1e-8 * Matrix::Identity(3, 3));
    }
    const ThetaPoint r(std::move(blocks), Eigen::Vector2d(u(rng), u(rng)));
    best = std::max(best, penalized_objective(r, data, cfg));
  }
  CHECK(std::isfinite(best));
}

TEST_CASE("build_penalty_config") {
  std::mt19937_64 rng(16);
  Matrix x = random_points(40, 3, rng);
  // Standardize exactly: zero mean, unit sample variance.
  x = x.rowwise() - x.colwise().mean();
  for (int j = 0; j < 3; ++j) x.col(j) /= std::sqrt(x.col(j).squaredNorm() / 39.0);
  const PenaltyConfig cfg = build_penalty_config(Dataset(x));
  CHECK(cfg.lambda_vec.norm() < 1e-14);
  CHECK((cfg.lambda_mat - Matrix::Identity(3, 3)).norm() < 1e-12);
  Matrix expected = Matrix::Zero(4, 4);
  expected.topLeftCorner(3, 3) = (cfg.gamma / cfg.beta) * Matrix::Identity(3, 3);
  expected(3, 3) = cfg.kappa;
  CHECK((cfg.psi.matrix() - expected).norm() < 1e-12);
  CHECK(std::abs(cfg.rho - cfg.gamma * (3 + cfg.nu + 1) - cfg.beta) < 1e-12);
  CHECK(cfg.gamma == 0.01);
  CHECK(cfg.nu == 3.0);
  CHECK(cfg.zeta == 1.0);
  CHECK_NOTHROW(check_penalty_config(cfg));

  for (int d : {1, 2, 5, 10}) {
    CHECK_NOTHROW(build_penalty_config(Dataset(random_points(50, d, rng))));
  }
  PenaltyOverrides full;
  full.full_covariance = true;
  const PenaltyConfig f = build_penalty_config(Dataset(random_points(50, 3, rng)), full);
  CHECK(f.lambda_mat(0, 1) != 0.0);

  CHECK_THROWS_AS(build_penalty_config(Dataset(Matrix::Ones(1, 2))), Error);
  Matrix flat = random_points(10, 2, rng);
  flat.col(1).setConstant(3.0);
  try {
    build_penalty_config(Dataset(flat));
    FAIL("expected DegenerateData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateData);
  }
}

TEST_CASE("pairwise sum is exact on integers and order-stable") {
  std::vector<double> v(1001);
  for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(pairwise_sum(v.data(), 1001) == 500500.0);
  CHECK(pairwise_sum(v.data(), 0) == 0.0);
  Vector big(3);
  big << 1000.0, 1000.0, -1e9;
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
}
