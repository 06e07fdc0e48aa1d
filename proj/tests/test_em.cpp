#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rntr/em.hpp"
#include "rntr/experiments.hpp"
#include "test_util.hpp"

using namespace rntr;

namespace {

// One classical EM step written from the textbook update rules.
GmmParams classical_em_step(const GmmParams& p, const Matrix& x) {
  const int K = p.num_components();
  const Eigen::Index m = x.rows();
  Matrix r(m, K);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int j = 0; j < K; ++j)
      r(i, j) = p.weights(j) * testutil::gaussian_pdf(x.row(i).transpose(), p.means[j], p.covariances[j].matrix());
    r.row(i) /= r.row(i).sum();
  }
  GmmParams out;
  out.weights = Vector(K);
  for (int j = 0; j < K; ++j) {
    const double n = r.col(j).sum();
    out.weights(j) = n / static_cast<double>(m);
    const Vector mu = x.transpose() * r.col(j) / n;
    Matrix cov = Matrix::Zero(x.cols(), x.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vector dv = x.row(i).transpose() - mu;
      cov += r(i, j) * dv * dv.transpose();
    }
    out.means.push_back(mu);
    out.covariances.emplace_back(cov / n);
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("k-means++ with one component gives the sample moments") {
  std::mt19937_64 rng(1);
  const Dataset data(testutil::random_points(50, 3, rng));
  const GmmParams p = kmeanspp_init(data, 1, {7, 1});
  CHECK(p.weights(0) == doctest::Approx(1.0));
  CHECK((p.means[0] - data.points().colwise().mean().transpose()).norm() < 1e-12);
  const Matrix centered = data.points().rowwise() - data.points().colwise().mean();
  const Matrix cov = centered.transpose() * centered / 49.0;
  CHECK((p.covariances[0].matrix() - cov).norm() < 1e-10);
}

TEST_CASE("k-means++ with one point per component") {
  std::mt19937_64 rng(2);
  const Dataset data(testutil::random_points(6, 2, rng));
  for (int n_cand : {1, 3}) {
    const GmmParams p = kmeanspp_init(data, 6, {3, n_cand});
    CHECK(p.num_components() == 6);
    CHECK_NOTHROW(p.validate());
    // Every point is its own cluster.
    std::vector<int> hit(6, 0);
    for (const auto& mu : p.means)
      for (int i = 0; i < 6; ++i)
        if ((data.points().row(i).transpose() - mu).norm() < 1e-12) ++hit[static_cast<size_t>(i)];
    for (int h : hit) CHECK(h == 1);
    for (int j = 0; j < 6; ++j) CHECK(p.weights(j) == doctest::Approx(1.0 / 6.0));
  }
}

TEST_CASE("k-means++ is deterministic and validates its input") {
  const SimData sim = generate_mixture({2, 3, 200, 1.0, 2.0, std::nullopt, 4});
  const GmmParams a = kmeanspp_init(sim.data, 3, {11, 2});
  const GmmParams b = kmeanspp_init(sim.data, 3, {11, 2});
  CHECK(a.weights == b.weights);
  for (int j = 0; j < 3; ++j) {
    CHECK(a.means[j] == b.means[j]);
    CHECK(a.covariances[j].matrix() == b.covariances[j].matrix());
  }
  CHECK(code_of([&] { kmeanspp_init(sim.data, 201, {}); }) == ErrorCode::TooFewPoints);
  CHECK(code_of([&] { kmeanspp_init(sim.data, 0, {}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("k-means++ handles duplicated points") {
  Matrix x(5, 2);
  x << 1, 1, 1, 1, 1, 1, 1, 1, 2, 3;
  const GmmParams p = kmeanspp_init(Dataset(x), 3, {5, 1});
  CHECK_NOTHROW(p.validate());
  for (const auto& c : p.covariances) CHECK(c.matrix().allFinite());
}

TEST_CASE("plain EM step matches the textbook update") {
  const SimData sim = generate_mixture({2, 2, 120, 1.0, 2.0, std::nullopt, 5});
  const GmmParams init = kmeanspp_init(sim.data, 2, {1, 1});
  EmConfig cfg;
  cfg.max_iters = 1;
  cfg.all_diff_tol = 0.0;
  const FitReport rep = fit_em(sim.data, init, cfg, PenaltyConfig::none(2));
  const GmmParams oracle = classical_em_step(init, sim.data.points());
  CHECK(rep.iterations == 1);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(rep.params.weights(j) - oracle.weights(j)) < 1e-12);
    CHECK((rep.params.means[j] - oracle.means[j]).norm() < 1e-10);
    CHECK((rep.params.covariances[j].matrix() - oracle.covariances[j].matrix()).norm() < 1e-10);
  }
}

TEST_CASE("MAP EM step matches the closed-form penalized update") {
  std::mt19937_64 rng(4);
  const Dataset data(testutil::random_points(60, 2, rng));
  const PenaltyConfig pen = build_penalty_config(data);
  const GmmParams init = testutil::random_params(2, 3, rng);
  EmConfig cfg;
  cfg.max_iters = 1;
  cfg.all_diff_tol = 0.0;
  const FitReport rep = fit_em(data, init, cfg, pen);

  // Responsibilities from the classical pdf, then the penalized S and alpha.
  const Matrix& y = data.augmented();
  Matrix r(60, 3);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 3; ++j)
      r(i, j) = init.weights(j) *
                testutil::gaussian_pdf(data.points().row(i).transpose(), init.means[j], init.covariances[j].matrix());
    r.row(i) /= r.row(i).sum();
  }
  for (int j = 0; j < 3; ++j) {
    const double n = r.col(j).sum();
    Matrix s = pen.beta * pen.psi.matrix();
    for (int i = 0; i < 60; ++i) s += r(i, j) * y.row(i).transpose() * y.row(i);
    s /= n + pen.rho;
    CHECK((rep.theta.s(j).matrix() - s).norm() < 1e-10 * s.norm());
    CHECK(rep.theta.weights()(j) == doctest::Approx((n + pen.zeta) / (60.0 + 3.0 * pen.zeta)).epsilon(1e-12));
  }
}

TEST_CASE("EM from the truth barely moves on well separated data") {
  const SimData sim = generate_mixture({2, 3, 2000, 5.0, 2.0, std::nullopt, 6});
  const PenaltyConfig pen = build_penalty_config(sim.data);
  EmConfig cfg;
  cfg.max_iters = 1;
  cfg.all_diff_tol = 0.0;
  const FitReport rep = fit_em(sim.data, sim.truth, cfg, pen);
  const double before = average_log_likelihood(sim.truth, sim.data);
  CHECK(rep.params.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(average_log_likelihood(rep.params, sim.data) - before >= 0.0);
  CHECK(average_log_likelihood(rep.params, sim.data) - before < 1e-2);
}

TEST_CASE("symmetric data keeps symmetric weights") {
  Matrix x(40, 1);
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = -3.0 + 0.1 * i;
    x(20 + i, 0) = 3.0 - 0.1 * i;
  }
  GmmParams p;
  p.weights = Vector::Constant(2, 0.5);
  p.means = {Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
  p.covariances = {SpdMatrix(Matrix::Identity(1, 1)), SpdMatrix(Matrix::Identity(1, 1))};
  const Dataset data(x);
  const FitReport rep = fit_em(data, p, {}, build_penalty_config(data));
  CHECK(rep.params.weights(0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(rep.params.means[0](0) == doctest::Approx(-rep.params.means[1](0)).epsilon(1e-8));
}

TEST_CASE("collapsing components never produce NaN") {
  Matrix x(3, 1);
  x << 0.0, 0.0, 5.0;
  GmmParams p;
  p.weights = Vector::Constant(3, 1.0 / 3.0);
  p.means = {Vector::Constant(1, 0.0), Vector::Constant(1, 0.01), Vector::Constant(1, 1000.0)};
  p.covariances = {SpdMatrix(Matrix::Identity(1, 1)), SpdMatrix(Matrix::Identity(1, 1)),
                   SpdMatrix(Matrix::Constant(1, 1, 1e-4))};
  const Dataset data(x);
  EmConfig cfg;
  cfg.map_mode = false;
  try {
    const FitReport rep = fit_em(data, p, cfg, PenaltyConfig::none(1));
    CHECK(rep.params.weights.allFinite());
    for (const auto& c : rep.params.covariances) CHECK(c.matrix()(0, 0) > 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateComponent);
  }
  // The penalized variant stays well posed.
  const FitReport map = fit_em(data, p, {}, build_penalty_config(data, {.full_covariance = true}));
  CHECK(map.params.weights.allFinite());
  CHECK(std::isfinite(map.penalized_objective));
}

TEST_CASE("penalized EM is monotone") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const SimData sim = generate_mixture({3, 4, 400, 0.5, 3.0, std::nullopt, seed});
    const PenaltyConfig pen = build_penalty_config(sim.data);
    EmConfig cfg;
    cfg.max_iters = 200;
    const FitReport rep = fit_em(sim.data, kmeanspp_init(sim.data, 4, {seed, 1}), cfg, pen);
    for (size_t t = 1; t < rep.trace.size(); ++t) CHECK(rep.trace[t].objective >= rep.trace[t - 1].objective - 1e-9);
    CHECK(rep.penalized_objective >= rep.trace.back().objective - 1e-9);
    CHECK(rep.params.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("plain EM is monotone in the log-likelihood") {
  const SimData sim = generate_mixture({2, 3, 300, 0.5, 2.0, std::nullopt, 9});
  EmConfig cfg;
  cfg.max_iters = 100;
  cfg.map_mode = false;
  const FitReport rep = fit_em(sim.data, kmeanspp_init(sim.data, 3, {2, 1}), cfg, PenaltyConfig::none(2));
  for (size_t t = 1; t < rep.trace.size(); ++t) CHECK(rep.trace[t].objective >= rep.trace[t - 1].objective - 1e-9);
}

TEST_CASE("EM terminates on the average log-likelihood change") {
  const SimData sim = generate_mixture({2, 2, 300, 2.0, 2.0, std::nullopt, 10});
  const FitReport rep = fit_em(sim.data, kmeanspp_init(sim.data, 2, {1, 1}), {}, build_penalty_config(sim.data));
  CHECK(rep.termination == Termination::AllDifference);
  CHECK(rep.solver == "em");
  CHECK(rep.accepted_iterations == rep.iterations);
}

TEST_CASE("helpers") {
  Matrix a(2, 2);
  a << 1.0, 0.0, 0.0, -1.0;
  const Matrix f = floor_eigenvalues(a, 0.5);
  CHECK(f(0, 0) == doctest::Approx(1.0));
  CHECK(f(1, 1) == doctest::Approx(0.5));
  CHECK(sample_covariance(Matrix::Ones(1, 3)).isZero());
  Matrix pts(3, 1);
  pts << 1, 2, 3;
  CHECK(sample_covariance(pts)(0, 0) == doctest::Approx(1.0));
}
