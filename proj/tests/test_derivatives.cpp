#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rntr/derivatives.hpp"
#include "test_util.hpp"

using namespace rntr;
using testutil::random_params;
using testutil::random_points;

namespace {

struct Instance {
  Dataset data;
  ThetaPoint theta;
  PenaltyConfig cfg;
};

Instance make_instance(int d, int K, int m, std::mt19937_64& rng, bool penalty = true) {
  Dataset data(random_points(m, d, rng));
  PenaltyConfig cfg = penalty ? build_penalty_config(data, {.gamma = 0.5, .beta = 2.0, .kappa = 0.7, .zeta = 1.5})
                              : PenaltyConfig::none(d);
  return {std::move(data), forward_transform(random_params(d, K, rng)), cfg};
}

// Second derivative of t -> penalty(retract(theta, t xi)) by a five-point stencil.
double penalty_second_fd(const ThetaPoint& th, const TangentVector& xi, const PenaltyConfig& cfg) {
  const double h = 1e-3;
  auto f = [&](double t) { return penalty(retract(th, t * xi), cfg); };
  return (-f(2 * h) + 16 * f(h) - 30 * f(0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h);
}

}  // namespace

TEST_CASE("gradient vanishes at the single-Gaussian MLE") {
  std::mt19937_64 rng(1);
  const Dataset data(random_points(40, 2, rng));
  const Matrix& y = data.augmented();
  const ThetaPoint th({SpdMatrix(y.transpose() * y / 40.0)}, Vector(0));
  const GradResult g = riemannian_gradient(th, data, PenaltyConfig::none(2));
  CHECK(g.grad.s_blocks[0].matrix().norm() < 1e-12);
  CHECK(g.norm < 1e-12);
}

TEST_CASE("penalty gradient vanishes at the Wishart mode") {
  std::mt19937_64 rng(2);
  const Dataset data(random_points(30, 2, rng));
  const PenaltyConfig cfg = build_penalty_config(data, {.gamma = 0.5, .beta = 2.0});
  const ThetaPoint th({SpdMatrix(cfg.beta / cfg.rho * cfg.psi.matrix())}, Vector(0));
  const GradResult with = riemannian_gradient(th, data, cfg);
  const GradResult without = riemannian_gradient(th, data, PenaltyConfig::none(2));
  CHECK((with.grad.s_blocks[0].matrix() - without.grad.s_blocks[0].matrix()).norm() < 1e-12);
}

TEST_CASE("eta gradient is zero for two identical components with eta = 0") {
  std::mt19937_64 rng(3);
  const Dataset data(random_points(30, 2, rng));
  const PenaltyConfig cfg = build_penalty_config(data);
  const SpdMatrix s(testutil::random_spd(3, rng));
  const ThetaPoint th({s, s}, Vector::Zero(1));
  CHECK(std::abs(riemannian_gradient(th, data, cfg).grad.eta(0)) < 1e-12);
}

TEST_CASE("eta gradient matches the responsibility identity") {
  std::mt19937_64 rng(4);
  const Instance in = make_instance(2, 3, 40, rng);
  const GradResult g = riemannian_gradient(in.theta, in.data, in.cfg);
  const Responsibilities r = responsibilities(in.theta, in.data);
  const Vector alpha = in.theta.weights();
  for (int j = 0; j < 2; ++j) {
    // Long form sum_i f_r - alpha_r sum_i sum_j f_j, plus the weight-penalty part.
    const double expected = r.f.col(j).sum() - alpha(j) * r.f.sum() + in.cfg.zeta * (1.0 - 3.0 * alpha(j));
    CHECK(std::abs(g.grad.eta(j) - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
  }
  for (const auto& b : g.grad.s_blocks) CHECK((b.matrix() - b.matrix().transpose()).norm() == 0.0);
  CHECK(g.norm == doctest::Approx(std::sqrt(inner_product(in.theta, g.grad, g.grad))));
  CHECK(g.objective_value == doctest::Approx(penalized_objective(in.theta, in.data, in.cfg)).epsilon(1e-14));
}

TEST_CASE("gradient finite-difference check") {
  std::mt19937_64 rng(5);
  for (int d = 1; d <= 3; ++d) {
    for (int K = 1; K <= 3; ++K) {
      const Instance in = make_instance(d, K, 30, rng);
      const FdReport rep = fd_gradient_check(in.theta, in.data, in.cfg, 10, 100 + d * 10 + K);
      CHECK(rep.trials == 10);
      CHECK(rep.passed(1e-5));
    }
  }
}

TEST_CASE("finite-difference harness catches a perturbed gradient") {
  std::mt19937_64 rng(6);
  const Instance in = make_instance(2, 2, 30, rng);
  TangentVector g = riemannian_gradient(in.theta, in.data, in.cfg).grad;
  Matrix m = g.s_blocks[0].matrix();
  m(0, 0) += 1e-3;
  g.s_blocks[0] = SymMatrix(m);
  const FdReport rep = fd_gradient_check(in.theta, in.data, in.cfg, g, 10, 9);
  CHECK_FALSE(rep.passed(1e-5));
  CHECK(rep.worst_direction.has_value());

  const FdReport none = fd_gradient_check(in.theta, in.data, in.cfg, 0);
  CHECK(none.trials == 0);
  CHECK(none.rel_errors.empty());
  CHECK_FALSE(none.worst_direction.has_value());
}

TEST_CASE("Hessian finite-difference check") {
  std::mt19937_64 rng(7);
  for (int d = 1; d <= 3; ++d) {
    for (int K = 1; K <= 3; ++K) {
      const Instance in = make_instance(d, K, 30, rng);
      CHECK(fd_hessian_check(in.theta, in.data, in.cfg, 5, 200 + d * 10 + K).passed(1e-4));
    }
  }
}

TEST_CASE("Hessian penalty part matches its own second difference") {
  std::mt19937_64 rng(8);
  const Instance in = make_instance(2, 3, 20, rng);
  const HvpWorkspace with(in.theta, in.data, in.cfg);
  const PenaltyConfig none = PenaltyConfig::none(2);
  const HvpWorkspace without(in.theta, in.data, none);
  for (int t = 0; t < 5; ++t) {
    const TangentVector xi = random_unit_tangent(in.theta, rng);
    const TangentVector hp = hessian_vector_product(in.theta, xi, in.data, in.cfg, with) -
                             hessian_vector_product(in.theta, xi, in.data, none, without);
    const double fd = penalty_second_fd(in.theta, xi, in.cfg);
    CHECK(std::abs(inner_product(in.theta, hp, xi) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("Hessian is linear and self-adjoint") {
  std::mt19937_64 rng(9);
  const Instance in = make_instance(3, 3, 40, rng);
  const HvpWorkspace ws(in.theta, in.data, in.cfg);
  auto H = [&](const TangentVector& v) { return hessian_vector_product(in.theta, v, in.data, in.cfg, ws); };

  const TangentVector zero = H(TangentVector::zero_like(in.theta));
  CHECK(metric_norm(in.theta, zero) == 0.0);

  const TangentVector a = random_unit_tangent(in.theta, rng), b = random_unit_tangent(in.theta, rng);
  const TangentVector lhs = H(2.5 * a + (-0.7) * b);
  const TangentVector rhs = 2.5 * H(a) + (-0.7) * H(b);
  CHECK(metric_norm(in.theta, lhs - rhs) <= 1e-9 * std::max(1.0, metric_norm(in.theta, rhs)));

  for (int t = 0; t < 20; ++t) {
    const TangentVector u = random_unit_tangent(in.theta, rng), v = random_unit_tangent(in.theta, rng);
    const double huv = inner_product(in.theta, H(u), v);
    const double uhv = inner_product(in.theta, u, H(v));
    CHECK(std::abs(huv - uhv) <= 1e-8 * std::max(1.0, std::abs(huv)));
  }
  for (const auto& blk : H(a).s_blocks) CHECK((blk.matrix() - blk.matrix().transpose()).norm() == 0.0);
}

TEST_CASE("stale workspace is rejected") {
  std::mt19937_64 rng(10);
  const Instance in = make_instance(2, 2, 20, rng);
  const HvpWorkspace ws(in.theta, in.data, in.cfg);
  const ThetaPoint moved = retract(in.theta, 0.1 * random_unit_tangent(in.theta, rng));
  try {
    hessian_vector_product(moved, TangentVector::zero_like(moved), in.data, in.cfg, ws);
    FAIL("expected StaleWorkspace");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StaleWorkspace);
  }
}

TEST_CASE("random unit tangents have unit norm") {
  std::mt19937_64 rng(11);
  const Instance in = make_instance(3, 2, 10, rng);
  for (int t = 0; t < 10; ++t) {
    CHECK(metric_norm(in.theta, random_unit_tangent(in.theta, rng)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
