#include "rntr/derivatives.hpp"

#include <algorithm>
#include <cmath>

namespace rntr {

namespace {

// Y^T diag(w) Y
Matrix weighted_scatter(const Matrix& y, const Vector& w) {
  Matrix out = y.transpose() * w.asDiagonal() * y;
  return 0.5 * (out + out.transpose());
}

}  // namespace

HvpWorkspace::HvpWorkspace(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg)
    : generation_(theta.generation()) {
  const Matrix& y = data.augmented();
  const int k = theta.num_components();
  const auto m = static_cast<double>(data.size());

  Matrix log_h = log_weighted_densities(theta, data);
  resp_ = responsibilities_from_logs(log_h);
  alpha_ = theta.weights();
  mass_ = resp_.f.colwise().sum().transpose();

  y_sinv_.resize(static_cast<size_t>(k));
  scatter_.resize(static_cast<size_t>(k));
  grad_.grad = TangentVector::zero_like(theta);
  for (int l = 0; l < k; ++l) {
    const auto lu = static_cast<size_t>(l);
    const SpdMatrix& s = theta.s(l);
    y_sinv_[lu] = y * s.inverse();
    scatter_[lu] = weighted_scatter(y, resp_.f.col(l));
    // (1/2) sum_i f_l^i (y_i y_i^T - S_l) - (1/2)(rho S_l - beta psi)
    Matrix g = 0.5 * (scatter_[lu] - mass_(l) * s.matrix());
    if (!cfg.is_zero()) g -= 0.5 * (cfg.rho * s.matrix() - cfg.beta * cfg.psi.matrix());
    grad_.grad.s_blocks[lu] = SymMatrix(g);
  }
  // sum_i (f_r^i - alpha_r) + zeta (1 - K alpha_r); rows of f sum to one.
  for (int r = 0; r < k - 1; ++r) {
    grad_.grad.eta(r) = mass_(r) - m * alpha_(r) + cfg.zeta * (1.0 - k * alpha_(r));
  }
  grad_.norm = metric_norm(theta, grad_.grad);
  grad_.objective_value =
      pairwise_sum(resp_.row_logsum.data(), resp_.row_logsum.size()) + penalty(theta, cfg);
}

GradResult riemannian_gradient(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg) {
  return HvpWorkspace(theta, data, cfg).gradient();
}

TangentVector hessian_vector_product(const ThetaPoint& theta, const TangentVector& xi,
                                     const Dataset& data, const PenaltyConfig& cfg,
                                     const HvpWorkspace& ws) {
  if (ws.generation() != theta.generation()) {
    throw Error(ErrorCode::StaleWorkspace, "workspace was built for a different point");
  }
  if (!shapes_match(theta, xi)) {
    throw Error(ErrorCode::DimensionMismatch, "hvp: tangent shapes do not match point");
  }
  const Matrix& y = data.augmented();
  const Matrix& f = ws.resp_.f;
  const int k = theta.num_components();
  const Eigen::Index m = data.size();

  // a_l^i = y_i^T S_l^{-1} xi_l S_l^{-1} y_i - tr(S_l^{-1} xi_l) + 2 xi_eta_l
  Vector xi_eta = Vector::Zero(k);
  xi_eta.head(k - 1) = xi.eta;
  std::vector<Matrix> x(static_cast<size_t>(k));
  Matrix a(m, k);
  for (int l = 0; l < k; ++l) {
    const auto lu = static_cast<size_t>(l);
    const Matrix& w = ws.y_sinv_[lu];
    x[lu] = theta.s(l).inverse() * xi.s_blocks[lu].matrix();
    a.col(l) = ((w * xi.s_blocks[lu].matrix()).cwiseProduct(w)).rowwise().sum();
    a.col(l).array() += 2.0 * xi_eta(l) - x[lu].trace();
  }
  const Vector a_bar = f.cwiseProduct(a).rowwise().sum();
  const Matrix centered = a.colwise() - a_bar;  // a_l^i - sum_j f_j^i a_j^i

  TangentVector out = TangentVector::zero_like(theta);
  for (int l = 0; l < k; ++l) {
    const auto lu = static_cast<size_t>(l);
    const Matrix& s = theta.s(l).matrix();
    const Vector fc = f.col(l).cwiseProduct(centered.col(l));
    // -(1/4) sum_i f_l^i [ C_l^i - c_l^i (y_i y_i^T - S_l) ]
    Matrix c_sum = ws.scatter_[lu] * x[lu];
    c_sum += c_sum.transpose().eval();
    Matrix h = -0.25 * (c_sum - (y.transpose() * fc.asDiagonal() * y - fc.sum() * s));
    if (cfg.beta != 0.0) {
      // Connection term of the Wishart penalty; the rho parts cancel.
      Matrix p = cfg.psi.matrix() * x[lu];
      h -= 0.25 * cfg.beta * (p + p.transpose());
    }
    out.s_blocks[lu] = SymMatrix(h);
  }
  const double alpha_xi = ws.alpha_.head(k - 1).dot(xi.eta);
  const double curvature = static_cast<double>(m) + k * cfg.zeta;
  for (int r = 0; r < k - 1; ++r) {
    const double data_term = 0.5 * f.col(r).dot(centered.col(r));
    out.eta(r) = data_term - curvature * ws.alpha_(r) * (xi.eta(r) - alpha_xi);
  }
  return out;
}

TangentVector random_unit_tangent(const ThetaPoint& theta, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  TangentVector t = TangentVector::zero_like(theta);
  const Eigen::Index p = theta.block_dim();
  for (auto& b : t.s_blocks) {
    Matrix m(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) m(i, j) = normal(rng);
    }
    b = SymMatrix(m);
  }
  for (Eigen::Index r = 0; r < t.eta.size(); ++r) t.eta(r) = normal(rng);
  // Congruence by S^{1/2} makes the direction isotropic in the metric.
  for (int j = 0; j < theta.num_components(); ++j) {
    const Matrix half = spd_sqrt(theta.s(j));
    t.s_blocks[static_cast<size_t>(j)] = SymMatrix(half * t.s_blocks[static_cast<size_t>(j)].matrix() * half);
  }
  const double n = metric_norm(theta, t);
  t *= 1.0 / n;
  return t;
}

double directional_derivative_fd(const ThetaPoint& theta, const TangentVector& xi,
                                 const Dataset& data, const PenaltyConfig& cfg, double h) {
  const double fp = penalized_objective(retract(theta, h * xi), data, cfg);
  const double fm = penalized_objective(retract(theta, -h * xi), data, cfg);
  return (fp - fm) / (2.0 * h);
}

double second_derivative_fd(const ThetaPoint& theta, const TangentVector& xi, const Dataset& data,
                            const PenaltyConfig& cfg, double h) {
  auto phi = [&](double t) { return penalized_objective(retract(theta, t * xi), data, cfg); };
  return (-phi(2 * h) + 16.0 * phi(h) - 30.0 * phi(0.0) + 16.0 * phi(-h) - phi(-2 * h)) /
         (12.0 * h * h);
}

namespace {

void record(FdReport& rep, double exact, double fd, const TangentVector& xi) {
  const double err = std::abs(exact - fd) / std::max(1.0, std::abs(fd));
  rep.rel_errors.push_back(err);
  if (!rep.worst_direction || err > rep.max_rel_error) {
    rep.max_rel_error = err;
    rep.worst_direction = xi;
  }
}

}  // namespace

FdReport fd_gradient_check(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg,
                           const TangentVector& grad, int trials, std::uint64_t seed) {
  FdReport rep;
  rep.trials = std::max(trials, 0);
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    TangentVector xi = random_unit_tangent(theta, rng);
    record(rep, inner_product(theta, grad, xi), directional_derivative_fd(theta, xi, data, cfg), xi);
  }
  return rep;
}

FdReport fd_gradient_check(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg,
                           int trials, std::uint64_t seed) {
  if (trials <= 0) return FdReport{};
  return fd_gradient_check(theta, data, cfg, riemannian_gradient(theta, data, cfg).grad, trials, seed);
}

FdReport fd_hessian_check(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg,
                          int trials, std::uint64_t seed) {
  FdReport rep;
  if (trials <= 0) return rep;
  rep.trials = trials;
  HvpWorkspace ws(theta, data, cfg);
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    TangentVector xi = random_unit_tangent(theta, rng);
    TangentVector hxi = hessian_vector_product(theta, xi, data, cfg, ws);
    record(rep, inner_product(theta, hxi, xi), second_derivative_fd(theta, xi, data, cfg), xi);
  }
  return rep;
}

}  // namespace rntr
