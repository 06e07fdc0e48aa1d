#include "rntr/gmm_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rntr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

double pairwise_sum(const double* values, Eigen::Index n) {
  if (n <= 8) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const Eigen::Index half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

Dataset::Dataset(Matrix points) : points_(std::move(points)) {
  if (points_.rows() == 0 || points_.cols() == 0) {
    throw Error(ErrorCode::EmptyData, "dataset has no observations");
  }
  if (!points_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "dataset has non-finite entries");
  }
  augmented_.resize(points_.rows(), points_.cols() + 1);
  augmented_.leftCols(points_.cols()) = points_;
  augmented_.col(points_.cols()).setOnes();
}

Dataset augment(const Matrix& points) { return Dataset(points); }

void GmmParams::validate() const {
  const auto k = static_cast<size_t>(weights.size());
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "GmmParams has no components");
  if (means.size() != k || covariances.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "weights/means/covariances count mismatch");
  }
  const Eigen::Index d = dim();
  for (size_t j = 0; j < k; ++j) {
    if (means[j].size() != d || covariances[j].dim() != d) {
      throw Error(ErrorCode::DimensionMismatch, "component dimensions disagree");
    }
    if (!means[j].allFinite()) throw Error(ErrorCode::InvalidArgument, "mean not finite");
  }
  if ((weights.array() <= 0.0).any() || !weights.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "weights must be positive");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-10) {
    throw Error(ErrorCode::InvalidArgument, "weights must sum to one");
  }
}

PenaltyConfig PenaltyConfig::none(Eigen::Index d) {
  PenaltyConfig cfg;
  cfg.psi = SpdMatrix::identity(d + 1);
  cfg.lambda_vec = Vector::Zero(d);
  cfg.lambda_mat = Matrix::Zero(d, d);
  return cfg;
}

void check_penalty_config(const PenaltyConfig& cfg) {
  const auto d = static_cast<double>(cfg.psi.dim() - 1);
  if (rel_diff(cfg.rho, cfg.gamma * (d + cfg.nu + 1.0) + cfg.beta) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "rho != gamma (d + nu + 1) + beta");
  }
  if (cfg.is_zero()) return;
  if (cfg.beta <= 0.0) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  const Eigen::Index n = cfg.psi.dim() - 1;
  Matrix expected(n + 1, n + 1);
  expected.topLeftCorner(n, n) =
      (cfg.gamma / cfg.beta) * cfg.lambda_mat + cfg.kappa * cfg.lambda_vec * cfg.lambda_vec.transpose();
  expected.topRightCorner(n, 1) = cfg.kappa * cfg.lambda_vec;
  expected.bottomLeftCorner(1, n) = cfg.kappa * cfg.lambda_vec.transpose();
  expected(n, n) = cfg.kappa;
  const double scale = std::max(1.0, expected.cwiseAbs().maxCoeff());
  if ((expected - cfg.psi.matrix()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidArgument, "psi does not match its block formula");
  }
}

PenaltyConfig build_penalty_config(const Dataset& data, const PenaltyOverrides& ov) {
  const Eigen::Index m = data.size();
  const Eigen::Index d = data.dim();
  if (m < 2) throw Error(ErrorCode::TooFewPoints, "penalty construction needs m >= 2");

  PenaltyConfig cfg;
  cfg.gamma = ov.gamma.value_or(0.01);
  cfg.beta = ov.beta.value_or(0.01);
  cfg.kappa = ov.kappa.value_or(0.01);
  cfg.nu = ov.nu.value_or(static_cast<double>(d));
  cfg.zeta = ov.zeta.value_or(1.0);
  if (cfg.beta <= 0.0 || cfg.kappa <= 0.0 || cfg.gamma < 0.0 || cfg.zeta < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "penalty strengths out of range");
  }
  cfg.rho = cfg.gamma * (static_cast<double>(d) + cfg.nu + 1.0) + cfg.beta;

  const Matrix& x = data.points();
  cfg.lambda_vec = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - cfg.lambda_vec.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(m - 1);
  if ((cov.diagonal().array() <= 0.0).any()) {
    throw Error(ErrorCode::DegenerateData, "a data column has zero variance");
  }
  cfg.lambda_mat = ov.full_covariance ? cov : Matrix(cov.diagonal().asDiagonal());

  Matrix psi(d + 1, d + 1);
  psi.topLeftCorner(d, d) = (cfg.gamma / cfg.beta) * cfg.lambda_mat +
                            cfg.kappa * cfg.lambda_vec * cfg.lambda_vec.transpose();
  psi.topRightCorner(d, 1) = cfg.kappa * cfg.lambda_vec;
  psi.bottomLeftCorner(1, d) = cfg.kappa * cfg.lambda_vec.transpose();
  psi(d, d) = cfg.kappa;
  try {
    cfg.psi = SpdMatrix(psi);
  } catch (const Error&) {
    throw Error(ErrorCode::DegenerateData, "penalty matrix psi is not positive definite");
  }
  return cfg;
}

ThetaPoint forward_transform(const GmmParams& params) {
  params.validate();
  const Eigen::Index d = params.dim();
  const int k = params.num_components();
  std::vector<SpdMatrix> blocks;
  blocks.reserve(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    const Vector& mu = params.means[static_cast<size_t>(j)];
    Matrix s(d + 1, d + 1);
    s.topLeftCorner(d, d) = params.covariances[static_cast<size_t>(j)].matrix() + mu * mu.transpose();
    s.topRightCorner(d, 1) = mu;
    s.bottomLeftCorner(1, d) = mu.transpose();
    s(d, d) = 1.0;
    blocks.emplace_back(s);
  }
  Vector eta(k - 1);
  const double log_last = std::log(params.weights(k - 1));
  for (int j = 0; j < k - 1; ++j) eta(j) = std::log(params.weights(j)) - log_last;
  return ThetaPoint(std::move(blocks), std::move(eta));
}

GmmParams backward_transform(const ThetaPoint& theta) {
  const Eigen::Index d = theta.block_dim() - 1;
  GmmParams out;
  out.weights = theta.weights();
  for (int j = 0; j < theta.num_components(); ++j) {
    const Matrix& s = theta.s(j).matrix();
    const double corner = s(d, d);
    Vector mu = s.topRightCorner(d, 1) / corner;
    Matrix sigma = s.topLeftCorner(d, d) / corner - mu * mu.transpose();
    try {
      out.covariances.emplace_back(sigma);
    } catch (const Error&) {
      throw Error(ErrorCode::DegenerateBlock,
                  "recovered covariance of component " + std::to_string(j) + " is not SPD");
    }
    out.means.push_back(std::move(mu));
  }
  return out;
}

double log_component_density(const Vector& y, const SpdMatrix& s) {
  if (y.size() != s.dim()) throw Error(ErrorCode::DimensionMismatch, "y and S differ in dim");
  const auto d = static_cast<double>(s.dim() - 1);
  Vector z = s.chol().triangularView<Eigen::Lower>().solve(y);
  return -0.5 * d * kLog2Pi - 0.5 * s.log_det() + 0.5 - 0.5 * z.squaredNorm();
}

double component_density(const Vector& y, const SpdMatrix& s) {
  return std::exp(log_component_density(y, s));
}

Matrix log_weighted_densities(const ThetaPoint& theta, const Dataset& data) {
  if (data.dim() + 1 != theta.block_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "data dim does not match theta");
  }
  const Eigen::Index m = data.size();
  const int k = theta.num_components();
  const auto d = static_cast<double>(data.dim());
  const Vector log_alpha = theta.weights().array().log();
  Matrix out(m, k);
  for (int j = 0; j < k; ++j) {
    const SpdMatrix& s = theta.s(j);
    Matrix z = s.chol().triangularView<Eigen::Lower>().solve(data.augmented().transpose());
    const double c = log_alpha(j) - 0.5 * d * kLog2Pi - 0.5 * s.log_det() + 0.5;
    out.col(j) = (c - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
  }
  return out;
}

Responsibilities responsibilities_from_logs(const Matrix& log_h) {
  Responsibilities r;
  r.f.resize(log_h.rows(), log_h.cols());
  r.row_logsum.resize(log_h.rows());
  for (Eigen::Index i = 0; i < log_h.rows(); ++i) {
    const double mx = log_h.row(i).maxCoeff();
    Eigen::RowVectorXd e = (log_h.row(i).array() - mx).exp();
    const double s = e.sum();
    r.f.row(i) = e / s;
    r.row_logsum(i) = mx + std::log(s);
  }
  return r;
}

Responsibilities responsibilities(const ThetaPoint& theta, const Dataset& data) {
  return responsibilities_from_logs(log_weighted_densities(theta, data));
}

double objective(const ThetaPoint& theta, const Dataset& data) {
  Responsibilities r = responsibilities(theta, data);
  return pairwise_sum(r.row_logsum.data(), r.row_logsum.size());
}

double penalty_matrix_term(const SpdMatrix& s, const PenaltyConfig& cfg) {
  if (s.dim() != cfg.psi.dim()) throw Error(ErrorCode::DimensionMismatch, "S and psi differ");
  if (cfg.rho == 0.0 && cfg.beta == 0.0) return 0.0;
  const double tr = cfg.psi.matrix().cwiseProduct(s.inverse()).sum();  // tr(psi S^{-1}), both symmetric
  return -0.5 * cfg.rho * s.log_det() - 0.5 * cfg.beta * tr;
}

double penalty_weight_term(const Vector& eta, double zeta) {
  if (zeta == 0.0) return 0.0;
  Vector full = Vector::Zero(eta.size() + 1);
  full.head(eta.size()) = eta;
  const auto k = static_cast<double>(full.size());
  return zeta * (full.sum() - k * log_sum_exp(full));
}

double penalty(const ThetaPoint& theta, const PenaltyConfig& cfg) {
  double acc = 0.0;
  for (const auto& s : theta.s_blocks()) acc += penalty_matrix_term(s, cfg);
  return acc + penalty_weight_term(theta.eta(), cfg.zeta);
}

double penalized_objective(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg) {
  return objective(theta, data) + penalty(theta, cfg);
}

namespace {

Matrix classical_log_terms(const GmmParams& params, const Matrix& x) {
  params.validate();
  if (x.cols() != params.dim()) throw Error(ErrorCode::DimensionMismatch, "data dim mismatch");
  const auto d = static_cast<double>(params.dim());
  Matrix out(x.rows(), params.num_components());
  for (int j = 0; j < params.num_components(); ++j) {
    const auto ju = static_cast<size_t>(j);
    const SpdMatrix& cov = params.covariances[ju];
    Matrix centered = (x.rowwise() - params.means[ju].transpose()).transpose();
    Matrix z = cov.chol().triangularView<Eigen::Lower>().solve(centered);
    const double c = std::log(params.weights(j)) - 0.5 * d * kLog2Pi - 0.5 * cov.log_det();
    out.col(j) = (c - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
  }
  return out;
}

}  // namespace

double log_likelihood(const GmmParams& params, const Dataset& data) {
  Responsibilities r = responsibilities_from_logs(classical_log_terms(params, data.points()));
  return pairwise_sum(r.row_logsum.data(), r.row_logsum.size());
}

double average_log_likelihood(const GmmParams& params, const Dataset& data) {
  return log_likelihood(params, data) / static_cast<double>(data.size());
}

Vector mixture_density(const GmmParams& params, const Matrix& points) {
  Matrix logs = classical_log_terms(params, points);
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = std::exp(log_sum_exp(logs.row(i).transpose()));
  return out;
}

std::vector<int> hard_labels(const GmmParams& params, const Dataset& data) {
  Matrix logs = classical_log_terms(params, data.points());
  std::vector<int> labels(static_cast<size_t>(logs.rows()));
  for (Eigen::Index i = 0; i < logs.rows(); ++i) {
    Eigen::Index best = 0;
    logs.row(i).maxCoeff(&best);
    labels[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

}  // namespace rntr
