#pragma once

#include <optional>
#include <vector>

#include "rntr/spd.hpp"

namespace rntr {

/// Observations x_i (rows of `points`) and their augmentation y_i = (x_i, 1).
class Dataset {
 public:
  /// Throws EmptyData when there are no rows or no columns.
  explicit Dataset(Matrix points);

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  const Matrix& augmented() const { return augmented_; }

 private:
  Matrix points_;
  Matrix augmented_;
};

Dataset augment(const Matrix& points);

/// Classical mixture parameters (alpha_j, mu_j, Sigma_j).
struct GmmParams {
  Vector weights;
  std::vector<Vector> means;
  std::vector<SpdMatrix> covariances;

  int num_components() const { return static_cast<int>(weights.size()); }
  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  /// Throws InvalidArgument/DimensionMismatch on inconsistent shapes, weights
  /// that are non-positive or do not sum to one within 1e-10.
  void validate() const;
};

/// Wishart/Dirichlet penalizer configuration.
///
/// psi = [[ (gamma/beta) Lambda + kappa lambda lambda^T, kappa lambda ],
///        [ kappa lambda^T,                             kappa        ]]
/// with rho = gamma (d + nu + 1) + beta.
struct PenaltyConfig {
  SpdMatrix psi = SpdMatrix::identity(1);
  double rho = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
  double nu = 0.0;
  Vector lambda_vec;
  Matrix lambda_mat;
  double zeta = 0.0;

  /// All penalty strengths zero; psi is an identity placeholder.
  static PenaltyConfig none(Eigen::Index d);

  bool is_zero() const { return rho == 0.0 && beta == 0.0 && zeta == 0.0; }
};

/// Throws InvalidArgument when the rho constraint or the psi block structure
/// does not hold to 1e-12.
void check_penalty_config(const PenaltyConfig& cfg);

struct PenaltyOverrides {
  std::optional<double> gamma;
  std::optional<double> beta;
  std::optional<double> kappa;
  std::optional<double> nu;
  std::optional<double> zeta;
  /// Use the full sample covariance for Lambda instead of its diagonal.
  bool full_covariance = false;
};

/// Data-driven defaults: lambda = sample mean, Lambda = diag(sample cov),
/// gamma = beta = kappa = 0.01, nu = d, zeta = 1, rho from the constraint.
PenaltyConfig build_penalty_config(const Dataset& data, const PenaltyOverrides& overrides = {});

struct Responsibilities {
  Matrix f;           // m x K, rows sum to one
  Vector row_logsum;  // log sum_j h^i(theta_j)
};

ThetaPoint forward_transform(const GmmParams& params);
/// Total inverse of forward_transform; divides by S[d,d]. Throws
/// DegenerateBlock when a recovered covariance is not SPD.
GmmParams backward_transform(const ThetaPoint& theta);

/// log q_N(y; S) = -(d/2) log(2 pi) - (1/2) log det S + 1/2 - (1/2) y^T S^{-1} y
double log_component_density(const Vector& y, const SpdMatrix& s);
double component_density(const Vector& y, const SpdMatrix& s);

/// m x K matrix of log h^i(theta_j) = log alpha_j + log q_N(y_i; S_j).
Matrix log_weighted_densities(const ThetaPoint& theta, const Dataset& data);

Responsibilities responsibilities(const ThetaPoint& theta, const Dataset& data);
Responsibilities responsibilities_from_logs(const Matrix& log_h);

/// Reformulated log-likelihood sum_i log sum_j h^i(theta_j).
double objective(const ThetaPoint& theta, const Dataset& data);

/// -(rho/2) log det S - (beta/2) tr(psi S^{-1})
double penalty_matrix_term(const SpdMatrix& s, const PenaltyConfig& cfg);
/// zeta (sum_j eta_j - K log sum_k exp(eta_k)), eta_K = 0.
double penalty_weight_term(const Vector& eta, double zeta);
double penalty(const ThetaPoint& theta, const PenaltyConfig& cfg);
double penalized_objective(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg);

/// Classical mixture log-likelihood sum_i log sum_j alpha_j p_N(x_i; mu_j, Sigma_j).
double log_likelihood(const GmmParams& params, const Dataset& data);
double average_log_likelihood(const GmmParams& params, const Dataset& data);

/// Density of the mixture at each row of `points`.
Vector mixture_density(const GmmParams& params, const Matrix& points);

/// Hard assignments argmax_j of the responsibilities.
std::vector<int> hard_labels(const GmmParams& params, const Dataset& data);

/// Fixed-order pairwise summation; identical results for identical inputs.
double pairwise_sum(const double* values, Eigen::Index n);
double log_sum_exp(const Eigen::Ref<const Vector>& v);

}  // namespace rntr
