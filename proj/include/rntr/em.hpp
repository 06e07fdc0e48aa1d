#pragma once

#include <cstdint>

#include "rntr/gmm_model.hpp"
#include "rntr/rtr.hpp"

namespace rntr {

struct KppConfig {
  std::uint64_t seed = 0;
  int n_candidates = 1;  // greedy D^2 candidates per seed
};

/// k-means++ seeding followed by one Lloyd assignment. Means are the cluster
/// means, covariances the cluster sample covariances with eigenvalues floored
/// (clusters with fewer than two points use the data covariance), weights the
/// cluster fractions. Throws TooFewPoints when m < K.
GmmParams kmeanspp_init(const Dataset& data, int num_components, const KppConfig& cfg);

struct EmConfig {
  int max_iters = 1500;
  double all_diff_tol = 1e-10;
  bool map_mode = true;
  /// Eigenvalue floor for covariances when map_mode is off; negative means
  /// 1e-8 * trace(sample covariance) / d.
  double cov_floor = -1.0;
};

/// Expectation maximization on the reformulated parameters. With map_mode
/// the M-step maximizes the penalized surrogate in closed form:
///   S_j = (sum_i f_ij y_i y_i^T + beta psi) / (n_j + rho)
///   alpha_j = (n_j + zeta) / (m + K zeta)
/// so the penalized objective never decreases. Without map_mode the plain
/// M-step is used with floored covariances, and a component whose
/// responsibility mass drops below 1e-12 raises DegenerateComponent.
FitReport fit_em(const Dataset& data, const GmmParams& init, const EmConfig& cfg,
                 const PenaltyConfig& penalty);

/// Symmetric matrix with eigenvalues clipped from below at `floor`.
Matrix floor_eigenvalues(const Matrix& a, double floor);

/// Sample covariance with divisor m - 1 (zero matrix when m < 2).
Matrix sample_covariance(const Matrix& points);

}  // namespace rntr
