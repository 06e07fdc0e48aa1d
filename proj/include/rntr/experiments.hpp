#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rntr/em.hpp"
#include "rntr/gmm_model.hpp"
#include "rntr/rtr.hpp"

namespace rntr {

// ---------------------------------------------------------------- generation

struct SimSpec {
  int d = 2;
  int K = 3;
  int m = 500;
  double c = 1.0;  // separation
  double e = 1.0;  // eccentricity sqrt(lambda_max / lambda_min)
  std::optional<Vector> weights;  // unset: uniform
  std::uint64_t seed = 0;

  /// Throws InvalidArgument unless d, K, m >= 1, c > 0, e >= 1 and the
  /// optional weights are positive, of length K and sum to one.
  void validate() const;
};

struct SimData {
  GmmParams truth;
  Dataset data;
  std::vector<int> labels;  // generating component of each observation
};

/// Covariances Q^T D Q with random orthogonal Q and eigenvalues spaced
/// geometrically in [1, e^2]; means uniform in the unit ball, rescaled so the
/// tightest pair meets ||mu_i - mu_j||^2 >= c max(tr S_i, tr S_j) with a 10%
/// margin. Throws SeparationUnsatisfiable after 1000 degenerate draws.
SimData generate_mixture(const SimSpec& spec);

/// Haar-distributed orthogonal matrix.
Matrix random_orthogonal(int n, std::mt19937_64& rng);

/// Minimum over pairs of ||mu_i - mu_j||^2 - c max(tr S_i, tr S_j); +inf for K = 1.
double separation_slack(const GmmParams& params, double c);

// ------------------------------------------------------------------- metrics

struct MseTriple {
  double weights = 0.0;
  double means = 0.0;
  double covariances = 0.0;
};

struct MatchResult {
  std::vector<int> perm;  // fitted component matched to truth component j
  MseTriple mse;          // averaged per entry
  MseTriple wmse;         // truth-weight weighted per-component errors
  double geodesic = 0.0;  // sum_j d(S_j truth, S_perm(j) fitted)
};

/// Matches components by minimizing the total squared mean error (exhaustive
/// for K <= 8, Hungarian algorithm beyond) and reports the errors.
/// Throws ComponentCountMismatch or DimensionMismatch.
MatchResult match_components(const GmmParams& truth, const GmmParams& fitted);
MseTriple matched_mse(const GmmParams& truth, const GmmParams& fitted);

/// Minimum-cost assignment for a square cost matrix; returns column per row.
std::vector<int> hungarian(const Matrix& cost);

/// Throws LengthMismatch.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// ------------------------------------------------------------ density study

/// Cell-centered grid over [x_lo, x_hi] x [y_lo, y_hi] with nx * ny nodes.
struct DensityGrid {
  double x_lo = 0.0, x_hi = 5.0, y_lo = 0.0, y_hi = 10.0;
  int nx = 128;
  int ny = 128;
  Vector values;  // true density at the nodes, x-major

  int n_points() const { return nx * ny; }
  double dx() const { return (x_hi - x_lo) / nx; }
  double dy() const { return (y_hi - y_lo) / ny; }
  /// Cell width sqrt(dx dy).
  double grid_width() const;
  /// n_points x 2; node (i, j) at row i * ny + j.
  Matrix nodes() const;
  /// Throws InvalidArgument on an empty box or nonpositive counts.
  void validate() const;
};

struct BetaGammaParams {
  double beta_a = 0.5;
  double beta_b = 0.5;
  double gamma_shape = 1.0;
  double gamma_rate = 1.0;
  double copula_rho = 0.5;
};

/// Beta x Gamma marginals joined by a Gaussian copula; zero outside the support.
double beta_gamma_density(double x, double y, const BetaGammaParams& p);
DensityGrid beta_gamma_truth(DensityGrid grid, const BetaGammaParams& p);
Matrix sample_beta_gamma(int m, const BetaGammaParams& p, std::mt19937_64& rng);

/// sqrt((1/N) sum_r (f(g_r) - fhat(g_r))^2 delta_g^2). Throws
/// DimensionMismatch unless the model is bivariate.
double rmise(const GmmParams& model, const DensityGrid& grid);

// ---------------------------------------------------------------- benchmark

enum class Solver { Em, Rntr };
const char* to_string(Solver s);
/// Throws InvalidArgument on an unknown name.
Solver parse_solver(const std::string& name);

/// Seed for (master, a, b) via splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

struct SolverSettings {
  TrConfig tr;
  EmConfig em;
  PenaltyOverrides penalty;
};

struct BenchmarkCell {
  int d = 2;
  int K = 3;
  int m = 500;
  double c = 1.0;
  double e = 1.0;
  int runs = 1;
  std::vector<Solver> solvers{Solver::Em, Solver::Rntr};
};

struct BenchmarkSuite {
  std::vector<BenchmarkCell> cells;
  std::uint64_t seed = 42;
  SolverSettings settings;
};

struct RunRecord {
  int cell = 0;
  int run = 0;
  Solver solver = Solver::Em;
  std::uint64_t data_seed = 0;
  bool ok = false;
  std::string error;
  int iterations = 0;
  int accepted_iterations = 0;
  std::string termination;
  double init_time_s = 0.0;
  double time_s = 0.0;
  double all = 0.0;            // classical average log-likelihood
  double all_penalized = 0.0;  // penalized objective / m
  double grad_norm = 0.0;
  MseTriple mse;
  MseTriple wmse;
  double geodesic = 0.0;
  double ari = 0.0;
};

struct CellSummary {
  int cell = 0;
  BenchmarkCell spec;
  Solver solver = Solver::Em;
  int runs_ok = 0;
  int runs_failed = 0;
  double mean_iterations = 0.0;
  double mean_time_s = 0.0;
  double mean_all = 0.0;
  MseTriple mse;
  double mean_ari = 0.0;
  std::string errors;  // distinct messages joined by "; "
};

struct BenchmarkResult {
  std::vector<RunRecord> runs;
  std::vector<CellSummary> summary;
};

/// For each cell and run: generate data, initialize once with k-means++ and
/// fit every enabled solver from that shared init. Solver failures are
/// recorded per run; the suite continues. A pure function of the suite.
BenchmarkResult run_benchmark(const BenchmarkSuite& suite);

/// Fits one solver from `init`.
FitReport fit_with(Solver s, const Dataset& data, const GmmParams& init, const SolverSettings& settings,
                   const PenaltyConfig& penalty);

struct DensityStudy {
  std::vector<int> components{2};
  int runs = 10;
  int m = 1000;
  DensityGrid grid;
  BetaGammaParams truth;
  std::uint64_t seed = 42;
  std::vector<Solver> solvers{Solver::Em, Solver::Rntr};
  SolverSettings settings;
};

struct DensityRow {
  int K = 0;
  Solver solver = Solver::Em;
  int runs_ok = 0;
  int runs_failed = 0;
  double mean_rmise = 0.0;
  double se_rmise = 0.0;
  double mean_iterations = 0.0;
  double mean_time_s = 0.0;
  double mean_all = 0.0;
  std::string errors;
  Vector pointwise_error;  // fhat - f on the grid for the first successful run
};

struct DensityResult {
  DensityGrid grid;  // with the true density filled in
  std::vector<DensityRow> rows;
};

DensityResult run_density_study(const DensityStudy& study);

}  // namespace rntr
