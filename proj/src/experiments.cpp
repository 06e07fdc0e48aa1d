#include "rntr/experiments.hpp"

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#ifdef RNTR_HAVE_OPENMP
#include <omp.h>
#endif

namespace rntr {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector standard_normal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = nd(rng);
  return z;
}

}  // namespace

// ---------------------------------------------------------------- generation

void SimSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (d < 1 || K < 1 || m < 1) fail("d, K and m must be positive");
  if (!(c > 0.0)) fail("separation c must be positive");
  if (!(e >= 1.0)) fail("eccentricity e must be at least 1");
  if (weights) {
    if (weights->size() != K) fail("weights must have K entries");
    if ((weights->array() <= 0.0).any()) fail("weights must be positive");
    if (std::abs(weights->sum() - 1.0) > 1e-10) fail("weights must sum to one");
  }
}

Matrix random_orthogonal(int n, std::mt19937_64& rng) {
  Matrix g(n, n);
  for (int j = 0; j < n; ++j) g.col(j) = standard_normal(n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

double separation_slack(const GmmParams& params, double c) {
  double slack = std::numeric_limits<double>::infinity();
  const int K = params.num_components();
  for (int i = 0; i < K; ++i) {
    for (int j = i + 1; j < K; ++j) {
      const double dist2 = (params.means[static_cast<size_t>(i)] - params.means[static_cast<size_t>(j)]).squaredNorm();
      const double tr = std::max(params.covariances[static_cast<size_t>(i)].matrix().trace(),
                                 params.covariances[static_cast<size_t>(j)].matrix().trace());
      slack = std::min(slack, dist2 - c * tr);
    }
  }
  return slack;
}

SimData generate_mixture(const SimSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int d = spec.d;
  const int K = spec.K;

  Vector eig(d);
  for (int k = 0; k < d; ++k) {
    eig(k) = d == 1 ? 1.0 : std::pow(spec.e, 2.0 * k / static_cast<double>(d - 1));
  }
  std::vector<SpdMatrix> covs;
  std::vector<double> traces;
  for (int j = 0; j < K; ++j) {
    const Matrix q = random_orthogonal(d, rng);
    covs.emplace_back(q.transpose() * eig.asDiagonal() * q);
    traces.push_back(covs.back().matrix().trace());
  }

  std::vector<Vector> means;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  bool placed = K == 1;
  if (K == 1) means.push_back(Vector::Zero(d));
  for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
    means.clear();
    for (int j = 0; j < K; ++j) {
      Vector dir = standard_normal(d, rng);
      const double nrm = dir.norm();
      if (nrm == 0.0) break;
      means.push_back(dir / nrm * std::pow(unif(rng), 1.0 / d));
    }
    if (static_cast<int>(means.size()) != K) continue;
    double scale2 = 0.0;
    bool degenerate = false;
    for (int i = 0; i < K && !degenerate; ++i) {
      for (int j = i + 1; j < K; ++j) {
        const double dist2 = (means[static_cast<size_t>(i)] - means[static_cast<size_t>(j)]).squaredNorm();
        if (dist2 < 1e-12) {
          degenerate = true;
          break;
        }
        const double need = 1.1 * spec.c * std::max(traces[static_cast<size_t>(i)], traces[static_cast<size_t>(j)]);
        scale2 = std::max(scale2, need / dist2);
      }
    }
    if (degenerate || !std::isfinite(scale2)) continue;
    const double s = std::sqrt(scale2);
    for (auto& mu : means) mu *= s;
    placed = true;
  }
  if (!placed) throw Error(ErrorCode::SeparationUnsatisfiable, "could not place means after 1000 attempts");

  GmmParams truth;
  truth.weights = spec.weights ? *spec.weights : Vector::Constant(K, 1.0 / K);
  truth.means = means;
  truth.covariances = covs;
  if (separation_slack(truth, spec.c) < 0.0) {
    throw Error(ErrorCode::SeparationUnsatisfiable, "separation check failed after rescaling");
  }

  Vector cum(K);
  std::partial_sum(truth.weights.data(), truth.weights.data() + K, cum.data());
  std::vector<Matrix> chol;
  for (const auto& s : covs) chol.push_back(s.chol());

  Matrix x(spec.m, d);
  std::vector<int> labels(static_cast<size_t>(spec.m));
  for (int i = 0; i < spec.m; ++i) {
    const double u = unif(rng) * cum(K - 1);
    int j = 0;
    while (j < K - 1 && u >= cum(j)) ++j;
    labels[static_cast<size_t>(i)] = j;
    x.row(i) = (means[static_cast<size_t>(j)] + chol[static_cast<size_t>(j)] * standard_normal(d, rng)).transpose();
  }
  return SimData{std::move(truth), Dataset(std::move(x)), std::move(labels)};
}

// ------------------------------------------------------------------- metrics

std::vector<int> hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw Error(ErrorCode::DimensionMismatch, "assignment needs a square cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials formulation, 1-based with a virtual column 0.
  std::vector<double> u(static_cast<size_t>(n + 1), 0.0), v(static_cast<size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<size_t>(n + 1), 0), way(static_cast<size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<size_t>(n + 1), false);
    do {
      used[static_cast<size_t>(j0)] = true;
      const int i0 = p[static_cast<size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(static_cast<size_t>(n));
  for (int j = 1; j <= n; ++j) assign[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
  return assign;
}

MatchResult match_components(const GmmParams& truth, const GmmParams& fitted) {
  const int K = truth.num_components();
  if (fitted.num_components() != K) throw Error(ErrorCode::ComponentCountMismatch, "component counts differ");
  if (fitted.dim() != truth.dim()) throw Error(ErrorCode::DimensionMismatch, "dimensions differ");
  const auto d = static_cast<double>(truth.dim());

  Matrix cost(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      cost(i, j) = (truth.means[static_cast<size_t>(i)] - fitted.means[static_cast<size_t>(j)]).squaredNorm();
    }
  }
  MatchResult out;
  if (K <= 8) {
    std::vector<int> perm(static_cast<size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int i = 0; i < K; ++i) total += cost(i, perm[static_cast<size_t>(i)]);
      if (total < best) {
        best = total;
        out.perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    out.perm = hungarian(cost);
  }

  const ThetaPoint st = forward_transform(truth);
  const ThetaPoint sf = forward_transform(fitted);
  for (int i = 0; i < K; ++i) {
    const auto j = static_cast<size_t>(out.perm[static_cast<size_t>(i)]);
    const auto ii = static_cast<size_t>(i);
    const double ew = std::pow(truth.weights(i) - fitted.weights(static_cast<Eigen::Index>(j)), 2);
    const double em = (truth.means[ii] - fitted.means[j]).squaredNorm() / d;
    const double ec = (truth.covariances[ii].matrix() - fitted.covariances[j].matrix()).squaredNorm() / (d * d);
    out.mse.weights += ew / K;
    out.mse.means += em / K;
    out.mse.covariances += ec / K;
    out.wmse.weights += truth.weights(i) * ew;
    out.wmse.means += truth.weights(i) * em;
    out.wmse.covariances += truth.weights(i) * ec;
    out.geodesic += spd_geodesic_distance(st.s(i), sf.s(static_cast<int>(j)));
  }
  return out;
}

MseTriple matched_mse(const GmmParams& truth, const GmmParams& fitted) {
  return match_components(truth, fitted).mse;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "label vectors differ in length");
  const auto n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto c2 = [](double x) { return 0.5 * x * (x - 1.0); };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, v] : table) index += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double total = c2(n);
  if (total == 0.0) return 1.0;
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;  // both partitions trivial and equal
  return (index - expected) / (max_index - expected);
}

// ------------------------------------------------------------ density study

double DensityGrid::grid_width() const { return std::sqrt(dx() * dy()); }

void DensityGrid::validate() const {
  if (!(x_hi > x_lo) || !(y_hi > y_lo)) throw Error(ErrorCode::InvalidArgument, "grid box is empty");
  if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidArgument, "grid counts must be positive");
}

Matrix DensityGrid::nodes() const {
  validate();
  Matrix out(n_points(), 2);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      out(i * ny + j, 0) = x_lo + (i + 0.5) * dx();
      out(i * ny + j, 1) = y_lo + (j + 0.5) * dy();
    }
  }
  return out;
}

namespace {

constexpr double kUnitClamp = 1e-16;

double clamp_unit(double u) { return std::clamp(u, kUnitClamp, 1.0 - kUnitClamp); }

}  // namespace

double beta_gamma_density(double x, double y, const BetaGammaParams& p) {
  if (x <= 0.0 || x >= 1.0 || y <= 0.0) return 0.0;
  const boost::math::beta_distribution<double> bd(p.beta_a, p.beta_b);
  const boost::math::gamma_distribution<double> gd(p.gamma_shape, 1.0 / p.gamma_rate);
  const boost::math::normal_distribution<double> nd(0.0, 1.0);
  const double marg = boost::math::pdf(bd, x) * boost::math::pdf(gd, y);
  const double r = p.copula_rho;
  if (r == 0.0) return marg;
  const double a = boost::math::quantile(nd, clamp_unit(boost::math::cdf(bd, x)));
  const double b = boost::math::quantile(nd, clamp_unit(boost::math::cdf(gd, y)));
  const double one_m = 1.0 - r * r;
  const double copula = std::exp(-(r * r * (a * a + b * b) - 2.0 * r * a * b) / (2.0 * one_m)) / std::sqrt(one_m);
  return marg * copula;
}

DensityGrid beta_gamma_truth(DensityGrid grid, const BetaGammaParams& p) {
  if (!(std::abs(p.copula_rho) < 1.0)) throw Error(ErrorCode::InvalidArgument, "copula correlation must lie in (-1, 1)");
  const Matrix nodes = grid.nodes();
  grid.values.resize(grid.n_points());
  for (Eigen::Index r = 0; r < nodes.rows(); ++r) grid.values(r) = beta_gamma_density(nodes(r, 0), nodes(r, 1), p);
  return grid;
}

Matrix sample_beta_gamma(int m, const BetaGammaParams& p, std::mt19937_64& rng) {
  if (!(std::abs(p.copula_rho) < 1.0)) throw Error(ErrorCode::InvalidArgument, "copula correlation must lie in (-1, 1)");
  const boost::math::beta_distribution<double> bd(p.beta_a, p.beta_b);
  const boost::math::gamma_distribution<double> gd(p.gamma_shape, 1.0 / p.gamma_rate);
  const boost::math::normal_distribution<double> nd(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const double r = p.copula_rho;
  Matrix out(m, 2);
  for (int i = 0; i < m; ++i) {
    const double z1 = z(rng);
    const double z2 = r * z1 + std::sqrt(1.0 - r * r) * z(rng);
    out(i, 0) = boost::math::quantile(bd, clamp_unit(boost::math::cdf(nd, z1)));
    out(i, 1) = boost::math::quantile(gd, clamp_unit(boost::math::cdf(nd, z2)));
  }
  return out;
}

double rmise(const GmmParams& model, const DensityGrid& grid) {
  if (model.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "density study needs a bivariate model");
  if (grid.values.size() != grid.n_points()) throw Error(ErrorCode::DimensionMismatch, "grid has no true density values");
  const Vector fhat = mixture_density(model, grid.nodes());
  const Vector sq = (grid.values - fhat).array().square();
  const double mean = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(sq.size());
  const double w = grid.grid_width();
  return std::sqrt(mean * w * w);
}

// ---------------------------------------------------------------- benchmark

const char* to_string(Solver s) { return s == Solver::Em ? "em" : "rntr"; }

Solver parse_solver(const std::string& name) {
  if (name == "em") return Solver::Em;
  if (name == "rntr") return Solver::Rntr;
  throw Error(ErrorCode::InvalidArgument, "unknown solver '" + name + "' (expected em or rntr)");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ a) ^ (b * 0x2545f4914f6cdd1dULL + 1));
}

FitReport fit_with(Solver s, const Dataset& data, const GmmParams& init, const SolverSettings& settings,
                   const PenaltyConfig& penalty) {
  if (s == Solver::Rntr) return fit_rntr(data, init, settings.tr, penalty);
  if (settings.em.map_mode) return fit_em(data, init, settings.em, penalty);
  return fit_em(data, init, settings.em, PenaltyConfig::none(data.dim()));
}

namespace {

std::string join_errors(const std::set<std::string>& errs) {
  std::string out;
  for (const auto& e : errs) out += (out.empty() ? "" : "; ") + e;
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_sum(v.data(), static_cast<Eigen::Index>(v.size())) / static_cast<double>(v.size());
}

std::vector<RunRecord> benchmark_job(const BenchmarkSuite& suite, int cell_index, int run) {
  const BenchmarkCell& cell = suite.cells[static_cast<size_t>(cell_index)];
  std::vector<RunRecord> out;
  RunRecord base;
  base.cell = cell_index;
  base.run = run;
  base.data_seed = derive_seed(suite.seed, static_cast<std::uint64_t>(cell_index), static_cast<std::uint64_t>(run));

  std::optional<SimData> sim;
  std::optional<GmmParams> init;
  std::optional<PenaltyConfig> penalty;
  std::string setup_error;
  try {
    sim.emplace(generate_mixture({cell.d, cell.K, cell.m, cell.c, cell.e, std::nullopt, base.data_seed}));
    const auto t0 = std::chrono::steady_clock::now();
    init.emplace(kmeanspp_init(sim->data, cell.K, {derive_seed(base.data_seed, 1, 0), 1}));
    base.init_time_s = seconds_since(t0);
    penalty.emplace(build_penalty_config(sim->data, suite.settings.penalty));
  } catch (const std::exception& e) {
    setup_error = e.what();
  }

  for (Solver s : cell.solvers) {
    RunRecord rec = base;
    rec.solver = s;
    if (!setup_error.empty()) {
      rec.error = setup_error;
      out.push_back(rec);
      continue;
    }
    try {
      const FitReport rep = fit_with(s, sim->data, *init, suite.settings, *penalty);
      const MatchResult match = match_components(sim->truth, rep.params);
      rec.ok = true;
      rec.iterations = rep.iterations;
      rec.accepted_iterations = rep.accepted_iterations;
      rec.termination = to_string(rep.termination);
      rec.time_s = rep.wall_time_s;
      rec.all = average_log_likelihood(rep.params, sim->data);
      rec.all_penalized = rep.penalized_all(sim->data);
      rec.grad_norm = rep.final_grad_norm;
      rec.mse = match.mse;
      rec.wmse = match.wmse;
      rec.geodesic = match.geodesic;
      rec.ari = adjusted_rand_index(sim->labels, hard_labels(rep.params, sim->data));
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkSuite& suite) {
  std::vector<std::pair<int, int>> jobs;
  for (size_t c = 0; c < suite.cells.size(); ++c) {
    if (suite.cells[c].runs < 0) throw Error(ErrorCode::InvalidArgument, "runs must be nonnegative");
    for (int r = 0; r < suite.cells[c].runs; ++r) jobs.emplace_back(static_cast<int>(c), r);
  }
  std::vector<std::vector<RunRecord>> results(jobs.size());
  const auto njobs = static_cast<long>(jobs.size());
#ifdef RNTR_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (long j = 0; j < njobs; ++j) {
    results[static_cast<size_t>(j)] = benchmark_job(suite, jobs[static_cast<size_t>(j)].first, jobs[static_cast<size_t>(j)].second);
  }

  BenchmarkResult out;
  for (auto& r : results) out.runs.insert(out.runs.end(), r.begin(), r.end());

  for (size_t c = 0; c < suite.cells.size(); ++c) {
    for (Solver s : suite.cells[c].solvers) {
      CellSummary sum;
      sum.cell = static_cast<int>(c);
      sum.spec = suite.cells[c];
      sum.solver = s;
      std::vector<double> it, tm, all, mw, mm, mc, ari;
      std::set<std::string> errs;
      for (const auto& r : out.runs) {
        if (r.cell != static_cast<int>(c) || r.solver != s) continue;
        if (!r.ok) {
          ++sum.runs_failed;
          errs.insert(r.error);
          continue;
        }
        ++sum.runs_ok;
        it.push_back(r.iterations);
        tm.push_back(r.time_s);
        all.push_back(r.all);
        mw.push_back(r.mse.weights);
        mm.push_back(r.mse.means);
        mc.push_back(r.mse.covariances);
        ari.push_back(r.ari);
      }
      sum.mean_iterations = mean_of(it);
      sum.mean_time_s = mean_of(tm);
      sum.mean_all = mean_of(all);
      sum.mse = {mean_of(mw), mean_of(mm), mean_of(mc)};
      sum.mean_ari = mean_of(ari);
      sum.errors = join_errors(errs);
      out.summary.push_back(sum);
    }
  }
  return out;
}

DensityResult run_density_study(const DensityStudy& study) {
  if (study.runs < 0 || study.m < 2) throw Error(ErrorCode::InvalidArgument, "density study needs runs >= 0 and m >= 2");
  DensityResult out;
  out.grid = beta_gamma_truth(study.grid, study.truth);
  const Matrix nodes = out.grid.nodes();

  for (int K : study.components) {
    std::vector<DensityRow> rows;
    std::vector<std::vector<double>> rm(study.solvers.size()), it(study.solvers.size()), tm(study.solvers.size()),
        all(study.solvers.size());
    std::vector<std::set<std::string>> errs(study.solvers.size());
    for (size_t s = 0; s < study.solvers.size(); ++s) {
      DensityRow row;
      row.K = K;
      row.solver = study.solvers[s];
      rows.push_back(row);
    }
    for (int r = 0; r < study.runs; ++r) {
      const std::uint64_t seed = derive_seed(study.seed, static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(r));
      std::string setup_error;
      std::optional<Dataset> data;
      std::optional<GmmParams> init;
      std::optional<PenaltyConfig> penalty;
      try {
        std::mt19937_64 rng(seed);
        data.emplace(sample_beta_gamma(study.m, study.truth, rng));
        init.emplace(kmeanspp_init(*data, K, {derive_seed(seed, 1, 0), 1}));
        penalty.emplace(build_penalty_config(*data, study.settings.penalty));
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (size_t s = 0; s < study.solvers.size(); ++s) {
        DensityRow& row = rows[s];
        if (!setup_error.empty()) {
          ++row.runs_failed;
          errs[s].insert(setup_error);
          continue;
        }
        try {
          const FitReport rep = fit_with(study.solvers[s], *data, *init, study.settings, *penalty);
          rm[s].push_back(rmise(rep.params, out.grid));
          it[s].push_back(rep.iterations);
          tm[s].push_back(rep.wall_time_s);
          all[s].push_back(average_log_likelihood(rep.params, *data));
          if (row.runs_ok == 0) row.pointwise_error = mixture_density(rep.params, nodes) - out.grid.values;
          ++row.runs_ok;
        } catch (const std::exception& e) {
          ++row.runs_failed;
          errs[s].insert(e.what());
        }
      }
    }
    for (size_t s = 0; s < study.solvers.size(); ++s) {
      DensityRow& row = rows[s];
      row.mean_rmise = mean_of(rm[s]);
      if (rm[s].size() > 1) {
        double ss = 0.0;
        for (double v : rm[s]) ss += (v - row.mean_rmise) * (v - row.mean_rmise);
        row.se_rmise = std::sqrt(ss / static_cast<double>(rm[s].size() - 1)) / std::sqrt(static_cast<double>(rm[s].size()));
      }
      row.mean_iterations = mean_of(it[s]);
      row.mean_time_s = mean_of(tm[s]);
      row.mean_all = mean_of(all[s]);
      row.errors = join_errors(errs[s]);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace rntr
