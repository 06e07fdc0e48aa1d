#include "rntr/em.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace rntr {

Matrix floor_eigenvalues(const Matrix& a, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  Vector ev = es.eigenvalues().cwiseMax(floor);
  Matrix out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Matrix sample_covariance(const Matrix& points) {
  const Eigen::Index m = points.rows();
  if (m < 2) return Matrix::Zero(points.cols(), points.cols());
  const Matrix centered = points.rowwise() - points.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(m - 1);
}

namespace {

double default_floor(const Matrix& cov) {
  const double tr = cov.trace() / static_cast<double>(cov.rows());
  return tr > 0.0 ? 1e-8 * tr : 1e-8;
}

double squared_distance(const Matrix& x, Eigen::Index i, const Vector& c) {
  return (x.row(i).transpose() - c).squaredNorm();
}

// Index drawn proportionally to `weights`; uniform over unchosen points when
// the weights sum to zero.
Eigen::Index sample_index(const Vector& weights, const std::vector<bool>& chosen, std::mt19937_64& rng) {
  const double total = pairwise_sum(weights.data(), weights.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (total > 0.0) {
    const double target = unif(rng) * total;
    double acc = 0.0;
    Eigen::Index last_positive = 0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (weights(i) <= 0.0) continue;
      acc += weights(i);
      last_positive = i;
      if (acc > target) return i;
    }
    return last_positive;
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!chosen[static_cast<size_t>(i)]) free.push_back(i);
  }
  std::uniform_int_distribution<size_t> pick(0, free.size() - 1);
  return free[pick(rng)];
}

}  // namespace

GmmParams kmeanspp_init(const Dataset& data, int num_components, const KppConfig& cfg) {
  const Matrix& x = data.points();
  const Eigen::Index m = x.rows();
  const Eigen::Index d = x.cols();
  if (num_components < 1) throw Error(ErrorCode::InvalidArgument, "need at least one component");
  if (cfg.n_candidates < 1) throw Error(ErrorCode::InvalidArgument, "n_candidates must be positive");
  if (m < num_components) throw Error(ErrorCode::TooFewPoints, "fewer points than components");
  const auto K = static_cast<size_t>(num_components);

  std::mt19937_64 rng(cfg.seed);
  std::vector<bool> chosen(static_cast<size_t>(m), false);
  std::vector<Vector> seeds;
  std::uniform_int_distribution<Eigen::Index> first(0, m - 1);
  Eigen::Index idx = first(rng);
  seeds.push_back(x.row(idx).transpose());
  chosen[static_cast<size_t>(idx)] = true;

  Vector dist(m);
  for (Eigen::Index i = 0; i < m; ++i) dist(i) = squared_distance(x, i, seeds[0]);

  while (seeds.size() < K) {
    Eigen::Index best = -1;
    Vector best_dist;
    double best_pot = std::numeric_limits<double>::infinity();
    for (int c = 0; c < cfg.n_candidates; ++c) {
      const Eigen::Index cand = sample_index(dist, chosen, rng);
      Vector nd(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        nd(i) = std::min(dist(i), squared_distance(x, i, x.row(cand).transpose()));
      }
      const double pot = pairwise_sum(nd.data(), m);
      if (pot < best_pot || best < 0) {
        best_pot = pot;
        best = cand;
        best_dist = std::move(nd);
      }
    }
    seeds.push_back(x.row(best).transpose());
    chosen[static_cast<size_t>(best)] = true;
    dist = std::move(best_dist);
  }

  // One Lloyd assignment; ties go to the lowest seed index.
  std::vector<std::vector<Eigen::Index>> members(K);
  for (Eigen::Index i = 0; i < m; ++i) {
    size_t arg = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < K; ++k) {
      const double dd = squared_distance(x, i, seeds[k]);
      if (dd < bd) {
        bd = dd;
        arg = k;
      }
    }
    members[arg].push_back(i);
  }

  const Matrix data_cov = sample_covariance(x);
  const double floor = std::max(default_floor(data_cov), 1e-6 * data_cov.trace() / static_cast<double>(d));
  const Matrix shared = floor_eigenvalues(data_cov, floor > 0.0 ? floor : 1e-8);

  GmmParams out;
  out.weights = Vector(static_cast<Eigen::Index>(K));
  double total = 0.0;
  for (size_t k = 0; k < K; ++k) {
    const auto& mem = members[k];
    const double count = static_cast<double>(std::max<size_t>(mem.size(), 1));
    out.weights(static_cast<Eigen::Index>(k)) = count;
    total += count;
    if (mem.empty()) {
      out.means.push_back(seeds[k]);
      out.covariances.emplace_back(shared);
      continue;
    }
    Matrix pts(static_cast<Eigen::Index>(mem.size()), d);
    for (size_t r = 0; r < mem.size(); ++r) pts.row(static_cast<Eigen::Index>(r)) = x.row(mem[r]);
    out.means.push_back(pts.colwise().mean().transpose());
    if (mem.size() < 2) {
      out.covariances.emplace_back(shared);
    } else {
      out.covariances.emplace_back(floor_eigenvalues(sample_covariance(pts), floor > 0.0 ? floor : 1e-8));
    }
  }
  out.weights /= total;
  return out;
}

namespace {

struct EStep {
  Responsibilities resp;
  double objective = 0.0;  // penalized
};

EStep e_step(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& pen) {
  EStep e;
  e.resp = responsibilities(theta, data);
  e.objective = pairwise_sum(e.resp.row_logsum.data(), e.resp.row_logsum.size()) + penalty(theta, pen);
  return e;
}

Vector eta_from_weights(const Vector& alpha) {
  const Eigen::Index K = alpha.size();
  Vector eta(K - 1);
  for (Eigen::Index j = 0; j + 1 < K; ++j) eta(j) = std::log(alpha(j)) - std::log(alpha(K - 1));
  return eta;
}

ThetaPoint m_step(const Responsibilities& resp, const Dataset& data, const EmConfig& cfg,
                  const PenaltyConfig& penalty, double floor) {
  const Matrix& y = data.augmented();
  const Eigen::Index m = data.size();
  const Eigen::Index d = data.dim();
  const Eigen::Index K = resp.f.cols();
  const Vector mass = resp.f.colwise().sum().transpose();

  std::vector<SpdMatrix> blocks;
  Vector alpha(K);
  for (Eigen::Index j = 0; j < K; ++j) {
    const Matrix weighted = y.array().colwise() * resp.f.col(j).array();
    const Matrix scatter = y.transpose() * weighted;
    if (cfg.map_mode) {
      blocks.emplace_back((scatter + penalty.beta * penalty.psi.matrix()) / (mass(j) + penalty.rho));
      alpha(j) = (mass(j) + penalty.zeta) / (static_cast<double>(m) + static_cast<double>(K) * penalty.zeta);
    } else {
      if (!(mass(j) >= 1e-12)) {
        throw Error(ErrorCode::DegenerateComponent, "component " + std::to_string(j) + " lost all responsibility");
      }
      const Matrix moment = scatter / mass(j);
      const Vector mu = moment.topRightCorner(d, 1);
      const Matrix cov = floor_eigenvalues(moment.topLeftCorner(d, d) - mu * mu.transpose(), floor);
      Matrix s(d + 1, d + 1);
      s.topLeftCorner(d, d) = cov + mu * mu.transpose();
      s.topRightCorner(d, 1) = mu;
      s.bottomLeftCorner(1, d) = mu.transpose();
      s(d, d) = 1.0;
      blocks.emplace_back(s);
      alpha(j) = mass(j) / static_cast<double>(m);
    }
  }
  alpha /= alpha.sum();
  return ThetaPoint(std::move(blocks), eta_from_weights(alpha));
}

}  // namespace

FitReport fit_em(const Dataset& data, const GmmParams& init, const EmConfig& cfg,
                 const PenaltyConfig& penalty) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.max_iters < 0) throw Error(ErrorCode::InvalidArgument, "max_iters must be nonnegative");
  std::optional<ThetaPoint> theta;
  try {
    if (init.dim() != data.dim()) throw Error(ErrorCode::DimensionMismatch, "init dim != data dim");
    init.validate();
    theta.emplace(forward_transform(init));
  } catch (const Error& e) {
    throw Error(ErrorCode::InitializationError, e.what());
  }
  const double floor = cfg.cov_floor >= 0.0 ? cfg.cov_floor : default_floor(sample_covariance(data.points()));
  const double m = static_cast<double>(data.size());

  std::vector<IterRecord> trace;
  EStep cur = e_step(*theta, data, penalty);
  Termination why = Termination::MaxIterations;
  int iters = 0;
  for (int t = 0; t < cfg.max_iters; ++t) {
    IterRecord rec;
    rec.iter = t;
    rec.objective = cur.objective;
    rec.accepted = true;
    rec.min_alpha = theta->weights().minCoeff();
    trace.push_back(rec);

    theta.emplace(m_step(cur.resp, data, cfg, penalty, floor));
    EStep next = e_step(*theta, data, penalty);
    const double diff = std::abs(next.objective - cur.objective) / m;
    cur = std::move(next);
    iters = t + 1;
    if (diff < cfg.all_diff_tol) {
      why = Termination::AllDifference;
      break;
    }
  }

  FitReport rep{
      .solver = "em",
      .theta = *theta,
      .params = backward_transform(*theta),
      .trace = std::move(trace),
      .termination = why,
      .iterations = iters,
      .accepted_iterations = iters,
      .wall_time_s = 0.0,
      .penalized_objective = cur.objective,
      .final_grad_norm = riemannian_gradient(*theta, data, penalty).norm,
  };
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace rntr
