#pragma once

// Retraction-based trust-region loop. The problem type supplies the geometry
// (inner product, retraction) and the cost to minimize with its gradient and
// Hessian operator; the loop is shared by the GMM solver and by test shims.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rntr/error.hpp"
#include "rntr/lbfgs.hpp"
#include "rntr/tcg.hpp"

namespace rntr {

struct TrConfig {
  std::optional<double> delta0;     // unset: model-based initial radius
  std::optional<double> delta_max;  // unset: 10 * delta0
  double rho_prime = 0.1;
  double omega1 = 0.25;
  double omega2 = 0.75;
  double tau1 = 0.25;
  double tau2 = 2.0;
  int max_iters = 1500;
  double grad_tol = 1e-6;
  double all_diff_tol = 1e-10;  // <= 0 disables the average log-likelihood test
  TcgConfig tcg;

  /// Throws InvalidArgument unless rho' in (0, 1/4), 0 <= omega1 <= omega2 <= 1,
  /// tau1 <= 1/4, tau2 > 1, 0 < delta_exponent <= 1, 0 < kappa < 1.
  void validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (!(rho_prime > 0.0 && rho_prime < 0.25)) fail("rho_prime must lie in (0, 1/4)");
    if (!(0.0 <= omega1 && omega1 <= omega2 && omega2 <= 1.0)) fail("need 0 <= omega1 <= omega2 <= 1");
    if (!(tau1 > 0.0 && tau1 <= 0.25)) fail("need 0 < tau1 <= 1/4");
    if (!(tau2 > 1.0)) fail("need tau2 > 1");
    if (delta0 && !(*delta0 > 0.0)) fail("delta0 must be positive");
    if (delta_max && !(*delta_max > 0.0)) fail("delta_max must be positive");
    if (!(tcg.delta_exponent > 0.0 && tcg.delta_exponent <= 1.0)) fail("tcg delta must lie in (0, 1]");
    if (!(tcg.kappa > 0.0 && tcg.kappa < 1.0)) fail("tcg kappa must lie in (0, 1)");
    if (max_iters < 0) fail("max_iters must be nonnegative");
  }
};

enum class Termination { GradientTolerance, AllDifference, MaxIterations };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::GradientTolerance: return "grad_tol";
    case Termination::AllDifference: return "all_diff";
    case Termination::MaxIterations: return "max_iters";
  }
  return "unknown";
}

struct IterRecord {
  int iter = 0;
  double objective = 0.0;  // maximized objective (negated cost) at the iterate
  double grad_norm = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
  int tcg_iterations = 0;
  TcgStop tcg_stop = TcgStop::MaxInner;
  double model_decrease = 0.0;
  double actual_decrease = 0.0;
  // Monitored quantities from the global convergence assumptions.
  double min_alpha = 0.0;
  double max_s_over_psi = 0.0;
};

/// Ratio of actual to predicted decrease. When the predicted decrease is
/// below 1e-14 |f| the ratio is 1 for a nonnegative actual decrease and 0
/// otherwise; elsewhere both terms are offset by 1e3 eps max(1, |f|) so
/// round-off near a stationary point does not reject good steps.
inline double trust_ratio(double cost, double actual, double predicted) {
  if (!std::isfinite(actual)) return -std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, std::abs(cost));
  if (predicted < 1e-14 * std::abs(cost)) return actual >= 0.0 ? 1.0 : 0.0;
  const double reg = 1e3 * std::numeric_limits<double>::epsilon() * scale;
  return (actual + reg) / (predicted + reg);
}

template <typename P>
struct TrResult {
  typename P::Point point;
  std::vector<IterRecord> trace;
  Termination termination = Termination::MaxIterations;
  int iterations = 0;
  int accepted = 0;
  double final_cost = 0.0;
  double final_grad_norm = 0.0;
};

/// Minimizes prob's cost from x0.
///
/// Problem interface:
///   Point, Tangent, State (with members cost, grad, grad_norm)
///   State evaluate(const Point&)
///   Tangent hess(const Point&, const State&, const Tangent&)
///   double inner(const Point&, const Tangent&, const Tangent&)
///   Point retract(const Point&, const Tangent&)
///   double cost(const Point&)            may throw rntr::Error (step rejected)
///   double average_scale()               ALL difference = |df| / scale
///   int dim(const Point&)
///   void diagnostics(const Point&, IterRecord&)   optional
template <typename P>
TrResult<P> minimize_trust_region(const P& prob, typename P::Point x0, const TrConfig& cfg) {
  using Point = typename P::Point;
  using Tangent = typename P::Tangent;
  cfg.validate();

  TrResult<P> out{std::move(x0), {}};
  Point& x = out.point;
  auto st = prob.evaluate(x);

  const std::function<double(const Tangent&, const Tangent&)> inner =
      [&](const Tangent& a, const Tangent& b) { return prob.inner(x, a, b); };
  const std::function<Tangent(const Tangent&)> hess = [&](const Tangent& v) {
    return prob.hess(x, st, v);
  };

  auto finish = [&](Termination why) {
    out.termination = why;
    out.final_cost = st.cost;
    out.final_grad_norm = st.grad_norm;
    return out;
  };

  if (st.grad_norm < cfg.grad_tol) return finish(Termination::GradientTolerance);

  double delta_max = cfg.delta_max.value_or(std::numeric_limits<double>::infinity());
  double delta = cfg.delta0 ? *cfg.delta0 : initial_radius<Tangent>(st.grad, hess, inner, delta_max);
  if (!cfg.delta_max) delta_max = 10.0 * delta;
  delta = std::min(delta, delta_max);

  LbfgsPreconditioner<Tangent> precond(cfg.tcg.lbfgs_memory);

  for (int t = 0; t < cfg.max_iters; ++t) {
    TcgOperators<Tangent> ops{inner, hess, {}};
    if (cfg.tcg.precondition && !precond.empty()) {
      ops.precond = [&](const Tangent& r) { return precond.apply(r, inner); };
    }
    auto sub = solve_subproblem_tcg(st.grad, delta, cfg.tcg, ops, prob.dim(x));

    IterRecord rec;
    rec.iter = t;
    rec.objective = -st.cost;
    rec.grad_norm = st.grad_norm;
    rec.delta = delta;
    rec.tcg_iterations = sub.iterations;
    rec.tcg_stop = sub.stop;
    rec.model_decrease = sub.model_decrease;
    rec.step_norm = std::sqrt(std::max(0.0, inner(sub.step, sub.step)));
    if constexpr (requires { prob.diagnostics(x, rec); }) prob.diagnostics(x, rec);

    std::optional<Point> candidate;
    double new_cost = std::numeric_limits<double>::infinity();
    try {
      candidate.emplace(prob.retract(x, sub.step));
      new_cost = prob.cost(*candidate);
    } catch (const Error&) {
      candidate.reset();
    }
    rec.actual_decrease = st.cost - new_cost;
    rec.rho = trust_ratio(st.cost, rec.actual_decrease, sub.model_decrease);

    if (rec.rho < cfg.omega1) {
      delta = cfg.tau1 * delta;
    } else if (rec.rho > cfg.omega2 && std::abs(rec.step_norm - delta) <= 1e-8 * delta) {
      delta = std::min(cfg.tau2 * delta, delta_max);
    }

    rec.accepted = candidate.has_value() && rec.rho > cfg.rho_prime;
    if (rec.accepted || cfg.tcg.reuse_after_reject) {
      precond.push_all(sub.pairs);
    } else {
      precond.clear();
    }
    out.trace.push_back(rec);
    out.iterations = t + 1;

    if (rec.accepted) {
      ++out.accepted;
      const double old_cost = st.cost;
      x = std::move(*candidate);
      st = prob.evaluate(x);
      if (st.grad_norm < cfg.grad_tol) return finish(Termination::GradientTolerance);
      const double all_diff = std::abs(old_cost - st.cost) / prob.average_scale();
      if (cfg.all_diff_tol > 0.0 && all_diff < cfg.all_diff_tol) {
        return finish(Termination::AllDifference);
      }
    }
  }
  return finish(Termination::MaxIterations);
}

}  // namespace rntr
