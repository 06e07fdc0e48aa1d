#pragma once

// Steihaug-Toint truncated conjugate gradient for the trust-region subproblem
//
//   min_s  <g, s> + 1/2 <H s, s>   s.t.  ||s|| <= radius
//
// over any inner-product space. V needs copy construction, V + V, V - V and
// double * V; all inner products go through the supplied callable, so the
// same code runs on tangent spaces with a point-dependent metric and on plain
// Eigen vectors.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rntr/error.hpp"

namespace rntr {

struct TcgConfig {
  double delta_exponent = 0.9;  // residual test ||r|| <= ||r0|| min(||r0||^delta, kappa)
  double kappa = 0.1;
  int max_inner = 0;            // 0: dimension of the search space
  bool precondition = true;
  int lbfgs_memory = 10;
  /// Keep preconditioner pairs from a subproblem whose step was rejected.
  bool reuse_after_reject = true;
};

enum class TcgStop { NegativeCurvature, Boundary, Residual, MaxInner };

inline const char* to_string(TcgStop s) {
  switch (s) {
    case TcgStop::NegativeCurvature: return "negative_curvature";
    case TcgStop::Boundary: return "boundary";
    case TcgStop::Residual: return "residual";
    case TcgStop::MaxInner: return "max_inner";
  }
  return "unknown";
}

template <typename V>
struct TcgOperators {
  std::function<double(const V&, const V&)> inner;
  std::function<V(const V&)> hess;
  /// Approximate inverse Hessian; empty means identity.
  std::function<V(const V&)> precond;
};

template <typename V>
struct TcgResult {
  V step;
  V hess_step;  // H[step], accumulated during the iteration
  TcgStop stop = TcgStop::MaxInner;
  int iterations = 0;
  double model_decrease = 0.0;   // m(0) - m(step)
  double cauchy_decrease = 0.0;  // m(0) - m(cauchy point)
  bool used_cauchy_fallback = false;
  /// Curvature pairs (alpha d, alpha H d) of the interior CG steps.
  std::vector<std::pair<V, V>> pairs;
};

/// Model decrease of the Cauchy point along -g inside the ball of `radius`.
inline double cauchy_model_decrease(double g_norm, double g_hg, double radius) {
  if (g_norm == 0.0) return 0.0;
  double t = radius / g_norm;
  if (g_hg > 0.0) t = std::min(t, g_norm * g_norm / g_hg);
  return t * g_norm * g_norm - 0.5 * t * t * g_hg;
}

/// Positive root tau of ||eta + tau d||^2 = radius^2.
inline double boundary_root(double e_e, double e_d, double d_d, double radius) {
  const double disc = e_d * e_d + d_d * (radius * radius - e_e);
  return (-e_d + std::sqrt(std::max(disc, 0.0))) / d_d;
}

template <typename V>
TcgResult<V> solve_subproblem_tcg(const V& grad, double radius, const TcgConfig& cfg,
                                  const TcgOperators<V>& ops, int space_dim) {
  const auto inner = ops.inner;
  auto apply_precond = [&](const V& r) { return ops.precond ? ops.precond(r) : V(r); };
  const int max_inner = cfg.max_inner > 0 ? cfg.max_inner : std::max(space_dim, 1);

  TcgResult<V> res{V(0.0 * grad), V(0.0 * grad), TcgStop::MaxInner, 0, 0.0, 0.0, false, {}};
  V& eta = res.step;
  V& h_eta = res.hess_step;

  V r = grad;
  V z = apply_precond(r);
  V d = V(-1.0 * z);
  double z_r = inner(z, r);
  const double r0_norm = std::sqrt(inner(r, r));
  const double tol = r0_norm * std::min(std::pow(r0_norm, cfg.delta_exponent), cfg.kappa);

  // Quadratic model value relative to m(0): <g, eta> + 1/2 <H eta, eta>.
  auto model = [&](const V& s, const V& hs) { return inner(grad, s) + 0.5 * inner(hs, s); };

  res.stop = TcgStop::MaxInner;
  for (int j = 0; j < max_inner; ++j) {
    V hd = ops.hess(d);
    const double d_hd = inner(d, hd);
    const double e_e = inner(eta, eta);
    const double e_d = inner(eta, d);
    const double d_d = inner(d, d);
    res.iterations = j + 1;

    const double alpha = z_r / d_hd;
    const double next_norm2 = e_e + 2.0 * alpha * e_d + alpha * alpha * d_d;
    if (d_hd <= 0.0 || next_norm2 >= radius * radius) {
      const double tau = boundary_root(e_e, e_d, d_d, radius);
      eta = V(eta + tau * d);
      h_eta = V(h_eta + tau * hd);
      res.stop = d_hd <= 0.0 ? TcgStop::NegativeCurvature : TcgStop::Boundary;
      break;
    }

    eta = V(eta + alpha * d);
    h_eta = V(h_eta + alpha * hd);
    res.pairs.emplace_back(V(alpha * d), V(alpha * hd));
    r = V(r + alpha * hd);

    const double r_norm = std::sqrt(inner(r, r));
    if (r_norm <= tol) {
      res.stop = TcgStop::Residual;
      break;
    }
    z = apply_precond(r);
    const double z_r_new = inner(z, r);
    const double beta = z_r_new / z_r;
    z_r = z_r_new;
    d = V(-1.0 * z + beta * d);
  }

  res.model_decrease = -model(eta, h_eta);

  // Preconditioned iterations do not start at the Cauchy point; fall back to
  // it whenever the tCG step does worse beyond round-off.
  const double g_norm = std::sqrt(inner(grad, grad));
  if (g_norm > 0.0) {
    V hg = ops.hess(grad);
    const double g_hg = inner(grad, hg);
    res.cauchy_decrease = cauchy_model_decrease(g_norm, g_hg, radius);
    if (res.model_decrease < res.cauchy_decrease - 1e-12 * std::abs(res.cauchy_decrease)) {
      double t = radius / g_norm;
      if (g_hg > 0.0) t = std::min(t, g_norm * g_norm / g_hg);
      eta = V(-t * grad);
      h_eta = V(-t * hg);
      res.model_decrease = res.cauchy_decrease;
      res.used_cauchy_fallback = true;
    }
  }
  return res;
}

/// Initial trust-region radius from the model along steepest descent:
/// ||g||^3 / <H g, g> for positive curvature, ||g|| otherwise, clipped to
/// [1e-4, max_radius]. Throws ZeroGradient.
template <typename V>
double initial_radius(const V& grad, const std::function<V(const V&)>& hess,
                      const std::function<double(const V&, const V&)>& inner, double max_radius) {
  const double g_norm = std::sqrt(inner(grad, grad));
  if (!(g_norm > 0.0)) throw Error(ErrorCode::ZeroGradient, "initial radius needs a nonzero gradient");
  const double curv = inner(hess(grad), grad);
  double radius = curv > 0.0 ? g_norm * g_norm * g_norm / curv : g_norm;
  radius = std::max(radius, 1e-4);
  return std::min(radius, max_radius);
}

}  // namespace rntr
