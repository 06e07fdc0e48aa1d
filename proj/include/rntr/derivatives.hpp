#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rntr/gmm_model.hpp"
#include "rntr/spd.hpp"

namespace rntr {

struct GradResult {
  TangentVector grad;
  double norm = 0.0;             // sqrt(<grad, grad>_theta)
  double objective_value = 0.0;  // penalized objective at theta
};

/// Quantities shared by the gradient and every Hessian-vector product at a
/// fixed point: responsibilities, Y S_l^{-1}, weighted scatter matrices.
/// Tied to the ThetaPoint it was built from through its generation number.
class HvpWorkspace {
 public:
  HvpWorkspace(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg);

  std::uint64_t generation() const { return generation_; }
  const GradResult& gradient() const { return grad_; }
  const Responsibilities& resp() const { return resp_; }

 private:
  friend TangentVector hessian_vector_product(const ThetaPoint&, const TangentVector&,
                                              const Dataset&, const PenaltyConfig&,
                                              const HvpWorkspace&);

  std::uint64_t generation_;
  Responsibilities resp_;
  Vector alpha_;
  Vector mass_;                   // n_l = sum_i f_l^i
  std::vector<Matrix> y_sinv_;    // Y S_l^{-1}, m x p
  std::vector<Matrix> scatter_;   // sum_i f_l^i y_i y_i^T
  GradResult grad_;
};

/// Riemannian gradient of the penalized objective (ascent direction).
GradResult riemannian_gradient(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg);

/// Riemannian Hessian of the penalized objective applied to xi. Throws
/// StaleWorkspace when `ws` was built for another point.
TangentVector hessian_vector_product(const ThetaPoint& theta, const TangentVector& xi,
                                     const Dataset& data, const PenaltyConfig& cfg,
                                     const HvpWorkspace& ws);

/// Gaussian symmetric blocks and eta entries, scaled to unit metric norm.
TangentVector random_unit_tangent(const ThetaPoint& theta, std::mt19937_64& rng);

struct FdReport {
  int trials = 0;
  double max_rel_error = 0.0;
  std::vector<double> rel_errors;
  std::optional<TangentVector> worst_direction;

  bool passed(double tol) const { return max_rel_error <= tol; }
};

/// Compares <grad, xi> with a central difference of the penalized objective
/// along retract(theta, t xi), step 1e-5, over `trials` random unit tangents.
/// Relative error is |exact - fd| / max(1, |fd|).
FdReport fd_gradient_check(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg,
                           int trials, std::uint64_t seed = 1);

/// Same harness for a caller-supplied gradient (used to test the harness).
FdReport fd_gradient_check(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg,
                           const TangentVector& grad, int trials, std::uint64_t seed = 1);

/// Compares <H[xi], xi> with a five-point second difference along the
/// retraction, step 1e-3.
FdReport fd_hessian_check(const ThetaPoint& theta, const Dataset& data, const PenaltyConfig& cfg,
                          int trials, std::uint64_t seed = 1);

/// phi(t) = penalized_objective(retract(theta, t xi)) and its derivatives.
double directional_derivative_fd(const ThetaPoint& theta, const TangentVector& xi,
                                 const Dataset& data, const PenaltyConfig& cfg, double h = 1e-5);
double second_derivative_fd(const ThetaPoint& theta, const TangentVector& xi, const Dataset& data,
                            const PenaltyConfig& cfg, double h = 1e-3);

}  // namespace rntr
