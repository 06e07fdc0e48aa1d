#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rntr/derivatives.hpp"
#include "rntr/gmm_model.hpp"
#include "rntr/trust_region.hpp"

namespace rntr {

/// Outcome of a GMM fit, shared by the Riemannian and EM solvers.
struct FitReport {
  std::string solver;
  ThetaPoint theta;
  GmmParams params;
  std::vector<IterRecord> trace;
  Termination termination = Termination::MaxIterations;
  int iterations = 0;           // outer iterations, rejected ones included
  int accepted_iterations = 0;  // parameter updates
  double wall_time_s = 0.0;
  double penalized_objective = 0.0;
  double final_grad_norm = 0.0;

  /// Penalized objective divided by the number of observations.
  double penalized_all(const Dataset& data) const {
    return penalized_objective / static_cast<double>(data.size());
  }
};

/// Minimizes f = -penalized_objective over the product manifold with the
/// Riemannian Newton trust-region method, starting from `init`.
/// Throws InitializationError when `init` is not a valid parameter set.
FitReport fit_rntr(const Dataset& data, const GmmParams& init, const TrConfig& cfg,
                   const PenaltyConfig& penalty);

/// The GMM cost in the form minimize_trust_region expects.
class GmmManifoldProblem {
 public:
  using Point = ThetaPoint;
  using Tangent = TangentVector;

  struct State {
    double cost = 0.0;
    Tangent grad;
    double grad_norm = 0.0;
    std::shared_ptr<HvpWorkspace> ws;
  };

  GmmManifoldProblem(const Dataset& data, const PenaltyConfig& penalty)
      : data_(data), penalty_(penalty), psi_norm_(penalty.psi.matrix().norm()) {}

  State evaluate(const Point& x) const;
  Tangent hess(const Point& x, const State& st, const Tangent& v) const;
  double inner(const Point& x, const Tangent& a, const Tangent& b) const { return inner_product(x, a, b); }
  Point retract(const Point& x, const Tangent& v) const { return rntr::retract(x, v); }
  double cost(const Point& x) const { return -penalized_objective(x, data_, penalty_); }
  double average_scale() const { return static_cast<double>(data_.size()); }
  int dim(const Point& x) const;
  void diagnostics(const Point& x, IterRecord& rec) const;

 private:
  const Dataset& data_;
  const PenaltyConfig& penalty_;
  double psi_norm_;
};

}  // namespace rntr
