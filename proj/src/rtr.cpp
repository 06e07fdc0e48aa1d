#include "rntr/rtr.hpp"

#include <chrono>
#include <memory>

namespace rntr {

GmmManifoldProblem::State GmmManifoldProblem::evaluate(const Point& x) const {
  State st;
  st.ws = std::make_shared<HvpWorkspace>(x, data_, penalty_);
  const GradResult& g = st.ws->gradient();
  st.cost = -g.objective_value;
  st.grad = -1.0 * g.grad;
  st.grad_norm = g.norm;
  return st;
}

GmmManifoldProblem::Tangent GmmManifoldProblem::hess(const Point& x, const State& st,
                                                     const Tangent& v) const {
  return -1.0 * hessian_vector_product(x, v, data_, penalty_, *st.ws);
}

int GmmManifoldProblem::dim(const Point& x) const {
  return static_cast<int>(TangentVector::zero_like(x).manifold_dim());
}

void GmmManifoldProblem::diagnostics(const Point& x, IterRecord& rec) const {
  rec.min_alpha = x.weights().minCoeff();
  double mx = 0.0;
  for (const auto& s : x.s_blocks()) mx = std::max(mx, s.matrix().norm());
  rec.max_s_over_psi = psi_norm_ > 0.0 ? mx / psi_norm_ : 0.0;
}

FitReport fit_rntr(const Dataset& data, const GmmParams& init, const TrConfig& cfg,
                   const PenaltyConfig& penalty) {
  const auto start = std::chrono::steady_clock::now();
  std::optional<ThetaPoint> theta0;
  try {
    if (init.dim() != data.dim()) throw Error(ErrorCode::DimensionMismatch, "init dim != data dim");
    theta0.emplace(forward_transform(init));
  } catch (const Error& e) {
    throw Error(ErrorCode::InitializationError, e.what());
  }

  GmmManifoldProblem prob(data, penalty);
  auto res = minimize_trust_region(prob, std::move(*theta0), cfg);

  FitReport rep{
      .solver = "rntr",
      .theta = res.point,
      .params = backward_transform(res.point),
      .trace = std::move(res.trace),
      .termination = res.termination,
      .iterations = res.iterations,
      .accepted_iterations = res.accepted,
      .wall_time_s = 0.0,
      .penalized_objective = -res.final_cost,
      .final_grad_norm = res.final_grad_norm,
  };
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace rntr
