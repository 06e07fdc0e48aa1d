#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

namespace rntr {

/// Limited-memory BFGS inverse-Hessian approximation, applied with the
/// two-loop recursion. Pairs are stored as coordinates and reinterpreted at
/// whatever point the inner product belongs to; pairs whose curvature
/// <s, y> <= 1e-12 ||s|| ||y|| under that inner product are skipped, which
/// keeps the operator symmetric positive definite.
template <typename V>
class LbfgsPreconditioner {
 public:
  explicit LbfgsPreconditioner(int memory = 10) : memory_(memory > 0 ? memory : 1) {}

  void clear() { pairs_.clear(); }
  bool empty() const { return pairs_.empty(); }
  int size() const { return static_cast<int>(pairs_.size()); }

  /// Appends a (step, gradient-change) pair, evicting the oldest beyond memory.
  void push(V s, V y) {
    pairs_.emplace_back(std::move(s), std::move(y));
    while (static_cast<int>(pairs_.size()) > memory_) pairs_.pop_front();
  }

  template <typename Range>
  void push_all(const Range& pairs) {
    for (const auto& [s, y] : pairs) push(s, y);
  }

  V apply(const V& r, const std::function<double(const V&, const V&)>& inner) const {
    struct Active {
      const V* s;
      const V* y;
      double rho;
    };
    std::vector<Active> act;
    act.reserve(pairs_.size());
    for (const auto& [s, y] : pairs_) {
      const double sy = inner(s, y);
      const double ss = inner(s, s);
      const double yy = inner(y, y);
      if (sy > 1e-12 * std::sqrt(ss * yy)) act.push_back({&s, &y, 1.0 / sy});
    }
    if (act.empty()) return r;

    V q = r;
    std::vector<double> coef(act.size());
    for (size_t k = act.size(); k-- > 0;) {
      coef[k] = act[k].rho * inner(*act[k].s, q);
      q = V(q - coef[k] * *act[k].y);
    }
    const Active& last = act.back();
    const double gamma = 1.0 / (last.rho * inner(*last.y, *last.y));
    V out = V(gamma * q);
    for (size_t k = 0; k < act.size(); ++k) {
      const double b = act[k].rho * inner(*act[k].y, out);
      out = V(out + (coef[k] - b) * *act[k].s);
    }
    return out;
  }

 private:
  int memory_;
  std::deque<std::pair<V, V>> pairs_;
};

}  // namespace rntr
