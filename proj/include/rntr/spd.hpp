#pragma once

// Dense SPD linear algebra and the geometry of the product manifold
// (P^{p})^K x R^{K-1} under the affine-invariant metric.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "rntr/error.hpp"

namespace rntr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lower-triangular Cholesky factor of a symmetric matrix.
/// Throws Error(NotPositiveDefinite) when a pivot is not strictly positive.
Matrix cholesky(const Matrix& m);

/// Symmetric matrix. Construction symmetrizes its input as (M + M^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix zero(Eigen::Index n);
  static SymMatrix identity(Eigen::Index n);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double a);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }

 private:
  Matrix m_;
};

/// Symmetric positive-definite matrix with its Cholesky factor and inverse
/// computed at construction. Immutable; safe to share between threads.
class SpdMatrix {
 public:
  /// Symmetrizes `m`, then factorizes. Throws NotPositiveDefinite.
  explicit SpdMatrix(const Matrix& m);

  static SpdMatrix identity(Eigen::Index n) { return SpdMatrix(Matrix::Identity(n, n)); }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  const Matrix& chol() const { return chol_; }
  const Matrix& inverse() const { return inv_; }
  double log_det() const { return log_det_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// m^{-1} b via the cached factor.
  Matrix solve(const Matrix& b) const;

 private:
  Matrix m_;
  Matrix chol_;
  Matrix inv_;
  double log_det_ = 0.0;
};

double log_det(const SpdMatrix& m);
Matrix spd_solve(const SpdMatrix& m, const Matrix& b);

/// exp(m) through a symmetric eigendecomposition.
SpdMatrix sym_expm(const SymMatrix& m);

/// Principal square root and inverse square root of an SPD matrix.
Matrix spd_sqrt(const SpdMatrix& m);
Matrix spd_inv_sqrt(const SpdMatrix& m);

/// Affine-invariant distance ||log(A^{-1/2} B A^{-1/2})||_F.
double spd_geodesic_distance(const SpdMatrix& a, const SpdMatrix& b);

/// Point ((S_1..S_K), eta) on the product manifold. eta has K-1 entries; the
/// K-th entry is fixed at zero.
///
/// Every ThetaPoint receives a fresh generation number at construction, which
/// derivative workspaces use to detect that they were built for another point.
class ThetaPoint {
 public:
  ThetaPoint(std::vector<SpdMatrix> s_blocks, Vector eta);

  int num_components() const { return static_cast<int>(s_blocks_.size()); }
  Eigen::Index block_dim() const { return s_blocks_.front().dim(); }
  const std::vector<SpdMatrix>& s_blocks() const { return s_blocks_; }
  const SpdMatrix& s(int j) const { return s_blocks_[static_cast<size_t>(j)]; }
  const Vector& eta() const { return eta_; }

  /// eta padded with the implicit trailing zero (length K).
  Vector full_eta() const;
  /// Mixing weights alpha_j = exp(eta_j) / sum_k exp(eta_k).
  Vector weights() const;

  std::uint64_t generation() const { return generation_; }

 private:
  std::vector<SpdMatrix> s_blocks_;
  Vector eta_;
  std::uint64_t generation_;
};

/// Tangent vector ((xi_1..xi_K), xi_eta) at a ThetaPoint.
struct TangentVector {
  std::vector<SymMatrix> s_blocks;
  Vector eta;

  static TangentVector zero_like(const ThetaPoint& theta);

  TangentVector& operator+=(const TangentVector& o);
  TangentVector& operator-=(const TangentVector& o);
  TangentVector& operator*=(double a);
  /// this += a * x
  TangentVector& axpy(double a, const TangentVector& x);

  friend TangentVector operator+(TangentVector a, const TangentVector& b) { return a += b; }
  friend TangentVector operator-(TangentVector a, const TangentVector& b) { return a -= b; }
  friend TangentVector operator*(double s, TangentVector a) { return a *= s; }
  friend TangentVector operator-(TangentVector a) { return a *= -1.0; }

  /// Number of free real coordinates: K p(p+1)/2 + (K-1).
  Eigen::Index manifold_dim() const;
};

bool shapes_match(const ThetaPoint& theta, const TangentVector& xi);

/// sum_j tr(S_j^{-1} xi_j S_j^{-1} chi_j) + xi_eta^T chi_eta
double inner_product(const ThetaPoint& theta, const TangentVector& xi, const TangentVector& chi);
double metric_norm(const ThetaPoint& theta, const TangentVector& xi);

/// Exponential-map retraction: S_j -> S^{1/2} exp(S^{-1/2} xi_j S^{-1/2}) S^{1/2},
/// eta -> eta + xi_eta.
ThetaPoint retract(const ThetaPoint& theta, const TangentVector& xi);

/// Flattens a tangent vector to coordinates (upper triangles row-major, then
/// eta). Used by dense test oracles and by orthonormal-basis construction.
Vector to_coordinates(const TangentVector& xi);
TangentVector from_coordinates(const ThetaPoint& theta, const Vector& coords);

}  // namespace rntr
