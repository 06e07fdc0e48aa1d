#include "rntr/spd.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <string>

namespace rntr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::DegenerateBlock: return "DegenerateBlock";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::StaleWorkspace: return "StaleWorkspace";
    case ErrorCode::ZeroGradient: return "ZeroGradient";
    case ErrorCode::InitializationError: return "InitializationError";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateComponent: return "DegenerateComponent";
    case ErrorCode::SeparationUnsatisfiable: return "SeparationUnsatisfiable";
    case ErrorCode::ComponentCountMismatch: return "ComponentCountMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

Matrix symmetrized(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  }
  return 0.5 * (m + m.transpose());
}

// Applies f to the eigenvalues of a symmetric matrix.
template <typename F>
Matrix sym_apply(const Matrix& sym, F f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Vector vals = es.eigenvalues().unaryExpr(f);
  const Matrix& v = es.eigenvectors();
  Matrix out = v * vals.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

std::atomic<std::uint64_t> g_generation{1};

}  // namespace

Matrix cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "cholesky of non-square matrix");
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::NotPositiveDefinite, "matrix has non-finite entries");
  }
  const Eigen::Index n = m.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "non-positive pivot at index " + std::to_string(j));
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;
}

SymMatrix::SymMatrix(const Matrix& m) : m_(symmetrized(m)) {}

SymMatrix SymMatrix::zero(Eigen::Index n) { return SymMatrix(Matrix::Zero(n, n)); }
SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  m_ += o.m_;
  return *this;
}
SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  m_ -= o.m_;
  return *this;
}
SymMatrix& SymMatrix::operator*=(double a) {
  m_ *= a;
  return *this;
}

SpdMatrix::SpdMatrix(const Matrix& m) : m_(symmetrized(m)) {
  chol_ = cholesky(m_);
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
  inv_ = solve(Matrix::Identity(m_.rows(), m_.cols()));
  inv_ = 0.5 * (inv_ + inv_.transpose());
}

Matrix SpdMatrix::solve(const Matrix& b) const {
  if (b.rows() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "spd_solve: row count mismatch");
  }
  Matrix y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double log_det(const SpdMatrix& m) { return m.log_det(); }

Matrix spd_solve(const SpdMatrix& m, const Matrix& b) { return m.solve(b); }

SpdMatrix sym_expm(const SymMatrix& m) {
  return SpdMatrix(sym_apply(m.matrix(), [](double x) { return std::exp(x); }));
}

Matrix spd_sqrt(const SpdMatrix& m) {
  return sym_apply(m.matrix(), [](double x) { return std::sqrt(x); });
}

Matrix spd_inv_sqrt(const SpdMatrix& m) {
  return sym_apply(m.matrix(), [](double x) { return 1.0 / std::sqrt(x); });
}

double spd_geodesic_distance(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "geodesic distance between different dims");
  }
  // Eigenvalues of A^{-1} B from the generalized problem B v = lambda A v.
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(b.matrix(), a.matrix(),
                                                      Eigen::EigenvaluesOnly);
  return std::sqrt(es.eigenvalues().array().log().square().sum());
}

ThetaPoint::ThetaPoint(std::vector<SpdMatrix> s_blocks, Vector eta)
    : s_blocks_(std::move(s_blocks)), eta_(std::move(eta)), generation_(g_generation++) {
  if (s_blocks_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "ThetaPoint needs at least one component");
  }
  const Eigen::Index p = s_blocks_.front().dim();
  for (const auto& s : s_blocks_) {
    if (s.dim() != p) throw Error(ErrorCode::DimensionMismatch, "S blocks differ in dim");
  }
  if (eta_.size() != num_components() - 1) {
    throw Error(ErrorCode::DimensionMismatch, "eta must have K-1 entries");
  }
  if (!eta_.allFinite()) throw Error(ErrorCode::InvalidArgument, "eta not finite");
}

Vector ThetaPoint::full_eta() const {
  Vector e = Vector::Zero(num_components());
  e.head(eta_.size()) = eta_;
  return e;
}

Vector ThetaPoint::weights() const {
  Vector e = full_eta();
  const double mx = e.maxCoeff();
  Vector w = (e.array() - mx).exp();
  return w / w.sum();
}

TangentVector TangentVector::zero_like(const ThetaPoint& theta) {
  TangentVector t;
  t.s_blocks.assign(static_cast<size_t>(theta.num_components()),
                    SymMatrix::zero(theta.block_dim()));
  t.eta = Vector::Zero(theta.num_components() - 1);
  return t;
}

TangentVector& TangentVector::operator+=(const TangentVector& o) {
  for (size_t j = 0; j < s_blocks.size(); ++j) s_blocks[j] += o.s_blocks[j];
  eta += o.eta;
  return *this;
}

TangentVector& TangentVector::operator-=(const TangentVector& o) {
  for (size_t j = 0; j < s_blocks.size(); ++j) s_blocks[j] -= o.s_blocks[j];
  eta -= o.eta;
  return *this;
}

TangentVector& TangentVector::operator*=(double a) {
  for (auto& b : s_blocks) b *= a;
  eta *= a;
  return *this;
}

TangentVector& TangentVector::axpy(double a, const TangentVector& x) {
  for (size_t j = 0; j < s_blocks.size(); ++j) s_blocks[j] += a * x.s_blocks[j];
  eta += a * x.eta;
  return *this;
}

Eigen::Index TangentVector::manifold_dim() const {
  Eigen::Index n = eta.size();
  for (const auto& b : s_blocks) n += b.dim() * (b.dim() + 1) / 2;
  return n;
}

bool shapes_match(const ThetaPoint& theta, const TangentVector& xi) {
  if (static_cast<int>(xi.s_blocks.size()) != theta.num_components()) return false;
  if (xi.eta.size() != theta.eta().size()) return false;
  for (const auto& b : xi.s_blocks) {
    if (b.dim() != theta.block_dim()) return false;
  }
  return true;
}

double inner_product(const ThetaPoint& theta, const TangentVector& xi, const TangentVector& chi) {
  if (!shapes_match(theta, xi) || !shapes_match(theta, chi)) {
    throw Error(ErrorCode::DimensionMismatch, "tangent shapes do not match point");
  }
  double acc = xi.eta.dot(chi.eta);
  for (int j = 0; j < theta.num_components(); ++j) {
    const Matrix& inv = theta.s(j).inverse();
    Matrix a = inv * xi.s_blocks[static_cast<size_t>(j)].matrix();
    Matrix b = inv * chi.s_blocks[static_cast<size_t>(j)].matrix();
    // tr(A B) = sum_ij A_ij B_ji
    acc += a.cwiseProduct(b.transpose()).sum();
  }
  return acc;
}

double metric_norm(const ThetaPoint& theta, const TangentVector& xi) {
  return std::sqrt(std::max(0.0, inner_product(theta, xi, xi)));
}

ThetaPoint retract(const ThetaPoint& theta, const TangentVector& xi) {
  if (!shapes_match(theta, xi)) {
    throw Error(ErrorCode::DimensionMismatch, "retract: tangent shapes do not match point");
  }
  std::vector<SpdMatrix> blocks;
  blocks.reserve(static_cast<size_t>(theta.num_components()));
  for (int j = 0; j < theta.num_components(); ++j) {
    const SpdMatrix& s = theta.s(j);
    Matrix half = spd_sqrt(s);
    Matrix inv_half = spd_inv_sqrt(s);
    SymMatrix inner(inv_half * xi.s_blocks[static_cast<size_t>(j)].matrix() * inv_half);
    Matrix e = sym_expm(inner).matrix();
    blocks.emplace_back(half * e * half);
  }
  return ThetaPoint(std::move(blocks), theta.eta() + xi.eta);
}

Vector to_coordinates(const TangentVector& xi) {
  Vector out(xi.manifold_dim());
  Eigen::Index k = 0;
  for (const auto& b : xi.s_blocks) {
    for (Eigen::Index i = 0; i < b.dim(); ++i) {
      for (Eigen::Index j = i; j < b.dim(); ++j) out(k++) = b(i, j);
    }
  }
  out.tail(xi.eta.size()) = xi.eta;
  return out;
}

TangentVector from_coordinates(const ThetaPoint& theta, const Vector& coords) {
  TangentVector t = TangentVector::zero_like(theta);
  if (coords.size() != t.manifold_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "coordinate vector has wrong length");
  }
  Eigen::Index k = 0;
  const Eigen::Index p = theta.block_dim();
  for (auto& b : t.s_blocks) {
    Matrix m(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i; j < p; ++j) {
        m(i, j) = coords(k);
        m(j, i) = coords(k);
        ++k;
      }
    }
    b = SymMatrix(m);
  }
  t.eta = coords.tail(t.eta.size());
  return t;
}

}  // namespace rntr
