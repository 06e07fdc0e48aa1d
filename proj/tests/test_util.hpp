#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rntr/gmm_model.hpp"

namespace testutil {

using rntr::Matrix;
using rntr::Vector;

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = n(rng);
  return a;
}

inline Matrix random_spd(int n, std::mt19937_64& rng, double shift = 0.5) {
  const Matrix a = random_matrix(n, n, rng);
  return a * a.transpose() / n + shift * Matrix::Identity(n, n);
}

inline Matrix random_sym(int n, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, n, rng);
  return 0.5 * (a + a.transpose());
}

inline rntr::GmmParams random_params(int d, int K, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  rntr::GmmParams p;
  p.weights = Vector(K);
  for (int j = 0; j < K; ++j) p.weights(j) = u(rng);
  p.weights /= p.weights.sum();
  for (int j = 0; j < K; ++j) {
    p.means.push_back(2.0 * random_matrix(d, 1, rng));
    p.covariances.emplace_back(random_spd(d, rng));
  }
  return p;
}

inline Matrix random_points(int m, int d, std::mt19937_64& rng, double scale = 2.0) {
  return scale * random_matrix(m, d, rng);
}

/// Classical Gaussian pdf from the textbook formula (LU determinant and inverse).
inline double gaussian_pdf(const Vector& x, const Vector& mu, const Matrix& cov) {
  const double d = static_cast<double>(x.size());
  const Vector r = x - mu;
  const double quad = r.dot(cov.inverse() * r);
  return std::exp(-0.5 * quad) / std::sqrt(std::pow(2.0 * std::numbers::pi, d) * cov.determinant());
}

/// Sum_i log sum_j alpha_j N(x_i; mu_j, Sigma_j), summed directly.
inline double classical_log_likelihood(const rntr::GmmParams& p, const Matrix& x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mix = 0.0;
    for (int j = 0; j < p.num_components(); ++j) {
      mix += p.weights(j) * gaussian_pdf(x.row(i).transpose(), p.means[static_cast<size_t>(j)],
                                         p.covariances[static_cast<size_t>(j)].matrix());
    }
    total += std::log(mix);
  }
  return total;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testutil
