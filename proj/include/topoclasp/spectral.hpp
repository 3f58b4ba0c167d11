#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "topoclasp/common.hpp"
#include "topoclasp/graph.hpp"

namespace topoclasp {

// Full eigendecomposition of a symmetric matrix: eigenvalues ascending,
// eigenvector columns orthonormal.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

// Per-node heat kernel signature values over a grid of diffusion times.
struct HksField {
  Eigen::MatrixXd values;  // num_nodes x num_scales
  std::vector<double> times;
};

// Combinatorial Laplacian L = D - A.
inline Eigen::MatrixXd laplacian(const Graph& g) {
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(g.num_nodes, g.num_nodes);
  for (auto [u, v] : g.edges) {
    lap(u, u) += 1.0;
    lap(v, v) += 1.0;
    lap(u, v) = -1.0;
    lap(v, u) = -1.0;
  }
  return lap;
}

inline SpectralDecomposition eig_sym(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw ContractError("eig_sym: matrix is not square");
  double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10)
    throw ContractError("eig_sym: matrix is not symmetric (max |A - A^T| = " +
                        std::to_string(asym) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw ContractError("eig_sym: eigendecomposition did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// Log-spaced diffusion times on [t_min, t_max]; a single scale degenerates
// to {t_min}.
inline std::vector<double> default_hks_times(int num_scales, double t_min = 0.1,
                                             double t_max = 10.0) {
  if (num_scales < 1) throw ConfigError("hks: num_scales must be >= 1");
  if (!(t_min > 0.0) || t_max < t_min)
    throw ConfigError("hks: need 0 < t_min <= t_max");
  std::vector<double> times(num_scales);
  if (num_scales == 1) {
    times[0] = t_min;
    return times;
  }
  double step = (std::log(t_max) - std::log(t_min)) / (num_scales - 1);
  for (int k = 0; k < num_scales; ++k)
    times[k] = std::exp(std::log(t_min) + step * k);
  return times;
}

// HKS: f(v, t) = sum_i exp(-lambda_i t) phi_i(v)^2 over the full spectrum of
// L = D - A.
inline HksField hks(const Graph& g, const std::vector<double>& times) {
  if (times.empty()) throw ContractError("hks: empty time grid");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0)) throw ContractError("hks: times must be positive");
    if (k > 0 && !(times[k] > times[k - 1]))
      throw ContractError("hks: times must be strictly ascending");
  }
  SpectralDecomposition eig = eig_sym(laplacian(g));
  Eigen::MatrixXd phi_sq = eig.eigenvectors.array().square();
  HksField field;
  field.times = times;
  field.values.resize(g.num_nodes, static_cast<Eigen::Index>(times.size()));
  for (std::size_t k = 0; k < times.size(); ++k) {
    Eigen::VectorXd weights = (-times[k] * eig.eigenvalues.array()).exp();
    field.values.col(static_cast<Eigen::Index>(k)) = phi_sq * weights;
  }
  return field;
}

// Matrix exponential H_t = exp(-t L) by scaling-and-squaring with a truncated
// Taylor series. Independent of the eigendecomposition path; used as the
// cross-check oracle for hks diagonals.
inline Eigen::MatrixXd heat_kernel_oracle(const Graph& g, double t) {
  if (t < 0.0) throw ContractError("heat_kernel_oracle: t must be >= 0");
  const int n = g.num_nodes;
  Eigen::MatrixXd a = -t * laplacian(g);
  double norm1 = 0.0;
  for (int j = 0; j < n; ++j) norm1 = std::max(norm1, a.col(j).cwiseAbs().sum());
  int squarings = 0;
  while (norm1 > 0.5) {
    norm1 *= 0.5;
    ++squarings;
  }
  a /= std::pow(2.0, squarings);

  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * a / static_cast<double>(k)).eval();
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

}  // namespace topoclasp
