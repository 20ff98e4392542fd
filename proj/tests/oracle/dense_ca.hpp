#pragma once

// Test-only reference: correspondence analysis on an explicitly assembled
// dense residual matrix with a full SVD. Shares nothing with the implicit
// operator path beyond reading matrix entries.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sesmap/sparse_matrix.hpp"

namespace sesmap::oracle {

struct DenseCA {
  Eigen::MatrixXd residuals;  // S
  Eigen::VectorXd row_mass, col_mass;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd row_std, col_std;  // all dimensions
};

inline Eigen::MatrixXd to_dense(const SparseBinaryMatrix& m) {
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (auto j : m.row(i)) n(static_cast<Eigen::Index>(i), j) = 1.0;
  return n;
}

inline Eigen::MatrixXd residual_matrix(const Eigen::MatrixXd& n, Eigen::VectorXd* r_out = nullptr,
                                       Eigen::VectorXd* c_out = nullptr) {
  const Eigen::MatrixXd p = n / n.sum();
  const Eigen::VectorXd r = p.rowwise().sum();
  const Eigen::VectorXd c = p.colwise().sum().transpose();
  Eigen::MatrixXd s(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) s(i, j) = (p(i, j) - r(i) * c(j)) / std::sqrt(r(i) * c(j));
  if (r_out) *r_out = r;
  if (c_out) *c_out = c;
  return s;
}

inline DenseCA dense_ca(const Eigen::MatrixXd& n) {
  DenseCA out;
  out.residuals = residual_matrix(n, &out.row_mass, &out.col_mass);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.residuals, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.sigma = svd.singularValues();
  out.row_std = out.row_mass.cwiseSqrt().cwiseInverse().asDiagonal() * svd.matrixU();
  out.col_std = out.col_mass.cwiseSqrt().cwiseInverse().asDiagonal() * svd.matrixV();
  return out;
}

// Supplementary column coordinates: profile-weighted average of row
// standard coordinates, computed densely.
inline Eigen::RowVectorXd dense_supplementary(const Eigen::VectorXd& column, const Eigen::MatrixXd& row_std) {
  return (column / column.sum()).transpose() * row_std;
}

// Bernoulli(density) pattern, then patched so no row or column is empty.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> random_pattern(std::size_t rows, std::size_t cols,
                                                                          double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(density);
  std::vector<std::vector<bool>> dense(rows, std::vector<bool>(cols, false));
  for (auto& row : dense)
    for (std::size_t j = 0; j < cols; ++j) row[j] = coin(rng);
  std::uniform_int_distribution<std::size_t> pick_col(0, cols - 1), pick_row(0, rows - 1);
  for (auto& row : dense) {
    bool any = false;
    for (bool b : row) any = any || b;
    if (!any) row[pick_col(rng)] = true;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < rows; ++i) any = any || dense[i][j];
    if (!any) dense[pick_row(rng)][j] = true;
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (dense[i][j]) pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
  return pairs;
}

// Max abs deviation between fitted and oracle coordinates over the first k
// dimensions, after flipping each oracle dimension to agree in sign.
inline double aligned_deviation(const Eigen::MatrixXd& fitted, const Eigen::MatrixXd& oracle, Eigen::Index k,
                                std::vector<double>* signs = nullptr) {
  double worst = 0;
  for (Eigen::Index d = 0; d < k; ++d) {
    const double s = fitted.col(d).dot(oracle.col(d)) >= 0 ? 1.0 : -1.0;
    if (signs) signs->push_back(s);
    worst = std::max(worst, (fitted.col(d) - s * oracle.col(d)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace sesmap::oracle
