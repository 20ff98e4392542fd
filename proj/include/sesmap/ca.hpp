#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sesmap/sparse_matrix.hpp"
#include "sesmap/types.hpp"

namespace sesmap {

// The standardized-residual matrix S = D_r (P - r c^T) D_c of a binary
// matrix, applied implicitly. P = N / n, r and c are the row and column
// masses of P, D_r = diag(1/sqrt(r)), D_c = diag(1/sqrt(c)). Every
// application costs O(nnz + I + J); S is never formed.
class ResidualOperator {
 public:
  // The matrix must outlive the operator. Throws Error(ZeroMarginal).
  explicit ResidualOperator(const SparseBinaryMatrix& matrix);

  std::size_t rows() const noexcept { return matrix_->rows(); }
  std::size_t cols() const noexcept { return matrix_->cols(); }
  double grand_total() const noexcept { return grand_total_; }
  const Eigen::VectorXd& row_masses() const noexcept { return row_mass_; }
  const Eigen::VectorXd& col_masses() const noexcept { return col_mass_; }
  const Eigen::VectorXd& inv_sqrt_row() const noexcept { return inv_sqrt_row_; }
  const Eigen::VectorXd& inv_sqrt_col() const noexcept { return inv_sqrt_col_; }
  const Eigen::VectorXd& sqrt_row() const noexcept { return sqrt_row_; }
  const Eigen::VectorXd& sqrt_col() const noexcept { return sqrt_col_; }

  // S v. Throws Error(DimensionMismatch).
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  // S^T u. Throws Error(DimensionMismatch).
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& u) const;

  // Block forms: out = S x (x is J x l) and out = S^T x (x is I x l).
  void apply(const RowMatrix& x, RowMatrix& out) const;
  void apply_transpose(const RowMatrix& x, RowMatrix& out) const;

 private:
  const SparseBinaryMatrix* matrix_;
  double grand_total_;
  Eigen::VectorXd row_mass_, col_mass_;
  Eigen::VectorXd inv_sqrt_row_, inv_sqrt_col_, sqrt_row_, sqrt_col_;
};

struct SvdParams {
  std::size_t oversampling = 10;
  // Minimum number of subspace iterations before convergence is tested.
  std::size_t power_iterations = 4;
  std::uint64_t seed = 0;
  // Stop when ||S v_i - a_i u_i|| <= tolerance * a_1 for every kept pair.
  double tolerance = 1e-12;
  std::size_t max_iterations = 3000;
};

struct Orientation {
  std::vector<int> signs;  // per dimension, relative to the fitted convention
  std::string anchor;      // human-readable description of the last anchor
};

struct FitMeta {
  std::uint64_t seed = 0;
  std::size_t oversampling = 0;
  std::size_t power_iterations = 0;
  std::size_t iterations = 0;
  std::size_t block_size = 0;
  double tolerance = 0;
  double max_residual = 0;
  std::size_t n_rows = 0, n_cols = 0, nnz = 0;
  std::size_t requested_k = 0;
};

// Fitted correspondence analysis: standard coordinates G_r = D_r U and
// G_c = D_c V for the leading nontrivial singular triplets of S.
class CAModel {
 public:
  std::size_t k() const noexcept { return static_cast<std::size_t>(singular_values.size()); }
  std::size_t n_rows() const noexcept { return static_cast<std::size_t>(row_coords.rows()); }
  std::size_t n_cols() const noexcept { return static_cast<std::size_t>(col_coords.rows()); }

  // Position of a caller key among the model rows/columns.
  std::optional<std::size_t> row_position(std::uint32_t key) const;
  std::optional<std::size_t> col_position(std::uint32_t key) const;
  std::optional<std::size_t> row_position(std::string_view label) const;
  std::optional<std::size_t> col_position(std::string_view label) const;

  // Rebuilds the key lookup tables; call after editing row_keys/col_keys.
  void index_keys();

  Eigen::VectorXd singular_values;  // descending
  RowMatrix row_coords;             // I x k
  RowMatrix col_coords;             // J x k
  Eigen::VectorXd row_masses, col_masses;
  std::vector<std::uint32_t> row_keys, col_keys;
  std::vector<std::string> row_labels, col_labels;
  Orientation orientation;
  FitMeta meta;

 private:
  std::vector<std::pair<std::uint32_t, std::uint32_t>> row_lookup_, col_lookup_;
};

// Leading k nontrivial singular triplets of S by randomized subspace
// iteration through ResidualOperator. Dimensions whose singular value is
// numerically zero are dropped, so the result may have fewer than k.
// Throws Error(Config) for k outside [1, min(I,J)-1], Error(DegenerateMatrix)
// when S vanishes, Error(ConvergenceFailure) after max_iterations.
CAModel fit_ca(const SparseBinaryMatrix& matrix, std::size_t k_dims, const SvdParams& params = {});

struct ProjectionOptions {
  // Give empty-support items NaN coordinates instead of throwing.
  bool skip_empty = false;
};

struct Projection {
  RowMatrix coords;                     // one k-vector per projected item
  std::size_t dropped_entries = 0;      // entries not in the model
  std::vector<std::size_t> unsupported; // items with no overlap (skip_empty only)
};

// Supplementary columns: g = n'^T G_r with n' the column profile over the
// model rows. Each column lists row keys.
Projection project_columns(const CAModel& model, std::span<const std::vector<std::uint32_t>> columns,
                           const ProjectionOptions& options = {});

// Supplementary rows: g = m'^T G_c. Each row lists column keys.
Projection project_rows(const CAModel& model, std::span<const std::vector<std::uint32_t>> rows,
                        const ProjectionOptions& options = {});

struct Anchor {
  EntityKind kind = EntityKind::Brand;
  std::vector<std::string> ids;
  int desired_sign = 1;
};

// Flips dimension 1 so the mean anchor coordinate has the desired sign.
// Throws Error(UnknownAnchor).
CAModel orient(CAModel model, const Anchor& anchor);

// The largest-mass column, anchored positive.
Anchor default_anchor(const CAModel& model);

}  // namespace sesmap
