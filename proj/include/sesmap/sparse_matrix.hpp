#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sesmap/filter.hpp"

namespace sesmap {

// Binary incidence matrix holding only the positions of its ones, with both
// a row-major (CSR) and a column-major (CSC) view.
class SparseBinaryMatrix {
 public:
  SparseBinaryMatrix() = default;

  // Local (row, col) coordinates; duplicates collapse to a single one.
  static SparseBinaryMatrix from_pairs(std::size_t n_rows, std::size_t n_cols,
                                       std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs);

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return col_index_.size(); }

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {col_index_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const std::uint32_t> col(std::size_t j) const {
    return {row_index_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::size_t row_sum(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
  std::size_t col_sum(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }

  // Throws Error(ZeroMarginal) naming the first empty row or column.
  void check_marginals() const;

  // Identity of each row/column in the caller's index space. Default to
  // 0..n-1; labels default to the decimal key.
  std::vector<std::uint32_t> row_keys, col_keys;
  std::vector<std::string> row_labels, col_labels;

 private:
  std::size_t n_rows_ = 0, n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0}, col_ptr_{0};
  std::vector<std::uint32_t> col_index_, row_index_;
};

// Restricts the dataset's edges to row_set x col_set. Keys are the
// dataset's user/brand indices; labels are their string ids.
SparseBinaryMatrix build_matrix(const FilteredDataset& dataset, std::span<const std::uint32_t> row_set,
                                std::span<const std::uint32_t> col_set);

}  // namespace sesmap
