#include "sesmap/sparse_matrix.hpp"

#include <algorithm>

#include "sesmap/types.hpp"

namespace sesmap {

std::string_view to_string(EntityKind kind) noexcept { return kind == EntityKind::User ? "user" : "brand"; }

SparseBinaryMatrix SparseBinaryMatrix::from_pairs(std::size_t n_rows, std::size_t n_cols,
                                                  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs) {
  SparseBinaryMatrix m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (const auto& [i, j] : pairs) {
    if (i >= n_rows || j >= n_cols) {
      throw Error(ErrorKind::DimensionMismatch, "entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                                    ") outside a " + std::to_string(n_rows) + "x" +
                                                    std::to_string(n_cols) + " matrix");
    }
  }

  m.row_ptr_.assign(n_rows + 1, 0);
  m.col_ptr_.assign(n_cols + 1, 0);
  for (const auto& [i, j] : pairs) {
    ++m.row_ptr_[i + 1];
    ++m.col_ptr_[j + 1];
  }
  for (std::size_t i = 0; i < n_rows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
  for (std::size_t j = 0; j < n_cols; ++j) m.col_ptr_[j + 1] += m.col_ptr_[j];

  // Pairs are sorted by row then column, so CSR fills in order.
  m.col_index_.resize(pairs.size());
  for (std::size_t e = 0; e < pairs.size(); ++e) m.col_index_[e] = pairs[e].second;

  m.row_index_.resize(pairs.size());
  std::vector<std::size_t> cursor(m.col_ptr_.begin(), m.col_ptr_.end() - 1);
  for (const auto& [i, j] : pairs) m.row_index_[cursor[j]++] = i;

  m.row_keys.resize(n_rows);
  m.col_keys.resize(n_cols);
  for (std::size_t i = 0; i < n_rows; ++i) m.row_keys[i] = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j < n_cols; ++j) m.col_keys[j] = static_cast<std::uint32_t>(j);
  return m;
}

void SparseBinaryMatrix::check_marginals() const {
  auto label = [](const std::vector<std::string>& labels, const std::vector<std::uint32_t>& keys, std::size_t k) {
    if (k < labels.size()) return labels[k];
    return std::to_string(k < keys.size() ? keys[k] : k);
  };
  for (std::size_t i = 0; i < n_rows_; ++i) {
    if (row_sum(i) == 0) {
      throw Error(ErrorKind::ZeroMarginal, "row '" + label(row_labels, row_keys, i) + "' has no entries");
    }
  }
  for (std::size_t j = 0; j < n_cols_; ++j) {
    if (col_sum(j) == 0) {
      throw Error(ErrorKind::ZeroMarginal, "column '" + label(col_labels, col_keys, j) + "' has no entries");
    }
  }
}

SparseBinaryMatrix build_matrix(const FilteredDataset& dataset, std::span<const std::uint32_t> row_set,
                                std::span<const std::uint32_t> col_set) {
  constexpr auto kAbsent = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> row_pos(dataset.edges.n_users(), kAbsent);
  std::vector<std::uint32_t> col_pos(dataset.edges.n_brands(), kAbsent);
  for (std::size_t i = 0; i < row_set.size(); ++i) row_pos.at(row_set[i]) = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j < col_set.size(); ++j) col_pos.at(col_set[j]) = static_cast<std::uint32_t>(j);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& e : dataset.edges.edges) {
    if (row_pos[e.user] != kAbsent && col_pos[e.brand] != kAbsent) {
      pairs.emplace_back(row_pos[e.user], col_pos[e.brand]);
    }
  }
  auto m = SparseBinaryMatrix::from_pairs(row_set.size(), col_set.size(), std::move(pairs));
  m.row_keys.assign(row_set.begin(), row_set.end());
  m.col_keys.assign(col_set.begin(), col_set.end());
  m.row_labels.reserve(row_set.size());
  for (auto u : row_set) m.row_labels.push_back(dataset.edges.user_ids->id(u));
  m.col_labels.reserve(col_set.size());
  for (auto b : col_set) m.col_labels.push_back(dataset.edges.brand_ids->id(b));
  m.check_marginals();
  return m;
}

}  // namespace sesmap
