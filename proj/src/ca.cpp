#include "sesmap/ca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace sesmap {

namespace {

// Singular values at or below this are treated as exact zeros. CA singular
// values lie in [0, 1], so an absolute threshold is meaningful.
constexpr double kZeroSingularValue = 1e-10;

// Row-chunking for the transposed product. The partition depends only on the
// row count, so the reduction order (and the result) is independent of the
// number of threads.
constexpr std::size_t kChunkRows = 16384;
constexpr std::size_t kMaxChunks = 64;

void orthonormalize(RowMatrix& a) {
  Eigen::MatrixXd dense = a;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(dense);
  a = qr.householderQ() * Eigen::MatrixXd::Identity(dense.rows(), dense.cols());
}

std::optional<std::size_t> lookup(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& table,
                                  std::uint32_t key) {
  auto it = std::lower_bound(table.begin(), table.end(), std::pair<std::uint32_t, std::uint32_t>{key, 0});
  if (it == table.end() || it->first != key) return std::nullopt;
  return it->second;
}

}  // namespace

ResidualOperator::ResidualOperator(const SparseBinaryMatrix& matrix)
    : matrix_(&matrix), grand_total_(static_cast<double>(matrix.nnz())) {
  matrix.check_marginals();
  const auto I = matrix.rows();
  const auto J = matrix.cols();
  row_mass_.resize(I);
  col_mass_.resize(J);
  for (std::size_t i = 0; i < I; ++i) row_mass_[i] = static_cast<double>(matrix.row_sum(i)) / grand_total_;
  for (std::size_t j = 0; j < J; ++j) col_mass_[j] = static_cast<double>(matrix.col_sum(j)) / grand_total_;
  sqrt_row_ = row_mass_.cwiseSqrt();
  sqrt_col_ = col_mass_.cwiseSqrt();
  inv_sqrt_row_ = sqrt_row_.cwiseInverse();
  inv_sqrt_col_ = sqrt_col_.cwiseInverse();
}

void ResidualOperator::apply(const RowMatrix& x, RowMatrix& out) const {
  const auto I = rows();
  const auto J = cols();
  if (static_cast<std::size_t>(x.rows()) != J) {
    throw Error(ErrorKind::DimensionMismatch,
                "apply: expected " + std::to_string(J) + " rows, got " + std::to_string(x.rows()));
  }
  const Eigen::Index l = x.cols();
  const RowMatrix scaled = inv_sqrt_col_.asDiagonal() * x;
  const Eigen::RowVectorXd centre = sqrt_col_.transpose() * x;
  const double inv_n = 1.0 / grand_total_;
  out.resize(static_cast<Eigen::Index>(I), l);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(I); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* dst = out.row(ii).data();
    std::fill(dst, dst + l, 0.0);
    for (auto j : matrix_->row(i)) {
      const double* src = scaled.row(j).data();
      for (Eigen::Index c = 0; c < l; ++c) dst[c] += src[c];
    }
    const double a = inv_sqrt_row_[ii] * inv_n;
    const double b = sqrt_row_[ii];
    for (Eigen::Index c = 0; c < l; ++c) dst[c] = a * dst[c] - b * centre[c];
  }
}

void ResidualOperator::apply_transpose(const RowMatrix& x, RowMatrix& out) const {
  const auto I = rows();
  const auto J = cols();
  if (static_cast<std::size_t>(x.rows()) != I) {
    throw Error(ErrorKind::DimensionMismatch,
                "apply_transpose: expected " + std::to_string(I) + " rows, got " + std::to_string(x.rows()));
  }
  const Eigen::Index l = x.cols();
  const Eigen::RowVectorXd centre = sqrt_row_.transpose() * x;
  const double inv_n = 1.0 / grand_total_;

  const std::size_t chunks = std::clamp<std::size_t>((I + kChunkRows - 1) / kChunkRows, 1, kMaxChunks);
  const std::size_t chunk_len = (I + chunks - 1) / chunks;
  std::vector<RowMatrix> partial(chunks, RowMatrix::Zero(static_cast<Eigen::Index>(J), l));

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(chunks); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    RowMatrix& acc = partial[c];
    const std::size_t end = std::min(I, (c + 1) * chunk_len);
    for (std::size_t i = c * chunk_len; i < end; ++i) {
      const double w = inv_sqrt_row_[static_cast<Eigen::Index>(i)];
      const double* src = x.row(static_cast<Eigen::Index>(i)).data();
      for (auto j : matrix_->row(i)) {
        double* dst = acc.row(j).data();
        for (Eigen::Index k = 0; k < l; ++k) dst[k] += w * src[k];
      }
    }
  }
  for (std::size_t c = 1; c < chunks; ++c) partial[0] += partial[c];

  out.resize(static_cast<Eigen::Index>(J), l);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(J); ++j) {
    out.row(j) = inv_sqrt_col_[j] * inv_n * partial[0].row(j) - sqrt_col_[j] * centre;
  }
}

Eigen::VectorXd ResidualOperator::apply(const Eigen::VectorXd& v) const {
  RowMatrix x = v;
  RowMatrix out;
  apply(x, out);
  return out.col(0);
}

Eigen::VectorXd ResidualOperator::apply_transpose(const Eigen::VectorXd& u) const {
  RowMatrix x = u;
  RowMatrix out;
  apply_transpose(x, out);
  return out.col(0);
}

std::optional<std::size_t> CAModel::row_position(std::uint32_t key) const { return lookup(row_lookup_, key); }
std::optional<std::size_t> CAModel::col_position(std::uint32_t key) const { return lookup(col_lookup_, key); }

std::optional<std::size_t> CAModel::row_position(std::string_view label) const {
  auto it = std::find(row_labels.begin(), row_labels.end(), label);
  if (it == row_labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - row_labels.begin());
}

std::optional<std::size_t> CAModel::col_position(std::string_view label) const {
  auto it = std::find(col_labels.begin(), col_labels.end(), label);
  if (it == col_labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - col_labels.begin());
}

void CAModel::index_keys() {
  auto build = [](const std::vector<std::uint32_t>& keys) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> table(keys.size());
    for (std::size_t p = 0; p < keys.size(); ++p) table[p] = {keys[p], static_cast<std::uint32_t>(p)};
    std::sort(table.begin(), table.end());
    return table;
  };
  row_lookup_ = build(row_keys);
  col_lookup_ = build(col_keys);
}

CAModel fit_ca(const SparseBinaryMatrix& matrix, std::size_t k_dims, const SvdParams& params) {
  const auto I = matrix.rows();
  const auto J = matrix.cols();
  const auto max_k = std::min(I, J) == 0 ? 0 : std::min(I, J) - 1;
  if (k_dims < 1 || k_dims > max_k) {
    throw Error(ErrorKind::Config, "k_dims = " + std::to_string(k_dims) + " outside [1, " + std::to_string(max_k) +
                                       "] for a " + std::to_string(I) + "x" + std::to_string(J) + " matrix");
  }
  const ResidualOperator op(matrix);
  const auto l = static_cast<Eigen::Index>(std::min(k_dims + params.oversampling, std::min(I, J)));
  const auto k = static_cast<Eigen::Index>(k_dims);

  RowMatrix right(static_cast<Eigen::Index>(J), l);
  {
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> normal;
    for (Eigen::Index j = 0; j < right.rows(); ++j)
      for (Eigen::Index c = 0; c < l; ++c) right(j, c) = normal(rng);
  }
  orthonormalize(right);

  RowMatrix image, basis, back, left;
  Eigen::VectorXd sigma;
  std::size_t extractions = 0;
  double max_residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iteration = 0;
  const std::size_t min_extractions = std::max<std::size_t>(params.power_iterations, 1);

  for (iteration = 1; iteration <= params.max_iterations + 1; ++iteration) {
    op.apply(right, image);
    if (extractions >= min_extractions) {
      if (sigma[0] <= kZeroSingularValue) {
        throw Error(ErrorKind::DegenerateMatrix,
                    "standardized residuals vanish (leading singular value " + std::to_string(sigma[0]) +
                        "): rows carry no association structure");
      }
      max_residual = 0;
      for (Eigen::Index c = 0; c < k; ++c) {
        max_residual = std::max(max_residual, (image.col(c) - sigma[c] * left.col(c)).norm());
      }
      if (max_residual <= params.tolerance * sigma[0]) {
        converged = true;
        break;
      }
    }
    if (iteration > params.max_iterations) break;

    basis = image;
    orthonormalize(basis);
    op.apply_transpose(basis, back);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(back), Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues();
    right = svd.matrixU();
    left = basis * svd.matrixV();
    ++extractions;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "subspace iteration did not converge in " << params.max_iterations
        << " iterations: max residual " << max_residual << ", tolerance " << params.tolerance * sigma[0]
        << ", block size " << l;
    throw Error(ErrorKind::ConvergenceFailure, msg.str());
  }

  Eigen::Index kept = 0;
  while (kept < k && sigma[kept] > kZeroSingularValue) ++kept;

  // Fitted sign convention: the largest-magnitude column coordinate of each
  // dimension is positive.
  for (Eigen::Index c = 0; c < kept; ++c) {
    Eigen::Index arg = 0;
    right.col(c).cwiseAbs().maxCoeff(&arg);
    if (right(arg, c) < 0) {
      right.col(c) *= -1;
      left.col(c) *= -1;
    }
  }

  CAModel model;
  model.singular_values = sigma.head(kept);
  model.row_coords = op.inv_sqrt_row().asDiagonal() * left.leftCols(kept);
  model.col_coords = op.inv_sqrt_col().asDiagonal() * right.leftCols(kept);
  model.row_masses = op.row_masses();
  model.col_masses = op.col_masses();
  model.row_keys = matrix.row_keys;
  model.col_keys = matrix.col_keys;
  model.row_labels = matrix.row_labels;
  model.col_labels = matrix.col_labels;
  if (model.row_labels.size() != I) {
    model.row_labels.clear();
    for (auto key : model.row_keys) model.row_labels.push_back(std::to_string(key));
  }
  if (model.col_labels.size() != J) {
    model.col_labels.clear();
    for (auto key : model.col_keys) model.col_labels.push_back(std::to_string(key));
  }
  model.index_keys();
  model.orientation.signs.assign(static_cast<std::size_t>(kept), 1);
  model.orientation.anchor = "fitted";
  model.meta = FitMeta{params.seed,
                       params.oversampling,
                       params.power_iterations,
                       iteration,
                       static_cast<std::size_t>(l),
                       params.tolerance,
                       max_residual,
                       I,
                       J,
                       matrix.nnz(),
                       k_dims};
  return model;
}

namespace {

template <typename Lookup>
Projection project(const RowMatrix& coords, std::span<const std::vector<std::uint32_t>> items, Lookup&& position,
                   const ProjectionOptions& options, const char* what) {
  const auto k = coords.cols();
  Projection out;
  out.coords.resize(static_cast<Eigen::Index>(items.size()), k);
  std::vector<std::uint8_t> empty(items.size(), 0);
  std::size_t dropped = 0;

#pragma omp parallel for schedule(static) reduction(+ : dropped)
  for (std::ptrdiff_t tt = 0; tt < static_cast<std::ptrdiff_t>(items.size()); ++tt) {
    const auto& entries = items[static_cast<std::size_t>(tt)];
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(k);
    std::size_t support = 0;
    for (auto key : entries) {
      if (auto pos = position(key)) {
        sum += coords.row(static_cast<Eigen::Index>(*pos));
        ++support;
      } else {
        ++dropped;
      }
    }
    if (support == 0) {
      empty[static_cast<std::size_t>(tt)] = 1;
      out.coords.row(tt).setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.coords.row(tt) = sum / static_cast<double>(support);
    }
  }
  out.dropped_entries = dropped;
  for (std::size_t t = 0; t < items.size(); ++t) {
    if (!empty[t]) continue;
    if (!options.skip_empty) {
      throw Error(ErrorKind::EmptySupport,
                  std::string(what) + " " + std::to_string(t) + " has no entries in the model");
    }
    out.unsupported.push_back(t);
  }
  return out;
}

}  // namespace

Projection project_columns(const CAModel& model, std::span<const std::vector<std::uint32_t>> columns,
                           const ProjectionOptions& options) {
  return project(model.row_coords, columns, [&](std::uint32_t key) { return model.row_position(key); }, options,
                 "column");
}

Projection project_rows(const CAModel& model, std::span<const std::vector<std::uint32_t>> rows,
                        const ProjectionOptions& options) {
  return project(model.col_coords, rows, [&](std::uint32_t key) { return model.col_position(key); }, options,
                 "row");
}

CAModel orient(CAModel model, const Anchor& anchor) {
  if (anchor.ids.empty()) throw Error(ErrorKind::UnknownAnchor, "anchor has no ids");
  if (model.k() == 0) throw Error(ErrorKind::UnknownAnchor, "model has no dimensions");
  const bool brand = anchor.kind == EntityKind::Brand;
  const RowMatrix& coords = brand ? model.col_coords : model.row_coords;
  double total = 0;
  for (const auto& id : anchor.ids) {
    auto pos = brand ? model.col_position(std::string_view(id)) : model.row_position(std::string_view(id));
    if (!pos) {
      throw Error(ErrorKind::UnknownAnchor, std::string(to_string(anchor.kind)) + " '" + id + "' is not in the model");
    }
    total += coords(static_cast<Eigen::Index>(*pos), 0);
  }
  const double mean = total / static_cast<double>(anchor.ids.size());
  if (mean * anchor.desired_sign < 0) {
    model.row_coords.col(0) *= -1;
    model.col_coords.col(0) *= -1;
    model.orientation.signs[0] *= -1;
  }
  std::string desc(to_string(anchor.kind));
  desc += ":";
  for (std::size_t i = 0; i < anchor.ids.size(); ++i) {
    if (i) desc += ",";
    desc += anchor.ids[i];
  }
  desc += anchor.desired_sign >= 0 ? " positive" : " negative";
  model.orientation.anchor = std::move(desc);
  return model;
}

Anchor default_anchor(const CAModel& model) {
  Eigen::Index arg = 0;
  model.col_masses.maxCoeff(&arg);
  return Anchor{EntityKind::Brand, {model.col_labels.at(static_cast<std::size_t>(arg))}, 1};
}

}  // namespace sesmap
