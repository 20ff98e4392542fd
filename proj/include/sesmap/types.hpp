#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace sesmap {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class EntityKind { User, Brand };

std::string_view to_string(EntityKind kind) noexcept;

}  // namespace sesmap
