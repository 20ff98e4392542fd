#pragma once

#include <filesystem>

#include "sesmap/ca.hpp"

namespace sesmap {

// Writes `manifest` (JSON: dims, singular values, masses, labels,
// orientation, fit metadata) and a sidecar `<stem>.bin` holding the row then
// column standard coordinates as little-endian float64, row-major.
void save_model(const std::filesystem::path& manifest, const CAModel& model);

// Keys are set to 0..n-1; callers re-key against their own index space.
CAModel load_model(const std::filesystem::path& manifest);

}  // namespace sesmap
