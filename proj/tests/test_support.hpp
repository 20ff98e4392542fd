#pragma once

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sesmap/filter.hpp"
#include "sesmap/ingest.hpp"

namespace sesmap::fixtures {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (name + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Brands "B0".."B{n-1}" with domains assigned round-robin.
inline BrandCatalog make_catalog(std::size_t n) {
  BrandCatalog catalog;
  for (std::size_t b = 0; b < n; ++b) {
    catalog.add({"B" + std::to_string(b), "brand" + std::to_string(b), kAllDomains[b % kDomainCount], 20000});
  }
  return catalog;
}

// Wraps an edge store as an unfiltered dataset (all users, all brands).
inline FilteredDataset as_dataset(const EdgeStore& store) {
  FilteredDataset d;
  d.edges = store;
  d.users.resize(store.n_users());
  std::iota(d.users.begin(), d.users.end(), 0u);
  d.brands.resize(store.n_brands());
  std::iota(d.brands.begin(), d.brands.end(), 0u);
  return d;
}

}  // namespace sesmap::fixtures
