#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sesmap/error.hpp"

namespace sesmap {

// The six brand domains. Informative users must cover all of them.
enum class Domain : std::uint8_t {
  supermarkets_department,
  clothing_specialty,
  chain_restaurants,
  news,
  sports,
  tv_shows,
};

inline constexpr std::size_t kDomainCount = 6;
inline constexpr std::array<Domain, kDomainCount> kAllDomains{
    Domain::supermarkets_department, Domain::clothing_specialty, Domain::chain_restaurants,
    Domain::news,                    Domain::sports,             Domain::tv_shows};

std::string_view to_string(Domain domain) noexcept;
std::optional<Domain> parse_domain(std::string_view label) noexcept;

enum class ErrorPolicy {
  Throw,    // first bad row aborts the load
  Collect,  // bad rows are skipped and reported in `row_errors`
};

struct LoadOptions {
  char delimiter = ',';
  ErrorPolicy on_error = ErrorPolicy::Throw;
};

struct RowError {
  std::size_t line;
  ErrorKind kind;
  std::string message;
};

// Dense string interner: ids get indices 0..size()-1 in first-seen order.
class IdMap {
 public:
  std::uint32_t intern(std::string_view id);
  std::optional<std::uint32_t> find(std::string_view id) const;
  const std::string& id(std::uint32_t index) const { return ids_[index]; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

struct BrandEntry {
  std::string brand_id;
  std::string screen_name;
  Domain domain;
  std::uint64_t follower_count_at_selection = 0;
};

class BrandCatalog {
 public:
  // Throws Error(DuplicateBrandId) if the id is already present.
  std::uint32_t add(BrandEntry entry);

  std::size_t size() const noexcept { return entries_.size(); }
  const BrandEntry& operator[](std::uint32_t index) const { return entries_[index]; }
  const std::vector<BrandEntry>& entries() const noexcept { return entries_; }
  std::optional<std::uint32_t> find(std::string_view brand_id) const { return ids_.find(brand_id); }
  const IdMap& ids() const noexcept { return ids_; }

  std::vector<std::string> warnings;
  std::vector<RowError> row_errors;

 private:
  std::vector<BrandEntry> entries_;
  IdMap ids_;
};

struct Edge {
  std::uint32_t user;
  std::uint32_t brand;
  auto operator<=>(const Edge&) const = default;
};

// Deduplicated user->brand incidence. Brand indices are catalog indices;
// user indices are dense in first-seen order.
struct EdgeStore {
  std::shared_ptr<const IdMap> user_ids;
  std::shared_ptr<const IdMap> brand_ids;
  std::vector<Edge> edges;  // sorted by (user, brand), unique

  std::size_t duplicate_edges = 0;
  std::size_t skipped_unknown_brand = 0;
  std::vector<RowError> row_errors;

  std::size_t n_users() const noexcept { return user_ids ? user_ids->size() : 0; }
  std::size_t n_brands() const noexcept { return brand_ids ? brand_ids->size() : 0; }
  // Number of distinct brand indices that occur in `edges`.
  std::size_t n_brands_seen() const;
};

struct UserProfile {
  std::string user_id;
  std::uint64_t statuses_count = 0;
  std::uint64_t followers_count = 0;
  std::chrono::year_month_day last_active{};
  std::optional<std::string> location_resolved;
  std::string description;
};

class UserProfileStore {
 public:
  // Throws Error(DuplicateUserId) if the id is already present.
  void add(UserProfile profile);

  std::size_t size() const noexcept { return profiles_.size(); }
  const std::vector<UserProfile>& profiles() const noexcept { return profiles_; }
  const UserProfile* find(std::string_view user_id) const;

  // Profiled users that have no edge in `edges`.
  std::vector<std::string> orphans(const EdgeStore& edges) const;

  std::vector<RowError> row_errors;

 private:
  std::vector<UserProfile> profiles_;
  IdMap ids_;
};

BrandCatalog load_brand_catalog(const std::filesystem::path& path, const LoadOptions& options = {});
EdgeStore load_edges(const std::filesystem::path& path, const BrandCatalog& catalog,
                     const LoadOptions& options = {});
UserProfileStore load_user_profiles(const std::filesystem::path& path, const LoadOptions& options = {});

void save_brand_catalog(const std::filesystem::path& path, const BrandCatalog& catalog);
void save_edges(const std::filesystem::path& path, const EdgeStore& edges);
void save_user_profiles(const std::filesystem::path& path, const UserProfileStore& profiles);

// Builds an EdgeStore from (user token, brand token) pairs against a catalog,
// applying the same dedup and unknown-brand rules as load_edges.
EdgeStore make_edge_store(const std::vector<std::pair<std::string, std::string>>& pairs,
                          const BrandCatalog& catalog);

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text) noexcept;
std::string format_iso_date(std::chrono::year_month_day date);

}  // namespace sesmap
