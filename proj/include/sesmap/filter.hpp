#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sesmap/ingest.hpp"

namespace sesmap {

struct FilterCriteria {
  std::uint32_t min_brands_per_user = 5;
  std::uint64_t min_statuses = 100;
  std::uint64_t min_followers = 25;
  std::chrono::year_month_day active_since{std::chrono::year{2020}, std::chrono::January, std::chrono::day{1}};
  std::optional<std::string> restrict_country = "US";
  std::uint32_t min_post_filter_brand_followers = 2;
  std::uint32_t min_informative_followers = 1000;
  // Run brand prune / user reselect once instead of to a fixed point.
  bool single_pass = false;

  // Throws Error(Config) on an invalid date.
  void validate() const;
};

// Attrition of one cascade stage. A user failing several criteria is
// attributed to the earliest stage only.
struct StageAudit {
  std::string stage;
  std::size_t users_in = 0, users_out = 0;
  std::size_t brands_in = 0, brands_out = 0;
  std::size_t edges_in = 0, edges_out = 0;
};

struct FilteredDataset {
  // Same id maps as the source store; `edges.edges` holds surviving edges only.
  EdgeStore edges;
  std::vector<std::uint32_t> users;   // surviving user indices, ascending
  std::vector<std::uint32_t> brands;  // surviving brand indices, ascending
  std::vector<StageAudit> audit;
  std::size_t prune_iterations = 0;
};

struct InformativeSets {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> brands;
};

// Brand-count, missing-profile, statuses, followers, recency and location
// stages, in that order. Users with a null location pass the country stage.
FilteredDataset filter_users(const EdgeStore& edges, const UserProfileStore& profiles,
                             const FilterCriteria& criteria);

// Drops brands below min_post_filter_brand_followers, then users below
// min_brands_per_user, repeating until nothing changes (or once if
// criteria.single_pass).
FilteredDataset prune_brands_and_reselect(FilteredDataset dataset, const FilterCriteria& criteria);

// Users covering all six domains, and brands followed by at least
// max(1, min_informative_followers) of those users.
InformativeSets select_informative(const FilteredDataset& dataset, const BrandCatalog& catalog,
                                   const FilterCriteria& criteria);

// Removes informative users with no edge into the informative brands (and
// vice versa) so the estimation matrix has no empty margin.
InformativeSets restrict_to_support(const FilteredDataset& dataset, InformativeSets sets,
                                    std::size_t* dropped_users = nullptr);

}  // namespace sesmap
