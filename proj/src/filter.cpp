#include "sesmap/filter.hpp"

#include <algorithm>
#include <array>

namespace sesmap {

namespace {

enum class UserStage : std::uint8_t { BrandCount, MissingProfile, Statuses, Followers, Recency, Location, Survived };

constexpr std::array<const char*, 6> kUserStageNames{"brand_count", "missing_profile", "statuses",
                                                     "followers",   "recency",         "location"};

std::vector<std::uint32_t> degrees(const std::vector<Edge>& edges, std::size_t n_users) {
  std::vector<std::uint32_t> deg(n_users, 0);
  for (const auto& e : edges) ++deg[e.user];
  return deg;
}

std::vector<std::uint32_t> indices_where(const std::vector<bool>& mask) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

}  // namespace

void FilterCriteria::validate() const {
  if (!active_since.ok()) throw Error(ErrorKind::Config, "filter.active_since is not a valid date");
}

FilteredDataset filter_users(const EdgeStore& edges, const UserProfileStore& profiles,
                             const FilterCriteria& criteria) {
  criteria.validate();
  const auto n_users = edges.n_users();
  const auto n_brands = edges.n_brands();
  const auto deg = degrees(edges.edges, n_users);
  const auto min_degree = std::max<std::uint32_t>(criteria.min_brands_per_user, 1);

  std::vector<UserStage> fate(n_users, UserStage::Survived);
  for (std::uint32_t u = 0; u < n_users; ++u) {
    if (deg[u] < min_degree) {
      fate[u] = UserStage::BrandCount;
      continue;
    }
    const UserProfile* p = profiles.find(edges.user_ids->id(u));
    if (!p) {
      fate[u] = UserStage::MissingProfile;
    } else if (p->statuses_count < criteria.min_statuses) {
      fate[u] = UserStage::Statuses;
    } else if (p->followers_count < criteria.min_followers) {
      fate[u] = UserStage::Followers;
    } else if (std::chrono::sys_days{p->last_active} < std::chrono::sys_days{criteria.active_since}) {
      fate[u] = UserStage::Recency;
    } else if (criteria.restrict_country && p->location_resolved &&
               *p->location_resolved != *criteria.restrict_country) {
      fate[u] = UserStage::Location;
    }
  }

  FilteredDataset out;
  std::size_t users_alive = n_users;
  std::size_t edges_alive = edges.edges.size();
  for (std::size_t s = 0; s < kUserStageNames.size(); ++s) {
    StageAudit a{kUserStageNames[s], users_alive, users_alive, n_brands, n_brands, edges_alive, edges_alive};
    for (std::uint32_t u = 0; u < n_users; ++u) {
      if (static_cast<std::size_t>(fate[u]) == s) {
        --a.users_out;
        a.edges_out -= deg[u];
      }
    }
    users_alive = a.users_out;
    edges_alive = a.edges_out;
    out.audit.push_back(std::move(a));
  }
  if (users_alive == 0) throw Error(ErrorKind::EmptyResult, "no users survive the user filters");

  out.edges.user_ids = edges.user_ids;
  out.edges.brand_ids = edges.brand_ids;
  out.edges.duplicate_edges = edges.duplicate_edges;
  out.edges.skipped_unknown_brand = edges.skipped_unknown_brand;
  out.edges.edges.reserve(edges_alive);
  for (const auto& e : edges.edges) {
    if (fate[e.user] == UserStage::Survived) out.edges.edges.push_back(e);
  }
  for (std::uint32_t u = 0; u < n_users; ++u) {
    if (fate[u] == UserStage::Survived) out.users.push_back(u);
  }
  out.brands.resize(n_brands);
  for (std::uint32_t b = 0; b < n_brands; ++b) out.brands[b] = b;
  return out;
}

FilteredDataset prune_brands_and_reselect(FilteredDataset dataset, const FilterCriteria& criteria) {
  const auto n_users = dataset.edges.n_users();
  const auto n_brands = dataset.edges.n_brands();
  const auto min_followers = std::max<std::uint32_t>(criteria.min_post_filter_brand_followers, 1);
  const auto min_degree = std::max<std::uint32_t>(criteria.min_brands_per_user, 1);

  std::vector<bool> user_alive(n_users, false), brand_alive(n_brands, false);
  for (auto u : dataset.users) user_alive[u] = true;
  for (auto b : dataset.brands) brand_alive[b] = true;
  std::size_t users = dataset.users.size();
  std::size_t brands = dataset.brands.size();

  auto& edges = dataset.edges.edges;
  auto drop_dead_edges = [&] {
    std::erase_if(edges, [&](const Edge& e) { return !user_alive[e.user] || !brand_alive[e.brand]; });
  };
  drop_dead_edges();

  for (;;) {
    ++dataset.prune_iterations;
    bool changed = false;

    StageAudit prune{"brand_prune", users, users, brands, brands, edges.size(), edges.size()};
    std::vector<std::uint32_t> followers(n_brands, 0);
    for (const auto& e : edges) ++followers[e.brand];
    for (std::uint32_t b = 0; b < n_brands; ++b) {
      if (brand_alive[b] && followers[b] < min_followers) {
        brand_alive[b] = false;
        --brands;
        changed = true;
      }
    }
    drop_dead_edges();
    prune.brands_out = brands;
    prune.edges_out = edges.size();
    dataset.audit.push_back(prune);

    StageAudit reselect{"user_reselect", users, users, brands, brands, edges.size(), edges.size()};
    const auto deg = degrees(edges, n_users);
    for (std::uint32_t u = 0; u < n_users; ++u) {
      if (user_alive[u] && deg[u] < min_degree) {
        user_alive[u] = false;
        --users;
        changed = true;
      }
    }
    drop_dead_edges();
    reselect.users_out = users;
    reselect.edges_out = edges.size();
    dataset.audit.push_back(reselect);

    if (users == 0 || brands == 0) {
      throw Error(ErrorKind::EmptyResult, "brand pruning emptied the matrix");
    }
    if (!changed || criteria.single_pass) break;
  }

  dataset.users = indices_where(user_alive);
  dataset.brands = indices_where(brand_alive);
  return dataset;
}

InformativeSets select_informative(const FilteredDataset& dataset, const BrandCatalog& catalog,
                                   const FilterCriteria& criteria) {
  const auto n_users = dataset.edges.n_users();
  const auto n_brands = dataset.edges.n_brands();
  constexpr std::uint8_t kAllMask = (1u << kDomainCount) - 1;

  std::vector<std::uint8_t> coverage(n_users, 0);
  for (const auto& e : dataset.edges.edges) {
    coverage[e.user] |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(catalog[e.brand].domain));
  }
  std::vector<bool> user_in(n_users, false);
  for (auto u : dataset.users) user_in[u] = coverage[u] == kAllMask;

  InformativeSets sets;
  sets.users = indices_where(user_in);
  if (sets.users.empty()) {
    throw Error(ErrorKind::EmptyResult, "no informative users: nobody follows brands from all six domains");
  }

  std::vector<std::uint32_t> informative_followers(n_brands, 0);
  for (const auto& e : dataset.edges.edges) {
    if (user_in[e.user]) ++informative_followers[e.brand];
  }
  const auto threshold = std::max<std::uint32_t>(criteria.min_informative_followers, 1);
  for (auto b : dataset.brands) {
    if (informative_followers[b] >= threshold) sets.brands.push_back(b);
  }
  if (sets.brands.empty()) {
    throw Error(ErrorKind::EmptyResult, "no informative brands: none has " + std::to_string(threshold) +
                                            " informative followers");
  }
  return sets;
}

InformativeSets restrict_to_support(const FilteredDataset& dataset, InformativeSets sets, std::size_t* dropped_users) {
  const auto n_users = dataset.edges.n_users();
  const auto n_brands = dataset.edges.n_brands();
  std::vector<bool> user_in(n_users, false), brand_in(n_brands, false);
  for (auto u : sets.users) user_in[u] = true;
  for (auto b : sets.brands) brand_in[b] = true;

  std::vector<bool> user_has(n_users, false), brand_has(n_brands, false);
  for (const auto& e : dataset.edges.edges) {
    if (user_in[e.user] && brand_in[e.brand]) {
      user_has[e.user] = true;
      brand_has[e.brand] = true;
    }
  }
  const auto before = sets.users.size();
  std::erase_if(sets.users, [&](std::uint32_t u) { return !user_has[u]; });
  std::erase_if(sets.brands, [&](std::uint32_t b) { return !brand_has[b]; });
  if (dropped_users) *dropped_users = before - sets.users.size();
  if (sets.users.empty() || sets.brands.empty()) {
    throw Error(ErrorKind::EmptyResult, "informative subset has no support");
  }
  return sets;
}

}  // namespace sesmap
