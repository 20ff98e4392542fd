#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sesmap/types.hpp"

namespace sesmap {

struct ScoreEntry {
  std::string entity_id;
  double raw_dim1 = 0;
  double ses = 0;
};

struct StandardizationMeta {
  double mean = 0;
  double sd = 0;        // population sd (divides by N)
  double skewness = 0;  // of the raw scores over the population
  std::size_t population_size = 0;
  std::string population;
};

struct ScoreTable {
  EntityKind kind = EntityKind::User;
  std::vector<ScoreEntry> entries;
  StandardizationMeta meta;
};

// z-scores every entry with the mean and population sd of the entries
// flagged in `population_mask` (all entries when the mask is empty).
// Throws Error(ZeroVariance) for fewer than two population entries or a
// constant population.
ScoreTable standardize(EntityKind kind, std::vector<std::string> ids, std::span<const double> raw,
                       std::string population, const std::vector<bool>& population_mask = {});

// CSV with header entity_id,raw_dim1,ses; values in shortest round-trip form.
void save_score_table(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable load_score_table(const std::filesystem::path& path, EntityKind kind);

}  // namespace sesmap
