#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sesmap/scores.hpp"
#include "sesmap/stats.hpp"

namespace sesmap {

// One column of a covariate table (entity_id,<col>,<col>,...). A column
// whose non-blank values all parse as numbers is numeric; anything else is
// categorical.
struct CovariateResult {
  std::string column;
  bool numeric = false;
  std::size_t n = 0;  // entities with a score and a non-blank value
  std::optional<CorrelationResult> correlation;  // numeric columns
  GroupStats groups;                             // categorical columns
  std::optional<TTestResult> welch;              // exactly two groups
  std::optional<AnovaResult> anova;              // three or more groups
  std::string note;                              // why a test was skipped
};

struct CovariateReport {
  std::vector<CovariateResult> columns;
  std::size_t rows = 0;
  std::size_t unmatched = 0;  // covariate rows without a score
};

// Correlates SES with numeric columns (Spearman) and compares SES across
// categories (group medians with bootstrap se, then Welch t or ANOVA).
CovariateReport covariate_analysis(const ScoreTable& scores, const std::filesystem::path& path,
                                   const BootstrapOptions& bootstrap = {}, char delimiter = ',');

}  // namespace sesmap
