#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sesmap/scores.hpp"

namespace sesmap {

struct CorrelationResult {
  double rho = 0;
  std::size_t n = 0;
  double p_value = 1;
  std::string method;
};

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> mid_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

struct SpearmanOptions {
  // For n <= 10 use the exact permutation distribution instead of the t
  // approximation.
  bool exact_small_n = false;
};

// Spearman's rho as the Pearson correlation of mid-ranks. Two-sided p from
// t = rho * sqrt((n-2)/(1-rho^2)) on n-2 df; |rho| = 1 gives p = 0.
// Throws LengthMismatch, TooFewObservations (n < 3), ZeroVariance,
// InvalidArgument (non-finite input).
CorrelationResult spearman(std::span<const double> x, std::span<const double> y, const SpearmanOptions& options = {});

// Two-sided exact permutation p-value of Spearman's rho, n <= 10.
double spearman_exact_p(std::span<const double> x, std::span<const double> y);

struct TTestResult {
  double t = 0;
  double df = 0;
  double p = 1;
  // Both groups have zero variance: t is 0 (equal means, p = 1) or
  // +/-infinity (p = 0).
  bool degenerate = false;
};

// Unequal-variance t-test with Welch-Satterthwaite df. Throws
// TooFewObservations when a group has fewer than two values.
TTestResult welch_t(std::span<const double> a, std::span<const double> b);

// Equal-variance (pooled) two-sample t-test.
TTestResult pooled_t(std::span<const double> a, std::span<const double> b);

struct AnovaResult {
  double F = 0;
  double df1 = 0;
  double df2 = 0;
  double p = 1;
};

// One-way ANOVA. Throws TooFewGroups (< 2 groups), TooFewObservations
// (a group with < 2 values), ZeroVariance (no within-group variation).
AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

double median(std::vector<double> values);

struct BootstrapOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  // Groups smaller than this are flagged as small.
  std::size_t min_group_size = 10;
};

// Standard deviation of `replicates` resampled medians. Replicate b draws
// from its own generator derived from (seed, stream, b), so the result does
// not depend on thread scheduling.
double bootstrap_median_se(std::span<const double> values, std::size_t replicates, std::uint64_t seed,
                           std::uint64_t stream = 0);

struct GroupSummary {
  std::size_t n = 0;
  double median = 0;
  double se_median = 0;
  double mean = 0;
  bool small = false;
};

using GroupStats = std::map<std::string, GroupSummary>;

// Per-group median SES with bootstrap standard errors. `assignment` maps
// entity ids to group labels. Throws UnknownEntity for an assigned entity
// without a score.
GroupStats group_median_se(const ScoreTable& scores, const std::map<std::string, std::string>& assignment,
                           const BootstrapOptions& options = {});

// SplitMix64 finalizer; derives independent seeds from structured inputs.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace sesmap
