#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sesmap/ingest.hpp"
#include "sesmap/scores.hpp"
#include "sesmap/stats.hpp"
#include "sesmap/titles.hpp"

namespace sesmap {

enum class ProximityLink { Quadratic, Absolute };

struct SynthParams {
  std::size_t n_users = 20000;
  std::size_t n_brands = 150;
  std::array<double, kDomainCount> domain_weights{1, 1, 1, 1, 1, 1};
  double base_rate = -2.2;         // beta0
  double proximity_weight = 1.5;   // beta1; 0 gives the null model
  double popularity_spread = 0.5;  // sd of per-brand offsets
  double activity_spread = 0.5;    // sd of per-user offsets
  ProximityLink link = ProximityLink::Quadratic;
  std::uint64_t seed = 7;

  // Fraction of users whose description names a job title tied to their SES.
  double title_rate = 0.3;
  // sd of the noise added to SES before it is mapped to a title.
  double title_noise = 0.5;
  // Fractions of users given an "aspiring <title>" description (vetoed by the
  // lexicon) or a two-title description (ambiguous).
  double aspiring_rate = 0.02;
  double ambiguous_rate = 0.01;
  // Users appended at the end whose follows and profile copy users 0, 1, ...
  std::size_t duplicate_users = 0;

  // Throws InvalidArgument for out-of-range values.
  void validate() const;
};

struct SynthTruth {
  std::vector<std::string> user_ids;
  std::vector<double> user_ses;
  std::vector<double> user_activity;
  std::vector<std::string> brand_ids;
  std::vector<double> brand_ses;
  std::vector<double> brand_popularity;
  // Sum of follow probabilities over the final users and all brands.
  double expected_edges = 0;
  std::size_t resampled_users = 0;
};

struct SynthData {
  BrandCatalog catalog;
  EdgeStore edges;
  UserProfileStore profiles;
  TitleLexicon lexicon;
  SynthTruth truth;
};

// Follow probability logistic(b0 + a_u + q_b - b1 * d(s_u, s_b)), d squared
// or absolute distance.
double follow_probability(const SynthParams& params, double user_ses, double activity, double brand_ses,
                          double popularity);

// Deterministic per seed and independent of thread count. Users with no
// follows are redrawn. Throws DegenerateParams when the mean expected
// follows per user is below one.
SynthData generate(const SynthParams& params);

// Twelve titles with class ascending and salary strictly descending.
TitleLexicon builtin_lexicon();

// Writes brands.csv, edges.csv, profiles.csv, lexicon.csv, truth_users.csv
// and truth_brands.csv into `dir`.
void save_synth(const std::filesystem::path& dir, const SynthData& data);

struct LatentTable {
  std::vector<std::string> ids;
  std::vector<double> values;
};

// truth_users.csv / truth_brands.csv: id,ses,offset.
LatentTable load_truth(const std::filesystem::path& path);

struct RecoveryResult {
  CorrelationResult correlation;  // rho holds |Spearman|
  double signed_rho = 0;
  double coverage = 0;
  std::size_t matched = 0;
  std::size_t truth_size = 0;
};

// Spearman between estimated SES and the latent truth over the entities
// present in both. Throws InsufficientCoverage below `min_coverage`.
RecoveryResult evaluate_recovery(const ScoreTable& estimates, const LatentTable& truth, double min_coverage = 0.9);

}  // namespace sesmap
