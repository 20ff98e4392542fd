#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sesmap/ca.hpp"
#include "sesmap/filter.hpp"
#include "sesmap/synth.hpp"

namespace sesmap {

// Unset paths are empty.
struct InputPaths {
  std::filesystem::path brands, edges, profiles;
  std::filesystem::path lexicon;
  std::filesystem::path truth_users, truth_brands;
  std::filesystem::path brand_covariates, user_covariates;
};

struct ValidateConfig {
  // Subset of title-salary, brand-covariates, user-covariates, recovery.
  // Empty selects every analysis whose inputs are configured.
  std::vector<std::string> analyses;
  std::size_t min_title_matches = 50;
  std::size_t min_group_size = 10;
  std::size_t bootstrap_replicates = 1000;
};

struct PipelineConfig {
  InputPaths inputs;
  char delimiter = ',';
  FilterCriteria filter;
  SvdParams svd;
  std::size_t k_dims = 3;
  std::optional<Anchor> anchor;  // largest-mass brand when unset
  // "all" standardizes over every scored entity, "informative" over the
  // entities of the fitted subset.
  std::string standardize_population = "all";
  bool skip_empty = true;
  ValidateConfig validate;
  SynthParams synth;
  std::filesystem::path output_dir = "sesmap_out";
  std::uint64_t seed = 0;
  int threads = 0;  // 0 keeps the runtime default

  // Throws Config for invalid values or colliding paths.
  void check() const;
};

extern const std::vector<std::string> kAnalyses;

nlohmann::json to_json(const PipelineConfig& config);
// Relative paths resolve against `base_dir`. Unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& json, const std::filesystem::path& base_dir = {});
// Accepts a config file or a run manifest (uses its "config" member).
PipelineConfig load_config(const std::filesystem::path& path);
// FNV-1a 64 of the canonical config JSON, as 16 hex digits.
std::string config_hash(const PipelineConfig& config);

enum class Stage { Ingest, Filter, Fit, Project, Score, Validate, Synth };

std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;

struct StageRecord {
  Stage stage = Stage::Ingest;
  double seconds = 0;
  nlohmann::json summary;
};

// Runs one stage, reading the configured inputs and the artifacts earlier
// stages left in output_dir, and writing its own artifacts there.
StageRecord run_stage(Stage stage, const PipelineConfig& config);

// ingest, filter, fit, project, score, then validate when any analysis has
// its inputs.
std::vector<StageRecord> run_pipeline(const PipelineConfig& config);

// output_dir/manifest.json: config, hash, seed, threads, versions, stage
// timings and summaries.
void write_manifest(const PipelineConfig& config, const std::vector<StageRecord>& stages);

}  // namespace sesmap
