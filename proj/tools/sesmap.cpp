#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sesmap/error.hpp"
#include "sesmap/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> k_dims;
  std::vector<std::string> analyses;
  std::optional<std::size_t> n_users, n_brands;
  std::optional<double> proximity_weight;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file or a previous run manifest")->check(CLI::ExistingFile);
  cmd->add_option("--threads", o.threads, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--out", o.out, "Output directory");
}

void emit_error(std::string_view stage, std::string_view kind, std::string_view message,
                std::optional<std::size_t> line = std::nullopt) {
  nlohmann::json err{{"kind", kind}, {"message", message}, {"stage", stage}};
  if (line) err["line"] = *line;
  std::cerr << nlohmann::json{{"error", err}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent socioeconomic status from follow networks"};
  app.require_subcommand(1);
  Overrides o;

  struct Command {
    const char* name;
    const char* help;
  };
  const std::vector<Command> commands{
      {"ingest", "Validate and summarize the input files"},
      {"filter", "Run the user/brand filter cascade and select the informative subset"},
      {"fit", "Fit correspondence analysis on the informative subset"},
      {"project", "Project all brands, then all users, into the fitted space"},
      {"score", "Orient dimension 1 and standardize SES scores"},
      {"validate", "Run validation analyses on the scores"},
      {"synth", "Generate a synthetic dataset with known latent SES"},
      {"pipeline", "Run ingest, filter, fit, project, score and validate"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, o);
    subs.push_back(sub);
    const std::string name = c.name;
    if (name == "fit" || name == "pipeline") {
      sub->add_option("--k-dims", o.k_dims, "Number of CA dimensions");
    }
    if (name == "validate" || name == "pipeline") {
      sub->add_option("--analysis", o.analyses, "Analysis to run (repeatable)")
          ->check(CLI::IsMember(sesmap::kAnalyses));
    }
    if (name == "synth") {
      sub->add_option("--n-users", o.n_users, "Number of users");
      sub->add_option("--n-brands", o.n_brands, "Number of brands");
      sub->add_option("--proximity-weight", o.proximity_weight, "Weight of SES proximity in the follow model");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::string command;
  for (auto* s : subs) {
    if (s->parsed()) command = s->get_name();
  }

  try {
    auto config = o.config.empty() ? sesmap::PipelineConfig{} : sesmap::load_config(o.config);
    if (o.threads) config.threads = *o.threads;
    if (o.seed) {
      if (command == "synth") {
        config.synth.seed = *o.seed;
      } else {
        config.seed = *o.seed;
      }
    }
    if (!o.out.empty()) config.output_dir = o.out;
    if (o.k_dims) config.k_dims = *o.k_dims;
    if (!o.analyses.empty()) config.validate.analyses = o.analyses;
    if (o.n_users) config.synth.n_users = *o.n_users;
    if (o.n_brands) config.synth.n_brands = *o.n_brands;
    if (o.proximity_weight) config.synth.proximity_weight = *o.proximity_weight;
#ifdef _OPENMP
    if (config.threads > 0) omp_set_num_threads(config.threads);
#endif

    std::vector<sesmap::StageRecord> records;
    if (command == "pipeline") {
      records = sesmap::run_pipeline(config);
    } else {
      records.push_back(sesmap::run_stage(*sesmap::parse_stage(command), config));
    }
    sesmap::write_manifest(config, records);
    for (const auto& r : records) {
      std::printf("%-9s %8.3f s\n", std::string(sesmap::to_string(r.stage)).c_str(), r.seconds);
    }
    std::printf("artifacts in %s\n", config.output_dir.string().c_str());
    return 0;
  } catch (const sesmap::Error& e) {
    emit_error(command, sesmap::to_string(e.kind()), e.what(), e.line());
  } catch (const std::exception& e) {
    emit_error(command, "Internal", e.what());
  }
  return 1;
}
