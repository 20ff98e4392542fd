#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "pipeline_support.hpp"
#include "sesmap/error.hpp"
#include "test_support.hpp"

namespace sesmap {
namespace {

namespace fs = std::filesystem;
using fixtures::read_bytes;
using fixtures::read_json;

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixtures::TempDir("pipeline");
    SynthParams p;
    p.n_users = 3000;
    p.seed = 5;
    data_ = new SynthData(generate(p));
    save_synth(data_dir(), *data_);
  }
  static void TearDownTestSuite() {
    delete data_;
    delete dir_;
  }

  static fs::path data_dir() { return dir_->path() / "data"; }
  static fs::path out(const std::string& name) { return dir_->path() / name; }

  // Config with an anchor that points dimension 1 at high latent SES.
  static PipelineConfig anchored(const std::string& name) {
    auto c = fixtures::synthetic_config(data_dir(), out(name), 10);
    c.validate.bootstrap_replicates = 200;
    run_stage(Stage::Ingest, c);
    run_stage(Stage::Filter, c);
    c.anchor = fixtures::truth_anchor(*data_, c.output_dir);
    return c;
  }

  static fixtures::TempDir* dir_;
  static SynthData* data_;
};

fixtures::TempDir* PipelineTest::dir_ = nullptr;
SynthData* PipelineTest::data_ = nullptr;

std::optional<ErrorKind> kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

TEST_F(PipelineTest, EndToEndArtifactsAndSignatures) {
  const auto c = anchored("full");
  const auto records = run_pipeline(c);
  write_manifest(c, records);
  ASSERT_EQ(records.size(), 6u);
  for (const char* f : {"model.json", "model.bin", "users_ses.csv", "brands_ses.csv", "user_coords.csv",
                        "brand_coords.csv", "manifest.json", "validation/report.json"}) {
    EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
  }

  for (const char* f : {"users_ses.csv", "brands_ses.csv"}) {
    const auto ses = fixtures::read_column(c.output_dir / f, "ses");
    double mean = 0, sq = 0;
    for (const auto& [id, v] : ses) mean += v;
    mean /= static_cast<double>(ses.size());
    for (const auto& [id, v] : ses) sq += (v - mean) * (v - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9) << f;
    EXPECT_NEAR(std::sqrt(sq / static_cast<double>(ses.size())), 1.0, 1e-9) << f;
  }

  const auto report = read_json(c.output_dir / "validation/report.json");
  const auto& titles = report.at("title-salary");
  EXPECT_GT(titles.at("median_ses_vs_salary").at("rho").get<double>(), 0.5);
  EXPECT_LT(titles.at("median_ses_vs_class").at("rho").get<double>(), -0.5);
  EXPECT_GT(report.at("recovery").at("user").at("signed_rho").get<double>(), 0.8);
  EXPECT_GT(report.at("recovery").at("brand").at("signed_rho").get<double>(), 0.9);

  const auto manifest = read_json(c.output_dir / "manifest.json");
  EXPECT_EQ(manifest.at("config_hash"), config_hash(c));
  EXPECT_EQ(manifest.at("stages").size(), 6u);
}

TEST_F(PipelineTest, StagesResumeFromArtifacts) {
  const auto whole = anchored("whole");
  run_pipeline(whole);
  auto staged = whole;
  staged.output_dir = out("staged");
  for (auto s : {Stage::Ingest, Stage::Filter, Stage::Fit, Stage::Project, Stage::Score}) run_stage(s, staged);
  for (const char* f : {"users_ses.csv", "brands_ses.csv", "user_coords.csv", "filtered_edges.csv"}) {
    EXPECT_EQ(read_bytes(whole.output_dir / f), read_bytes(staged.output_dir / f)) << f;
  }
}

TEST_F(PipelineTest, DuplicateFollowSetsShareCoordinates) {
  auto c = anchored("dups");
  run_pipeline(c);
  const auto dim1 = fixtures::read_column(c.output_dir / "user_coords.csv", "dim1");
  std::map<std::string, std::vector<std::string>> sets;
  for (const auto& e : data_->edges.edges) {
    sets[data_->edges.user_ids->id(e.user)].push_back(data_->edges.brand_ids->id(e.brand));
  }
  std::map<std::vector<std::string>, double> seen;
  std::size_t shared = 0;
  for (auto& [u, bs] : sets) {
    std::sort(bs.begin(), bs.end());
    auto it = dim1.find(u);
    if (it == dim1.end()) continue;
    auto [pos, fresh] = seen.emplace(bs, it->second);
    if (!fresh) {
      ++shared;
      EXPECT_EQ(pos->second, it->second) << u;
    }
  }
  EXPECT_GT(shared, 0u);
}

TEST_F(PipelineTest, KDimsTooLargeFailsBeforeFitting) {
  auto c = fixtures::synthetic_config(data_dir(), out("bigk"), 10);
  run_stage(Stage::Ingest, c);
  run_stage(Stage::Filter, c);
  c.k_dims = 100000;
  EXPECT_EQ(kind_of([&] { run_stage(Stage::Fit, c); }), ErrorKind::Config);
  EXPECT_FALSE(fs::exists(c.output_dir / "model.json"));
}

TEST_F(PipelineTest, ConfigValidation) {
  auto c = fixtures::synthetic_config(data_dir(), out("cfg"), 10);
  EXPECT_NO_THROW(c.check());
  auto same = c;
  same.inputs.profiles = data_dir() / "." / "edges.csv";
  EXPECT_EQ(kind_of([&] { same.check(); }), ErrorKind::Config);
  auto inside = c;
  inside.output_dir = data_dir() / "edges.csv";
  EXPECT_EQ(kind_of([&] { inside.check(); }), ErrorKind::Config);
  auto bad = c;
  bad.standardize_population = "some";
  EXPECT_EQ(kind_of([&] { bad.check(); }), ErrorKind::Config);
  bad = c;
  bad.validate.analyses = {"horoscope"};
  EXPECT_EQ(kind_of([&] { bad.check(); }), ErrorKind::Config);
  bad = c;
  bad.k_dims = 0;
  EXPECT_EQ(kind_of([&] { bad.check(); }), ErrorKind::Config);

  auto j = to_json(c);
  j["colour"] = "blue";
  EXPECT_EQ(kind_of([&] { config_from_json(j); }), ErrorKind::Config);
}

TEST_F(PipelineTest, ConfigRoundTripHashAndRelativePaths) {
  const auto c = fixtures::synthetic_config(data_dir(), out("hash"), 10);
  EXPECT_EQ(config_hash(config_from_json(to_json(c))), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  auto other = c;
  other.seed = 2;
  EXPECT_NE(config_hash(other), config_hash(c));

  const fs::path cfg = dir_->path() / "relative.json";
  fixtures::write_file(cfg, R"({"inputs": {"edges": "data/edges.csv"}, "output_dir": "rel_out", "k_dims": 2})");
  const auto loaded = load_config(cfg);
  EXPECT_EQ(fs::weakly_canonical(loaded.inputs.edges), fs::weakly_canonical(data_dir() / "edges.csv"));
  EXPECT_EQ(fs::weakly_canonical(loaded.output_dir), fs::weakly_canonical(dir_->path() / "rel_out"));
  EXPECT_EQ(loaded.k_dims, 2u);
  EXPECT_EQ(loaded.filter.min_brands_per_user, FilterCriteria{}.min_brands_per_user);
}

TEST_F(PipelineTest, CliRunsAreByteIdenticalAndManifestReloads) {
  const auto c = anchored("cli_a");
  const fs::path cfg = dir_->path() / "cli.json";
  fixtures::write_file(cfg, to_json(c).dump(2));
  ASSERT_EQ(fixtures::run_cli("pipeline --config " + cfg.string() + " --out " + out("cli_a").string()), 0);
  ASSERT_EQ(fixtures::run_cli("pipeline --config " + cfg.string() + " --out " + out("cli_b").string()), 0);
  for (const char* f : {"users_ses.csv", "brands_ses.csv", "user_coords.csv", "brand_coords.csv"}) {
    EXPECT_EQ(read_bytes(out("cli_a") / f), read_bytes(out("cli_b") / f)) << f;
  }
  // Rerunning from a manifest reproduces the configuration.
  const auto manifest = out("cli_a") / "manifest.json";
  ASSERT_EQ(fixtures::run_cli("score --config " + manifest.string() + " --out " + out("cli_a").string()), 0);
  EXPECT_EQ(read_json(manifest).at("config_hash"), config_hash(load_config(manifest)));
}

TEST_F(PipelineTest, CliOverridesConfigValues) {
  const auto c = fixtures::synthetic_config(data_dir(), out("over"), 10);
  const fs::path cfg = dir_->path() / "over.json";
  fixtures::write_file(cfg, to_json(c).dump());
  ASSERT_EQ(fixtures::run_cli("ingest --config " + cfg.string() + " --seed 77 --threads 1"), 0);
  const auto manifest = read_json(out("over") / "manifest.json");
  EXPECT_EQ(manifest.at("seed"), 77);
  EXPECT_EQ(manifest.at("config").at("seed"), 77);
  EXPECT_EQ(manifest.at("config").at("threads"), 1);
}

TEST_F(PipelineTest, CliReportsStructuredErrors) {
  const fs::path err = dir_->path() / "err.txt";
  const fs::path cfg = dir_->path() / "missing.json";
  fixtures::write_file(cfg, R"({"inputs": {"brands": "nowhere/brands.csv", "edges": "nowhere/edges.csv",
                                          "profiles": "nowhere/profiles.csv"},
                               "output_dir": "missing_out"})");
  EXPECT_EQ(fixtures::run_cli("ingest --config " + cfg.string(), err), 1);
  const auto e = read_json(err).at("error");
  EXPECT_EQ(e.at("kind"), "Io");
  EXPECT_EQ(e.at("stage"), "ingest");
  EXPECT_NE(e.at("message").get<std::string>().find("brands.csv"), std::string::npos);

  fixtures::write_file(cfg, R"({"k_dim": 3})");
  EXPECT_EQ(fixtures::run_cli("fit --config " + cfg.string(), err), 1);
  EXPECT_EQ(read_json(err).at("error").at("kind"), "Config");

  EXPECT_NE(fixtures::run_cli("validate --analysis horoscope"), 0);
}

TEST_F(PipelineTest, CliSynthMatchesLibrary) {
  ASSERT_EQ(fixtures::run_cli("synth --n-users 3000 --seed 5 --out " + out("cli_synth").string()), 0);
  for (const char* f : {"edges.csv", "profiles.csv", "truth_users.csv", "brands.csv"}) {
    EXPECT_EQ(read_bytes(out("cli_synth") / f), read_bytes(data_dir() / f)) << f;
  }
}

// Recovery weakens as the proximity weight shrinks toward the null model.
TEST(RecoverySweep, MonotoneInProximityWeight) {
  fixtures::TempDir dir("sweep");
  std::vector<double> rho;
  for (double beta : {1.5, 0.6, 0.25, 0.0}) {
    SynthParams p;
    p.n_users = 4000;
    p.seed = 21;
    p.proximity_weight = beta;
    const auto data_dir = dir.path() / ("d" + std::to_string(rho.size()));
    save_synth(data_dir, generate(p));
    auto c = fixtures::synthetic_config(data_dir, dir.path() / ("o" + std::to_string(rho.size())), 10);
    c.validate.analyses = {"recovery"};
    run_pipeline(c);
    rho.push_back(read_json(c.output_dir / "validation/recovery.json").at("user").at("abs_rho").get<double>());
  }
  for (std::size_t i = 1; i < rho.size(); ++i) EXPECT_LT(rho[i], rho[i - 1]) << i;
  EXPECT_LT(rho.back(), 0.1);
}

}  // namespace
}  // namespace sesmap
