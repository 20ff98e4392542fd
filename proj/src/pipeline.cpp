#include "sesmap/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <Eigen/Core>
#include <boost/version.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sesmap/covariates.hpp"
#include "sesmap/csv.hpp"
#include "sesmap/error.hpp"
#include "sesmap/model_io.hpp"
#include "sesmap/scores.hpp"
#include "sesmap/sparse_matrix.hpp"
#include "sesmap/titles.hpp"

#ifndef SESMAP_VERSION
#define SESMAP_VERSION "0.0.0"
#endif

namespace sesmap {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string> kAnalyses{"title-salary", "brand-covariates", "user-covariates", "recovery"};

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorKind::Config, message); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) config_error(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(where + "." + key + ": wrong type");
  }
}

json to_json(const FilterCriteria& f) {
  return {{"min_brands_per_user", f.min_brands_per_user},
          {"min_statuses", f.min_statuses},
          {"min_followers", f.min_followers},
          {"active_since", format_iso_date(f.active_since)},
          {"restrict_country", f.restrict_country ? json(*f.restrict_country) : json(nullptr)},
          {"min_post_filter_brand_followers", f.min_post_filter_brand_followers},
          {"min_informative_followers", f.min_informative_followers},
          {"single_pass", f.single_pass}};
}

json to_json(const SynthParams& s) {
  return {{"n_users", s.n_users},
          {"n_brands", s.n_brands},
          {"domain_weights", s.domain_weights},
          {"base_rate", s.base_rate},
          {"proximity_weight", s.proximity_weight},
          {"popularity_spread", s.popularity_spread},
          {"activity_spread", s.activity_spread},
          {"link", s.link == ProximityLink::Quadratic ? "quadratic" : "absolute"},
          {"seed", s.seed},
          {"title_rate", s.title_rate},
          {"title_noise", s.title_noise},
          {"aspiring_rate", s.aspiring_rate},
          {"ambiguous_rate", s.ambiguous_rate},
          {"duplicate_users", s.duplicate_users}};
}

json correlation_json(const CorrelationResult& r) {
  return {{"rho", r.rho}, {"p_value", r.p_value}, {"n", r.n}, {"method", r.method}};
}

json group_json(const GroupSummary& g) {
  return {{"n", g.n}, {"median", g.median}, {"se_median", g.se_median}, {"mean", g.mean}, {"small", g.small}};
}

// Non-finite values become null so the JSON stays valid.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path artifact(const PipelineConfig& c, const char* name) { return c.output_dir / name; }

void require_input(const fs::path& p, const char* name) {
  if (p.empty()) config_error(std::string("input path '") + name + "' is not configured");
}

std::vector<std::pair<std::string, std::string>> read_pairs(const fs::path& path) {
  csv::Reader reader(path);
  const auto header = reader.read_header();
  if (header.size() != 2 || header[0] != "user_id" || header[1] != "brand_id") {
    throw Error(ErrorKind::MalformedRow, path.string() + ": expected header user_id,brand_id", 1);
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 2) {
      throw Error(ErrorKind::MalformedRow, path.string() + ":" + std::to_string(reader.record_line()) + ": bad row",
                  reader.record_line());
    }
    pairs.emplace_back(std::move(f[0]), std::move(f[1]));
  }
  return pairs;
}

struct Loaded {
  BrandCatalog catalog;
  EdgeStore edges;
  UserProfileStore profiles;
};

Loaded load_inputs(const PipelineConfig& c) {
  require_input(c.inputs.brands, "brands");
  require_input(c.inputs.edges, "edges");
  require_input(c.inputs.profiles, "profiles");
  Loaded l;
  l.catalog = load_brand_catalog(c.inputs.brands, {c.delimiter, ErrorPolicy::Throw});
  l.edges = load_edges(c.inputs.edges, l.catalog, {c.delimiter, ErrorPolicy::Collect});
  l.profiles = load_user_profiles(c.inputs.profiles, {c.delimiter, ErrorPolicy::Collect});
  return l;
}

json row_errors_json(const std::vector<RowError>& errors) {
  json sample = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(errors.size(), 20); ++i) {
    sample.push_back({{"line", errors[i].line}, {"kind", to_string(errors[i].kind)}, {"message", errors[i].message}});
  }
  return {{"count", errors.size()}, {"sample", sample}};
}

json stage_ingest(const PipelineConfig& c) {
  const auto l = load_inputs(c);
  json summary{{"brands", l.catalog.size()},
               {"brands_followed", l.edges.n_brands_seen()},
               {"users", l.edges.n_users()},
               {"edges", l.edges.edges.size()},
               {"duplicate_edges", l.edges.duplicate_edges},
               {"skipped_unknown_brand", l.edges.skipped_unknown_brand},
               {"profiles", l.profiles.size()},
               {"orphan_profiles", l.profiles.orphans(l.edges).size()},
               {"catalog_warnings", l.catalog.warnings},
               {"edge_row_errors", row_errors_json(l.edges.row_errors)},
               {"profile_row_errors", row_errors_json(l.profiles.row_errors)}};
  std::size_t without_profile = 0;
  for (const auto& id : l.edges.user_ids->ids()) without_profile += l.profiles.find(id) == nullptr;
  summary["users_without_profile"] = without_profile;
  write_json(artifact(c, "ingest.json"), summary);
  return summary;
}

json stage_filter(const PipelineConfig& c) {
  const auto l = load_inputs(c);
  auto dataset = filter_users(l.edges, l.profiles, c.filter);
  dataset = prune_brands_and_reselect(std::move(dataset), c.filter);
  auto sets = select_informative(dataset, l.catalog, c.filter);
  std::size_t dropped = 0;
  sets = restrict_to_support(dataset, std::move(sets), &dropped);

  json stages = json::array();
  for (const auto& s : dataset.audit) {
    stages.push_back({{"stage", s.stage},
                      {"users_in", s.users_in},
                      {"users_out", s.users_out},
                      {"brands_in", s.brands_in},
                      {"brands_out", s.brands_out},
                      {"edges_in", s.edges_in},
                      {"edges_out", s.edges_out}});
  }
  json audit{{"stages", stages},
             {"prune_iterations", dataset.prune_iterations},
             {"surviving_users", dataset.users.size()},
             {"surviving_brands", dataset.brands.size()},
             {"surviving_edges", dataset.edges.edges.size()},
             {"informative_users", sets.users.size()},
             {"informative_brands", sets.brands.size()},
             {"informative_users_without_support", dropped}};
  write_json(artifact(c, "audit.json"), audit);

  csv::Writer w(artifact(c, "filtered_edges.csv"));
  w.write_row({"user_id", "brand_id"});
  for (const auto& e : dataset.edges.edges) {
    w.write_row({dataset.edges.user_ids->id(e.user), dataset.edges.brand_ids->id(e.brand)});
  }
  w.close();

  json informative{{"users", json::array()}, {"brands", json::array()}};
  for (auto u : sets.users) informative["users"].push_back(dataset.edges.user_ids->id(u));
  for (auto b : sets.brands) informative["brands"].push_back(dataset.edges.brand_ids->id(b));
  write_json(artifact(c, "informative.json"), informative);
  return audit;
}

json stage_fit(const PipelineConfig& c) {
  const auto informative = read_json(artifact(c, "informative.json"));
  const auto users = informative.at("users").get<std::vector<std::string>>();
  const auto brands = informative.at("brands").get<std::vector<std::string>>();
  const std::size_t limit = std::min(users.size(), brands.size());
  if (c.k_dims < 1 || limit < 2 || c.k_dims > limit - 1) {
    config_error("k_dims = " + std::to_string(c.k_dims) + " outside [1, " +
                 std::to_string(limit < 2 ? 0 : limit - 1) + "] for a " + std::to_string(users.size()) + " x " +
                 std::to_string(brands.size()) + " informative matrix");
  }
  std::unordered_map<std::string, std::uint32_t> row_of, col_of;
  for (std::uint32_t i = 0; i < users.size(); ++i) row_of.emplace(users[i], i);
  for (std::uint32_t j = 0; j < brands.size(); ++j) col_of.emplace(brands[j], j);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> local;
  for (const auto& [u, b] : read_pairs(artifact(c, "filtered_edges.csv"))) {
    auto r = row_of.find(u);
    auto k = col_of.find(b);
    if (r != row_of.end() && k != col_of.end()) local.emplace_back(r->second, k->second);
  }
  auto matrix = SparseBinaryMatrix::from_pairs(users.size(), brands.size(), std::move(local));
  matrix.row_labels = users;
  matrix.col_labels = brands;
  matrix.check_marginals();

  auto svd = c.svd;
  svd.seed = c.seed;
  const auto model = fit_ca(matrix, c.k_dims, svd);
  save_model(artifact(c, "model.json"), model);

  json sv = json::array();
  for (Eigen::Index i = 0; i < model.singular_values.size(); ++i) sv.push_back(model.singular_values[i]);
  return {{"rows", model.n_rows()},        {"cols", model.n_cols()},
          {"nnz", model.meta.nnz},         {"k", model.k()},
          {"requested_k", c.k_dims},       {"singular_values", sv},
          {"iterations", model.meta.iterations}, {"max_residual", model.meta.max_residual}};
}

void write_coords(const fs::path& path, const std::vector<std::string>& ids, const std::vector<bool>& active,
                  const Projection& p, const std::vector<bool>& supported) {
  csv::Writer w(path);
  std::vector<std::string> row{"entity_id", "active"};
  for (Eigen::Index d = 0; d < p.coords.cols(); ++d) row.push_back("dim" + std::to_string(d + 1));
  w.write_row(row);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    row.assign({ids[i], active[i] ? "1" : "0"});
    for (Eigen::Index d = 0; d < p.coords.cols(); ++d) {
      row.push_back(supported[i] ? csv::format_double(p.coords(static_cast<Eigen::Index>(i), d)) : "");
    }
    w.write_row(row);
  }
  w.close();
}

json stage_project(const PipelineConfig& c) {
  auto model = load_model(artifact(c, "model.json"));
  const auto pairs = read_pairs(artifact(c, "filtered_edges.csv"));
  IdMap users, brands;
  std::vector<std::vector<std::uint32_t>> followers, follows;
  for (const auto& [u, b] : pairs) {
    const auto ui = users.intern(u);
    const auto bi = brands.intern(b);
    if (ui >= follows.size()) follows.resize(ui + 1);
    if (bi >= followers.size()) followers.resize(bi + 1);
    follows[ui].push_back(bi);
    followers[bi].push_back(ui);
  }
  auto rekey = [](const std::vector<std::string>& labels, const IdMap& ids, std::vector<std::uint32_t>& keys,
                  const char* what) {
    keys.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto k = ids.find(labels[i]);
      if (!k) throw Error(ErrorKind::DimensionMismatch, std::string(what) + " '" + labels[i] + "' has no edges");
      keys[i] = *k;
    }
  };
  rekey(model.row_labels, users, model.row_keys, "model user");
  rekey(model.col_labels, brands, model.col_keys, "model brand");
  model.index_keys();

  const ProjectionOptions options{c.skip_empty};
  // Brands first, then users.
  const auto brand_proj = project_columns(model, followers, options);
  const auto user_proj = project_rows(model, follows, options);

  auto flags = [](std::size_t n, const std::vector<std::size_t>& unsupported) {
    std::vector<bool> ok(n, true);
    for (auto i : unsupported) ok[i] = false;
    return ok;
  };
  auto active = [](std::size_t n, auto&& in_model) {
    std::vector<bool> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = in_model(static_cast<std::uint32_t>(i));
    return a;
  };
  write_coords(artifact(c, "brand_coords.csv"), brands.ids(),
               active(brands.size(), [&](std::uint32_t k) { return model.col_position(k).has_value(); }), brand_proj,
               flags(brands.size(), brand_proj.unsupported));
  write_coords(artifact(c, "user_coords.csv"), users.ids(),
               active(users.size(), [&](std::uint32_t k) { return model.row_position(k).has_value(); }), user_proj,
               flags(users.size(), user_proj.unsupported));

  json summary{{"brands", brands.size()},
               {"brands_unsupported", brand_proj.unsupported.size()},
               {"brand_entries_outside_model", brand_proj.dropped_entries},
               {"users", users.size()},
               {"users_unsupported", user_proj.unsupported.size()},
               {"user_entries_outside_model", user_proj.dropped_entries},
               {"order", {"brands", "users"}}};
  write_json(artifact(c, "projection.json"), summary);
  return summary;
}

struct CoordRows {
  std::vector<std::string> ids;
  std::vector<double> dim1;
  std::vector<bool> active;
  std::size_t unsupported = 0;
};

CoordRows read_coords(const fs::path& path) {
  csv::Reader reader(path);
  const auto header = reader.read_header();
  if (header.size() < 3 || header[0] != "entity_id" || header[1] != "active" || header[2] != "dim1") {
    throw Error(ErrorKind::MalformedRow, path.string() + ": expected header entity_id,active,dim1,...", 1);
  }
  CoordRows rows;
  std::vector<std::string> f;
  while (reader.next(f)) {
    double v = 0;
    if (f.size() != header.size()) {
      throw Error(ErrorKind::MalformedRow, path.string() + ":" + std::to_string(reader.record_line()) + ": bad row",
                  reader.record_line());
    }
    if (f[2].empty()) {
      ++rows.unsupported;
      continue;
    }
    if (!csv::parse_double(f[2], v)) {
      throw Error(ErrorKind::MalformedRow, path.string() + ":" + std::to_string(reader.record_line()) + ": bad dim1",
                  reader.record_line());
    }
    rows.ids.push_back(f[0]);
    rows.dim1.push_back(v);
    rows.active.push_back(f[1] == "1");
  }
  return rows;
}

json score_table(const PipelineConfig& c, EntityKind kind, double sign, const char* coords, const char* out) {
  auto rows = read_coords(artifact(c, coords));
  for (auto& v : rows.dim1) v *= sign;
  const bool informative = c.standardize_population == "informative";
  auto table = standardize(kind, rows.ids, rows.dim1, c.standardize_population,
                           informative ? rows.active : std::vector<bool>{});
  save_score_table(artifact(c, out), table);
  std::vector<double> ses;
  for (const auto& e : table.entries) ses.push_back(e.ses);
  return {{"file", out},
          {"scored", table.entries.size()},
          {"unsupported", rows.unsupported},
          {"population", table.meta.population},
          {"population_size", table.meta.population_size},
          {"raw_mean", table.meta.mean},
          {"raw_sd", table.meta.sd},
          {"raw_skewness", table.meta.skewness},
          {"median_ses", ses.empty() ? json(nullptr) : json(median(ses))}};
}

json stage_score(const PipelineConfig& c) {
  const auto model = load_model(artifact(c, "model.json"));
  const auto anchor = c.anchor ? *c.anchor : default_anchor(model);
  const auto oriented = orient(model, anchor);
  const bool flipped = oriented.orientation.signs.at(0) != model.orientation.signs.at(0);
  const double sign = flipped ? -1.0 : 1.0;
  json summary{{"orientation", {{"anchor", oriented.orientation.anchor}, {"flipped", flipped}}},
               {"users", score_table(c, EntityKind::User, sign, "user_coords.csv", "users_ses.csv")},
               {"brands", score_table(c, EntityKind::Brand, sign, "brand_coords.csv", "brands_ses.csv")}};
  write_json(artifact(c, "scores.json"), summary);
  return summary;
}

bool analysis_ready(const PipelineConfig& c, const std::string& name) {
  if (name == "title-salary") return !c.inputs.profiles.empty() && !c.inputs.lexicon.empty();
  if (name == "brand-covariates") return !c.inputs.brand_covariates.empty();
  if (name == "user-covariates") return !c.inputs.user_covariates.empty();
  if (name == "recovery") return !c.inputs.truth_users.empty() || !c.inputs.truth_brands.empty();
  return false;
}

std::vector<std::string> selected_analyses(const PipelineConfig& c) {
  if (!c.validate.analyses.empty()) return c.validate.analyses;
  std::vector<std::string> out;
  for (const auto& a : kAnalyses) {
    if (analysis_ready(c, a)) out.push_back(a);
  }
  return out;
}

BootstrapOptions bootstrap_options(const PipelineConfig& c) {
  return {c.validate.bootstrap_replicates, c.seed, c.validate.min_group_size};
}

json title_salary(const PipelineConfig& c, const fs::path& dir) {
  require_input(c.inputs.profiles, "profiles");
  require_input(c.inputs.lexicon, "lexicon");
  const auto users = load_score_table(artifact(c, "users_ses.csv"), EntityKind::User);
  const auto profiles = load_user_profiles(c.inputs.profiles, {c.delimiter, ErrorPolicy::Collect});
  const auto lexicon = load_lexicon(c.inputs.lexicon);
  const auto r = title_salary_analysis(users, profiles, lexicon, {c.validate.min_title_matches}, bootstrap_options(c));

  csv::Writer w(dir / "title_salary.csv");
  w.write_row({"title", "class", "mean_salary_usd", "n", "median_ses", "se_median", "mean_ses", "small"});
  json rows = json::array();
  for (const auto* group : {&r.rows, &r.small_titles}) {
    for (const auto& t : *group) {
      w.write_row({t.title, std::to_string(t.occupational_class), csv::format_double(t.mean_salary),
                   std::to_string(t.summary.n), csv::format_double(t.summary.median),
                   csv::format_double(t.summary.se_median), csv::format_double(t.summary.mean),
                   t.summary.small ? "1" : "0"});
      auto j = group_json(t.summary);
      j["title"] = t.title;
      j["class"] = t.occupational_class;
      j["mean_salary_usd"] = t.mean_salary;
      rows.push_back(j);
    }
  }
  w.close();
  json report{{"titles", rows},
              {"median_ses_vs_salary", correlation_json(r.salary)},
              {"median_ses_vs_class", correlation_json(r.occupational_class)},
              {"matched_users", r.matches.assignment.size()},
              {"ambiguous_users", r.matches.ambiguous},
              {"excluded_hits", r.matches.excluded},
              {"dropped_titles", r.matches.dropped_titles},
              {"unscored_users", r.unscored_users}};
  write_json(dir / "title_salary.json", report);
  return report;
}

json covariates(const PipelineConfig& c, const fs::path& dir, EntityKind kind) {
  const bool brand = kind == EntityKind::Brand;
  const auto& input = brand ? c.inputs.brand_covariates : c.inputs.user_covariates;
  require_input(input, brand ? "brand_covariates" : "user_covariates");
  const auto scores = load_score_table(artifact(c, brand ? "brands_ses.csv" : "users_ses.csv"), kind);
  const auto r = covariate_analysis(scores, input, bootstrap_options(c), c.delimiter);
  const std::string stem = brand ? "brand_covariates" : "user_covariates";

  csv::Writer w(dir / (stem + ".csv"));
  w.write_row({"covariate", "type", "group", "n", "statistic", "value", "p_value"});
  json cols = json::array();
  for (const auto& col : r.columns) {
    json j{{"covariate", col.column}, {"type", col.numeric ? "numeric" : "categorical"}, {"n", col.n}};
    if (!col.note.empty()) j["note"] = col.note;
    if (col.correlation) {
      j["spearman"] = correlation_json(*col.correlation);
      w.write_row({col.column, "numeric", "", std::to_string(col.correlation->n), "spearman_rho",
                   csv::format_double(col.correlation->rho), csv::format_double(col.correlation->p_value)});
    }
    json groups = json::object();
    for (const auto& [label, g] : col.groups) {
      groups[label] = group_json(g);
      w.write_row({col.column, "categorical", label, std::to_string(g.n), "median_ses", csv::format_double(g.median),
                   ""});
    }
    if (!col.groups.empty()) j["groups"] = groups;
    if (col.welch) {
      j["welch_t"] = {{"t", number(col.welch->t)}, {"df", col.welch->df}, {"p", col.welch->p},
                      {"degenerate", col.welch->degenerate}};
      w.write_row({col.column, "categorical", "", std::to_string(col.n), "welch_t", csv::format_double(col.welch->t),
                   csv::format_double(col.welch->p)});
    }
    if (col.anova) {
      j["anova"] = {{"F", col.anova->F}, {"df1", col.anova->df1}, {"df2", col.anova->df2}, {"p", col.anova->p}};
      w.write_row({col.column, "categorical", "", std::to_string(col.n), "anova_F", csv::format_double(col.anova->F),
                   csv::format_double(col.anova->p)});
    }
    cols.push_back(j);
  }
  w.close();
  json report{{"covariates", cols}, {"rows", r.rows}, {"unmatched_rows", r.unmatched}};
  write_json(dir / (stem + ".json"), report);
  return report;
}

json recovery(const PipelineConfig& c, const fs::path& dir) {
  if (c.inputs.truth_users.empty() && c.inputs.truth_brands.empty()) {
    config_error("recovery needs truth_users or truth_brands");
  }
  csv::Writer w(dir / "recovery.csv");
  w.write_row({"kind", "truth_size", "matched", "coverage", "abs_rho", "signed_rho", "p_value"});
  json report = json::object();
  auto one = [&](EntityKind kind, const fs::path& truth_path, const char* scores_file) {
    if (truth_path.empty()) return;
    const auto scores = load_score_table(artifact(c, scores_file), kind);
    const auto r = evaluate_recovery(scores, load_truth(truth_path));
    const std::string name(to_string(kind));
    report[name] = {{"truth_size", r.truth_size}, {"matched", r.matched},         {"coverage", r.coverage},
                    {"abs_rho", r.correlation.rho}, {"signed_rho", r.signed_rho}, {"p_value", r.correlation.p_value},
                    {"method", r.correlation.method}};
    w.write_row({name, std::to_string(r.truth_size), std::to_string(r.matched), csv::format_double(r.coverage),
                 csv::format_double(r.correlation.rho), csv::format_double(r.signed_rho),
                 csv::format_double(r.correlation.p_value)});
  };
  one(EntityKind::User, c.inputs.truth_users, "users_ses.csv");
  one(EntityKind::Brand, c.inputs.truth_brands, "brands_ses.csv");
  w.close();
  write_json(dir / "recovery.json", report);
  return report;
}

json stage_validate(const PipelineConfig& c) {
  const auto dir = c.output_dir / "validation";
  fs::create_directories(dir);
  json report = json::object();
  for (const auto& a : selected_analyses(c)) {
    if (a == "title-salary") {
      report[a] = title_salary(c, dir);
    } else if (a == "brand-covariates") {
      report[a] = covariates(c, dir, EntityKind::Brand);
    } else if (a == "user-covariates") {
      report[a] = covariates(c, dir, EntityKind::User);
    } else if (a == "recovery") {
      report[a] = recovery(c, dir);
    }
  }
  write_json(dir / "report.json", report);
  return report;
}

json stage_synth(const PipelineConfig& c) {
  const auto data = generate(c.synth);
  save_synth(c.output_dir, data);
  return {{"users", data.truth.user_ids.size()},
          {"brands", data.truth.brand_ids.size()},
          {"edges", data.edges.edges.size()},
          {"expected_edges", data.truth.expected_edges},
          {"resampled_users", data.truth.resampled_users},
          {"seed", c.synth.seed}};
}

std::string normalized(const fs::path& p) { return fs::weakly_canonical(fs::absolute(p)).lexically_normal().string(); }

}  // namespace

void PipelineConfig::check() const {
  if (k_dims < 1) config_error("k_dims must be at least 1");
  filter.validate();
  if (standardize_population != "all" && standardize_population != "informative") {
    config_error("standardize.population must be 'all' or 'informative'");
  }
  for (const auto& a : validate.analyses) {
    if (std::find(kAnalyses.begin(), kAnalyses.end(), a) == kAnalyses.end()) config_error("unknown analysis '" + a + "'");
  }
  if (validate.min_group_size < 1) config_error("validate.min_group_size must be at least 1");
  if (validate.bootstrap_replicates < 2) config_error("validate.bootstrap_replicates must be at least 2");
  if (!(svd.tolerance > 0) || svd.max_iterations < 1) config_error("svd tolerance and max_iterations must be positive");
  if (anchor) {
    if (anchor->ids.empty()) config_error("anchor.ids must not be empty");
    if (anchor->desired_sign != 1 && anchor->desired_sign != -1) config_error("anchor.sign must be 1 or -1");
  }
  if (threads < 0) config_error("threads must be >= 0");
  if (output_dir.empty()) config_error("output_dir must be set");

  std::map<std::string, std::string> seen;
  auto claim = [&](const fs::path& p, const std::string& name) {
    if (p.empty()) return;
    auto [it, fresh] = seen.emplace(normalized(p), name);
    if (!fresh) config_error("paths '" + it->second + "' and '" + name + "' refer to the same location");
  };
  claim(inputs.brands, "brands");
  claim(inputs.edges, "edges");
  claim(inputs.profiles, "profiles");
  claim(inputs.lexicon, "lexicon");
  claim(inputs.truth_users, "truth_users");
  claim(inputs.truth_brands, "truth_brands");
  claim(inputs.brand_covariates, "brand_covariates");
  claim(inputs.user_covariates, "user_covariates");
  claim(output_dir, "output_dir");
}

nlohmann::json to_json(const PipelineConfig& c) {
  json anchor = nullptr;
  if (c.anchor) {
    anchor = {{"kind", to_string(c.anchor->kind)}, {"ids", c.anchor->ids}, {"sign", c.anchor->desired_sign}};
  }
  return {{"inputs",
           {{"brands", c.inputs.brands.string()},
            {"edges", c.inputs.edges.string()},
            {"profiles", c.inputs.profiles.string()},
            {"lexicon", c.inputs.lexicon.string()},
            {"truth_users", c.inputs.truth_users.string()},
            {"truth_brands", c.inputs.truth_brands.string()},
            {"brand_covariates", c.inputs.brand_covariates.string()},
            {"user_covariates", c.inputs.user_covariates.string()}}},
          {"delimiter", std::string(1, c.delimiter)},
          {"filter", to_json(c.filter)},
          {"svd",
           {{"oversampling", c.svd.oversampling},
            {"power_iterations", c.svd.power_iterations},
            {"tolerance", c.svd.tolerance},
            {"max_iterations", c.svd.max_iterations}}},
          {"k_dims", c.k_dims},
          {"anchor", anchor},
          {"standardize", {{"population", c.standardize_population}}},
          {"projection", {{"skip_empty", c.skip_empty}}},
          {"validate",
           {{"analyses", c.validate.analyses},
            {"min_title_matches", c.validate.min_title_matches},
            {"min_group_size", c.validate.min_group_size},
            {"bootstrap_replicates", c.validate.bootstrap_replicates}}},
          {"synth", to_json(c.synth)},
          {"output_dir", c.output_dir.string()},
          {"seed", c.seed},
          {"threads", c.threads}};
}

PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  PipelineConfig c;
  reject_unknown(j, {"inputs", "delimiter", "filter", "svd", "k_dims", "anchor", "standardize", "projection",
                     "validate", "synth", "output_dir", "seed", "threads"},
                 "config");
  auto resolve = [&](const std::string& s) -> fs::path {
    if (s.empty()) return {};
    fs::path p(s);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  if (j.contains("inputs")) {
    const auto& in = j["inputs"];
    reject_unknown(in, {"brands", "edges", "profiles", "lexicon", "truth_users", "truth_brands", "brand_covariates",
                        "user_covariates"},
                   "inputs");
    auto path = [&](const char* key, fs::path& out) {
      std::string s;
      read_opt(in, key, s, "inputs");
      if (!s.empty()) out = resolve(s);
    };
    path("brands", c.inputs.brands);
    path("edges", c.inputs.edges);
    path("profiles", c.inputs.profiles);
    path("lexicon", c.inputs.lexicon);
    path("truth_users", c.inputs.truth_users);
    path("truth_brands", c.inputs.truth_brands);
    path("brand_covariates", c.inputs.brand_covariates);
    path("user_covariates", c.inputs.user_covariates);
  }
  if (j.contains("delimiter")) {
    std::string d;
    read_opt(j, "delimiter", d, "config");
    if (d.size() != 1) config_error("delimiter must be a single character");
    c.delimiter = d[0];
  }
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    const std::string w = "filter";
    reject_unknown(f, {"min_brands_per_user", "min_statuses", "min_followers", "active_since", "restrict_country",
                       "min_post_filter_brand_followers", "min_informative_followers", "single_pass"},
                   w);
    read_opt(f, "min_brands_per_user", c.filter.min_brands_per_user, w);
    read_opt(f, "min_statuses", c.filter.min_statuses, w);
    read_opt(f, "min_followers", c.filter.min_followers, w);
    read_opt(f, "min_post_filter_brand_followers", c.filter.min_post_filter_brand_followers, w);
    read_opt(f, "min_informative_followers", c.filter.min_informative_followers, w);
    read_opt(f, "single_pass", c.filter.single_pass, w);
    if (f.contains("active_since")) {
      std::string s;
      read_opt(f, "active_since", s, w);
      auto d = parse_iso_date(s);
      if (!d) config_error("filter.active_since: invalid date '" + s + "'");
      c.filter.active_since = *d;
    }
    if (f.contains("restrict_country")) {
      if (f["restrict_country"].is_null()) {
        c.filter.restrict_country.reset();
      } else {
        std::string s;
        read_opt(f, "restrict_country", s, w);
        c.filter.restrict_country = s;
      }
    }
  }
  if (j.contains("svd")) {
    const auto& s = j["svd"];
    reject_unknown(s, {"oversampling", "power_iterations", "tolerance", "max_iterations"}, "svd");
    read_opt(s, "oversampling", c.svd.oversampling, "svd");
    read_opt(s, "power_iterations", c.svd.power_iterations, "svd");
    read_opt(s, "tolerance", c.svd.tolerance, "svd");
    read_opt(s, "max_iterations", c.svd.max_iterations, "svd");
  }
  read_opt(j, "k_dims", c.k_dims, "config");
  if (j.contains("anchor") && !j["anchor"].is_null()) {
    const auto& a = j["anchor"];
    reject_unknown(a, {"kind", "ids", "sign"}, "anchor");
    Anchor anchor;
    std::string kind = "brand";
    read_opt(a, "kind", kind, "anchor");
    if (kind == "brand") {
      anchor.kind = EntityKind::Brand;
    } else if (kind == "user") {
      anchor.kind = EntityKind::User;
    } else {
      config_error("anchor.kind must be 'brand' or 'user'");
    }
    read_opt(a, "ids", anchor.ids, "anchor");
    read_opt(a, "sign", anchor.desired_sign, "anchor");
    c.anchor = anchor;
  }
  if (j.contains("standardize")) {
    reject_unknown(j["standardize"], {"population"}, "standardize");
    read_opt(j["standardize"], "population", c.standardize_population, "standardize");
  }
  if (j.contains("projection")) {
    reject_unknown(j["projection"], {"skip_empty"}, "projection");
    read_opt(j["projection"], "skip_empty", c.skip_empty, "projection");
  }
  if (j.contains("validate")) {
    const auto& v = j["validate"];
    reject_unknown(v, {"analyses", "min_title_matches", "min_group_size", "bootstrap_replicates"}, "validate");
    read_opt(v, "analyses", c.validate.analyses, "validate");
    read_opt(v, "min_title_matches", c.validate.min_title_matches, "validate");
    read_opt(v, "min_group_size", c.validate.min_group_size, "validate");
    read_opt(v, "bootstrap_replicates", c.validate.bootstrap_replicates, "validate");
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    const std::string w = "synth";
    reject_unknown(s, {"n_users", "n_brands", "domain_weights", "base_rate", "proximity_weight", "popularity_spread",
                       "activity_spread", "link", "seed", "title_rate", "title_noise", "aspiring_rate",
                       "ambiguous_rate", "duplicate_users"},
                   w);
    read_opt(s, "n_users", c.synth.n_users, w);
    read_opt(s, "n_brands", c.synth.n_brands, w);
    read_opt(s, "domain_weights", c.synth.domain_weights, w);
    read_opt(s, "base_rate", c.synth.base_rate, w);
    read_opt(s, "proximity_weight", c.synth.proximity_weight, w);
    read_opt(s, "popularity_spread", c.synth.popularity_spread, w);
    read_opt(s, "activity_spread", c.synth.activity_spread, w);
    read_opt(s, "seed", c.synth.seed, w);
    read_opt(s, "title_rate", c.synth.title_rate, w);
    read_opt(s, "title_noise", c.synth.title_noise, w);
    read_opt(s, "aspiring_rate", c.synth.aspiring_rate, w);
    read_opt(s, "ambiguous_rate", c.synth.ambiguous_rate, w);
    read_opt(s, "duplicate_users", c.synth.duplicate_users, w);
    if (s.contains("link")) {
      std::string link;
      read_opt(s, "link", link, w);
      if (link == "quadratic") {
        c.synth.link = ProximityLink::Quadratic;
      } else if (link == "absolute") {
        c.synth.link = ProximityLink::Absolute;
      } else {
        config_error("synth.link must be 'quadratic' or 'absolute'");
      }
    }
  }
  if (j.contains("output_dir")) {
    std::string s;
    read_opt(j, "output_dir", s, "config");
    c.output_dir = resolve(s);
  }
  read_opt(j, "seed", c.seed, "config");
  read_opt(j, "threads", c.threads, "config");
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  auto j = read_json(path);
  if (j.is_object() && j.contains("config") && j.contains("config_hash")) j = j["config"];
  return config_from_json(j, path.parent_path());
}

std::string config_hash(const PipelineConfig& config) {
  const auto text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Ingest: return "ingest";
    case Stage::Filter: return "filter";
    case Stage::Fit: return "fit";
    case Stage::Project: return "project";
    case Stage::Score: return "score";
    case Stage::Validate: return "validate";
    case Stage::Synth: return "synth";
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) noexcept {
  for (auto s : {Stage::Ingest, Stage::Filter, Stage::Fit, Stage::Project, Stage::Score, Stage::Validate,
                 Stage::Synth}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

StageRecord run_stage(Stage stage, const PipelineConfig& config) {
  config.check();
  fs::create_directories(config.output_dir);
  const auto start = std::chrono::steady_clock::now();
  StageRecord record;
  record.stage = stage;
  switch (stage) {
    case Stage::Ingest: record.summary = stage_ingest(config); break;
    case Stage::Filter: record.summary = stage_filter(config); break;
    case Stage::Fit: record.summary = stage_fit(config); break;
    case Stage::Project: record.summary = stage_project(config); break;
    case Stage::Score: record.summary = stage_score(config); break;
    case Stage::Validate: record.summary = stage_validate(config); break;
    case Stage::Synth: record.summary = stage_synth(config); break;
  }
  record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

std::vector<StageRecord> run_pipeline(const PipelineConfig& config) {
  config.check();
  std::vector<StageRecord> records;
  for (auto s : {Stage::Ingest, Stage::Filter, Stage::Fit, Stage::Project, Stage::Score}) {
    records.push_back(run_stage(s, config));
  }
  if (!selected_analyses(config).empty()) records.push_back(run_stage(Stage::Validate, config));
  return records;
}

void write_manifest(const PipelineConfig& config, const std::vector<StageRecord>& stages) {
  const auto path = config.output_dir / "manifest.json";
  const auto hash = config_hash(config);
  // Single-stage runs under the same config accumulate into one manifest.
  json st = json::array();
  if (fs::exists(path)) {
    try {
      const auto previous = read_json(path);
      if (previous.value("config_hash", "") == hash) st = previous.at("stages");
    } catch (const std::exception&) {
      st = json::array();
    }
  }
  for (const auto& s : stages) {
    json entry{{"stage", to_string(s.stage)}, {"seconds", s.seconds}, {"summary", s.summary}};
    auto it = std::find_if(st.begin(), st.end(), [&](const json& e) { return e.value("stage", "") == entry["stage"]; });
    if (it != st.end()) {
      *it = std::move(entry);
    } else {
      st.push_back(std::move(entry));
    }
  }
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  json manifest{{"tool", "sesmap"},
                {"config", to_json(config)},
                {"config_hash", hash},
                {"seed", config.seed},
                {"threads", threads},
                {"versions",
                 {{"sesmap", SESMAP_VERSION},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"boost", BOOST_LIB_VERSION},
                  {"compiler", __VERSION__}}},
                {"stages", st}};
  fs::create_directories(config.output_dir);
  write_json(config.output_dir / "manifest.json", manifest);
}

}  // namespace sesmap
