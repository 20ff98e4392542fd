#include "sesmap/synth.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "sesmap/csv.hpp"
#include "sesmap/error.hpp"

namespace sesmap {

namespace {

constexpr std::uint64_t kBrandStream = 0x62726e64;
constexpr std::uint64_t kUserStream = 0x75736572;
constexpr std::uint64_t kProfileStream = 0x70726f66;
constexpr int kMaxAttempts = 1000;

std::string padded(char prefix, std::size_t index, std::size_t width) {
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::size_t digit_count(std::size_t n) { return std::to_string(n == 0 ? 0 : n - 1).size(); }

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

struct UserDraw {
  double ses = 0;
  double activity = 0;
  double expected = 0;        // sum of follow probabilities for the accepted draw
  double first_expected = 0;  // same for the first draw, used for the degeneracy check
  int attempts = 0;
  std::vector<std::uint32_t> brands;
  UserProfile profile;
};

std::string describe(const SynthParams& params, const TitleLexicon& lexicon, double ses, std::mt19937_64& rng) {
  static constexpr std::array<std::string_view, 4> titled{"{} at a local firm", "Senior {}. Parent of two.",
                                                          "{} | coffee | hiking", "Proud {} from Ohio"};
  static constexpr std::array<std::string_view, 5> generic{"Coffee, hiking and good books.",
                                                           "Sports fan. Opinions my own.", "Living my best life",
                                                           "Dog person", ""};
  auto fill = [](std::string_view pattern, const std::string& title) {
    std::string out(pattern);
    out.replace(out.find("{}"), 2, title);
    return out;
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_title(0, lexicon.size() - 1);
  const double u = unit(rng);
  if (u < params.title_rate) {
    std::normal_distribution<double> noise(0.0, params.title_noise);
    const double spread = std::sqrt(1.0 + params.title_noise * params.title_noise);
    const double z = (ses + noise(rng)) / spread;
    const double upper_tail = 0.5 * std::erfc(z / std::sqrt(2.0));
    const auto index = std::min(lexicon.size() - 1, static_cast<std::size_t>(upper_tail * lexicon.size()));
    std::uniform_int_distribution<std::size_t> pick(0, titled.size() - 1);
    const auto pattern = titled[pick(rng)];
    const auto& title = lexicon[index].title;
    return fill(pattern, pattern.front() == '{' ? capitalize(title) : title);
  }
  if (u < params.title_rate + params.aspiring_rate) {
    return "Aspiring " + lexicon[any_title(rng)].title + ", studying hard";
  }
  if (u < params.title_rate + params.aspiring_rate + params.ambiguous_rate) {
    const auto a = any_title(rng);
    auto b = any_title(rng);
    if (b == a) b = (a + 1) % lexicon.size();
    return lexicon[a].title + " and " + lexicon[b].title;
  }
  std::uniform_int_distribution<std::size_t> pick(0, generic.size() - 1);
  return std::string(generic[pick(rng)]);
}

UserProfile make_profile(const SynthParams& params, const TitleLexicon& lexicon, std::string id, double ses,
                         std::uint64_t stream) {
  using namespace std::chrono;
  std::mt19937_64 rng(stream);
  std::normal_distribution<double> z;
  UserProfile p;
  p.user_id = std::move(id);
  p.statuses_count = 100 + static_cast<std::uint64_t>(std::exp(5.0 + z(rng)));
  p.followers_count = 25 + static_cast<std::uint64_t>(std::exp(4.0 + 1.2 * z(rng)));
  std::uniform_int_distribution<int> day(0, 1825);
  p.last_active = year_month_day{sys_days{2020y / February / 1} + days{day(rng)}};
  p.location_resolved = "US";
  p.description = describe(params, lexicon, ses, rng);
  return p;
}

}  // namespace

void SynthParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, "synth: " + what); };
  if (n_users < 10) fail("n_users must be at least 10");
  if (n_brands < kDomainCount) fail("n_brands must be at least 6 (one per domain)");
  if (!(proximity_weight >= 0) || !std::isfinite(proximity_weight)) fail("proximity_weight must be >= 0");
  if (!std::isfinite(base_rate)) fail("base_rate must be finite");
  if (!(popularity_spread >= 0) || !(activity_spread >= 0)) fail("spreads must be >= 0");
  double total = 0;
  for (double w : domain_weights) {
    if (!(w >= 0)) fail("domain weights must be >= 0");
    total += w;
  }
  if (!(total > 0)) fail("domain weights must not all be zero");
  for (double r : {title_rate, aspiring_rate, ambiguous_rate}) {
    if (!(r >= 0 && r <= 1)) fail("description rates must lie in [0,1]");
  }
  if (title_rate + aspiring_rate + ambiguous_rate > 1) fail("description rates sum above 1");
  if (!(title_noise >= 0)) fail("title_noise must be >= 0");
}

double follow_probability(const SynthParams& params, double user_ses, double activity, double brand_ses,
                          double popularity) {
  const double d = user_ses - brand_ses;
  const double distance = params.link == ProximityLink::Quadratic ? d * d : std::fabs(d);
  const double eta = params.base_rate + activity + popularity - params.proximity_weight * distance;
  return 1.0 / (1.0 + std::exp(-eta));
}

TitleLexicon builtin_lexicon() {
  const std::vector<std::tuple<std::string, int, double>> rows{
      {"physician", 1, 210000}, {"lawyer", 1, 150000},     {"architect", 2, 95000}, {"accountant", 2, 82000},
      {"teacher", 3, 64000},    {"electrician", 4, 60000}, {"plumber", 5, 56000},   {"mechanic", 5, 48000},
      {"hairdresser", 6, 36000}, {"cashier", 7, 28000},    {"waiter", 8, 26000},    {"cleaner", 9, 25000}};
  TitleLexicon lexicon;
  for (const auto& [title, cls, salary] : rows) lexicon.push_back({title, cls, salary, {"aspiring " + title}});
  return lexicon;
}

SynthData generate(const SynthParams& params) {
  params.validate();
  SynthData data;
  data.lexicon = builtin_lexicon();
  const std::size_t n_brands = params.n_brands;
  const std::size_t n_users = params.n_users;
  const std::size_t total_users = n_users + params.duplicate_users;

  auto& truth = data.truth;
  truth.brand_ses.resize(n_brands);
  truth.brand_popularity.resize(n_brands);
  {
    std::mt19937_64 rng(mix_seed(params.seed, kBrandStream));
    std::normal_distribution<double> z;
    std::discrete_distribution<std::size_t> domain(params.domain_weights.begin(), params.domain_weights.end());
    const auto width = digit_count(n_brands);
    for (std::size_t b = 0; b < n_brands; ++b) {
      const Domain d = b < kDomainCount ? kAllDomains[b] : kAllDomains[domain(rng)];
      truth.brand_ses[b] = z(rng);
      truth.brand_popularity[b] = params.popularity_spread * z(rng);
      const auto id = padded('b', b, width);
      const auto followers = static_cast<std::uint64_t>(std::llround(20000.0 * std::exp(truth.brand_popularity[b])));
      data.catalog.add({id, "brand_" + id.substr(1), d, followers});
      truth.brand_ids.push_back(id);
    }
  }

  std::vector<UserDraw> draws(n_users);
  std::atomic<bool> exhausted{false};
  const auto width = digit_count(total_users);

#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t ui = 0; ui < static_cast<std::ptrdiff_t>(n_users); ++ui) {
    if (exhausted.load(std::memory_order_relaxed)) continue;
    const auto u = static_cast<std::size_t>(ui);
    auto& draw = draws[u];
    std::vector<double> prob(n_brands);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      std::mt19937_64 rng(mix_seed(params.seed, kUserStream, (static_cast<std::uint64_t>(u) << 12) | attempt));
      std::normal_distribution<double> z;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      draw.ses = z(rng);
      draw.activity = params.activity_spread * z(rng);
      draw.expected = 0;
      draw.brands.clear();
      for (std::size_t b = 0; b < n_brands; ++b) {
        prob[b] = follow_probability(params, draw.ses, draw.activity, truth.brand_ses[b], truth.brand_popularity[b]);
        draw.expected += prob[b];
      }
      for (std::size_t b = 0; b < n_brands; ++b) {
        if (unit(rng) < prob[b]) draw.brands.push_back(static_cast<std::uint32_t>(b));
      }
      if (attempt == 0) draw.first_expected = draw.expected;
      draw.attempts = attempt + 1;
      if (!draw.brands.empty()) break;
    }
    if (draw.brands.empty()) exhausted = true;
    draw.profile = make_profile(params, data.lexicon, padded('u', u, width), draw.ses,
                                mix_seed(params.seed, kProfileStream, u));
  }

  if (exhausted) {
    throw Error(ErrorKind::DegenerateParams,
                "synth: a user drew no follows in " + std::to_string(kMaxAttempts) + " attempts");
  }
  double first_expected = 0;
  for (const auto& d : draws) first_expected += d.first_expected;
  first_expected /= static_cast<double>(n_users);
  if (first_expected < 1.0) {
    throw Error(ErrorKind::DegenerateParams,
                "synth: expected follows per user is " + csv::format_double(first_expected) + " (< 1)");
  }

  std::vector<std::pair<std::string, std::string>> pairs;
  auto emit = [&](const std::string& user, const UserDraw& d) {
    for (auto b : d.brands) pairs.emplace_back(user, truth.brand_ids[b]);
    truth.user_ids.push_back(user);
    truth.user_ses.push_back(d.ses);
    truth.user_activity.push_back(d.activity);
    truth.expected_edges += d.expected;
  };
  for (std::size_t u = 0; u < n_users; ++u) {
    emit(draws[u].profile.user_id, draws[u]);
    truth.resampled_users += draws[u].attempts > 1;
    data.profiles.add(draws[u].profile);
  }
  for (std::size_t k = 0; k < params.duplicate_users; ++k) {
    const auto& source = draws[k % n_users];
    const auto id = padded('u', n_users + k, width);
    emit(id, source);
    auto profile = source.profile;
    profile.user_id = id;
    data.profiles.add(std::move(profile));
  }
  data.edges = make_edge_store(pairs, data.catalog);
  return data;
}

void save_synth(const std::filesystem::path& dir, const SynthData& data) {
  std::filesystem::create_directories(dir);
  save_brand_catalog(dir / "brands.csv", data.catalog);
  save_edges(dir / "edges.csv", data.edges);
  save_user_profiles(dir / "profiles.csv", data.profiles);
  save_lexicon(dir / "lexicon.csv", data.lexicon);
  auto write_truth = [](const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const std::vector<double>& ses, const std::vector<double>& offset, std::string_view offset_name) {
    csv::Writer w(path);
    w.write_row({"id", "ses", offset_name});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      w.write_row({ids[i], csv::format_double(ses[i]), csv::format_double(offset[i])});
    }
    w.close();
  };
  const auto& t = data.truth;
  write_truth(dir / "truth_users.csv", t.user_ids, t.user_ses, t.user_activity, "activity_offset");
  write_truth(dir / "truth_brands.csv", t.brand_ids, t.brand_ses, t.brand_popularity, "popularity_offset");
}

LatentTable load_truth(const std::filesystem::path& path) {
  csv::Reader reader(path);
  const auto header = reader.read_header();
  if (header.size() < 2 || header[0] != "id" || header[1] != "ses") {
    throw Error(ErrorKind::MalformedRow, path.string() + ": expected header id,ses,...", 1);
  }
  LatentTable table;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    double v = 0;
    if (fields.size() < 2 || !csv::parse_double(fields[1], v)) {
      throw Error(ErrorKind::MalformedRow, path.string() + ":" + std::to_string(reader.record_line()) + ": bad row",
                  reader.record_line());
    }
    table.ids.push_back(fields[0]);
    table.values.push_back(v);
  }
  return table;
}

RecoveryResult evaluate_recovery(const ScoreTable& estimates, const LatentTable& truth, double min_coverage) {
  if (truth.ids.size() != truth.values.size()) throw Error(ErrorKind::LengthMismatch, "truth ids and values differ");
  std::unordered_map<std::string_view, double> est;
  est.reserve(estimates.entries.size());
  for (const auto& e : estimates.entries) est.emplace(e.entity_id, e.ses);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    auto it = est.find(truth.ids[i]);
    if (it == est.end() || !std::isfinite(it->second)) continue;
    x.push_back(it->second);
    y.push_back(truth.values[i]);
  }
  RecoveryResult r;
  r.truth_size = truth.ids.size();
  r.matched = x.size();
  r.coverage = truth.ids.empty() ? 0.0 : static_cast<double>(x.size()) / static_cast<double>(truth.ids.size());
  if (r.coverage < min_coverage) {
    throw Error(ErrorKind::InsufficientCoverage, "estimates cover " + std::to_string(r.matched) + " of " +
                                                     std::to_string(r.truth_size) + " truth entities");
  }
  r.correlation = spearman(x, y);
  r.signed_rho = r.correlation.rho;
  r.correlation.rho = std::fabs(r.signed_rho);
  r.correlation.method = std::string("absolute spearman; orientation ") + (r.signed_rho < 0 ? "reversed" : "aligned");
  return r;
}

}  // namespace sesmap
