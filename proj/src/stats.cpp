#include "sesmap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "sesmap/error.hpp"

namespace sesmap {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": non-finite value");
  }
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Unbiased sample variance.
double variance_of(std::span<const double> v, double mean) {
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

double two_sided_t_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t_distribution<double> dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

double spearman_p_from_rho(double rho, std::size_t n) {
  if (std::fabs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / ((1.0 + rho) * (1.0 - rho)));
  return two_sided_t_p(t, df);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(a) ^ b) ^ c);
}

std::vector<double> mid_ranks(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank ((i+1) + j) / 2
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "pearson: lengths differ");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw Error(ErrorKind::ZeroVariance, "correlation of a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y, const SpearmanOptions& options) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::LengthMismatch,
                "spearman: lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()) + " differ");
  }
  if (x.size() < 3) throw Error(ErrorKind::TooFewObservations, "spearman: need at least 3 pairs");
  require_finite(x, "spearman");
  require_finite(y, "spearman");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  CorrelationResult out;
  out.n = x.size();
  out.rho = pearson(rx, ry);
  if (options.exact_small_n && out.n <= 10) {
    out.p_value = spearman_exact_p(x, y);
    out.method = "spearman mid-rank; exact permutation p";
  } else {
    out.p_value = spearman_p_from_rho(out.rho, out.n);
    out.method = "spearman mid-rank; t approximation p (df = n-2)";
  }
  return out;
}

double spearman_exact_p(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "spearman_exact_p: lengths differ");
  if (x.size() < 3 || x.size() > 10) {
    throw Error(ErrorKind::InvalidArgument, "spearman_exact_p: requires 3 <= n <= 10");
  }
  const auto rx = mid_ranks(x);
  auto ry = mid_ranks(y);
  const double observed = std::fabs(pearson(rx, ry));
  std::sort(ry.begin(), ry.end());
  std::size_t hits = 0, total = 0;
  do {
    ++total;
    if (std::fabs(pearson(rx, ry)) >= observed - 1e-12) ++hits;
  } while (std::next_permutation(ry.begin(), ry.end()));
  // Tied y ranks make next_permutation skip duplicate arrangements; each
  // distinct arrangement is equally likely, so the ratio is unaffected.
  return static_cast<double>(hits) / static_cast<double>(total);
}

TTestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorKind::TooFewObservations, "welch_t: each group needs n >= 2");
  require_finite(a, "welch_t");
  require_finite(b, "welch_t");
  const double ma = mean_of(a), mb = mean_of(b);
  const double qa = variance_of(a, ma) / static_cast<double>(a.size());
  const double qb = variance_of(b, mb) / static_cast<double>(b.size());
  TTestResult out;
  const double se2 = qa + qb;
  if (se2 == 0) {
    out.degenerate = true;
    out.df = static_cast<double>(a.size() + b.size() - 2);
    if (ma == mb) {
      out.t = 0;
      out.p = 1;
    } else {
      out.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      out.p = 0;
    }
    return out;
  }
  out.t = (ma - mb) / std::sqrt(se2);
  out.df = se2 * se2 /
           (qa * qa / static_cast<double>(a.size() - 1) + qb * qb / static_cast<double>(b.size() - 1));
  out.p = two_sided_t_p(out.t, out.df);
  return out;
}

TTestResult pooled_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorKind::TooFewObservations, "pooled_t: each group needs n >= 2");
  require_finite(a, "pooled_t");
  require_finite(b, "pooled_t");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double pooled = ((na - 1) * variance_of(a, ma) + (nb - 1) * variance_of(b, mb)) / (na + nb - 2);
  TTestResult out;
  out.df = na + nb - 2;
  const double se2 = pooled * (1 / na + 1 / nb);
  if (se2 == 0) {
    out.degenerate = true;
    out.t = ma == mb ? 0.0
                     : (ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity());
    out.p = ma == mb ? 1.0 : 0.0;
    return out;
  }
  out.t = (ma - mb) / std::sqrt(se2);
  out.p = two_sided_t_p(out.t, out.df);
  return out;
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw Error(ErrorKind::TooFewGroups, "one_way_anova: need at least 2 groups");
  std::size_t total = 0;
  double grand = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorKind::TooFewObservations, "one_way_anova: each group needs n >= 2");
    require_finite(g, "one_way_anova");
    total += g.size();
    grand += std::accumulate(g.begin(), g.end(), 0.0);
  }
  grand /= static_cast<double>(total);
  double between = 0, within = 0;
  for (const auto& g : groups) {
    const double m = mean_of(g);
    between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) within += (x - m) * (x - m);
  }
  if (within == 0) throw Error(ErrorKind::ZeroVariance, "one_way_anova: no within-group variation");
  AnovaResult out;
  out.df1 = static_cast<double>(groups.size() - 1);
  out.df2 = static_cast<double>(total - groups.size());
  out.F = (between / out.df1) / (within / out.df2);
  boost::math::fisher_f_distribution<double> dist(out.df1, out.df2);
  out.p = boost::math::cdf(boost::math::complement(dist, out.F));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::TooFewObservations, "median of an empty sample");
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double bootstrap_median_se(std::span<const double> values, std::size_t replicates, std::uint64_t seed,
                           std::uint64_t stream) {
  if (values.empty()) throw Error(ErrorKind::TooFewObservations, "bootstrap of an empty sample");
  if (replicates < 2) throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least 2 replicates");
  std::vector<double> medians(replicates);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bb = 0; bb < static_cast<std::ptrdiff_t>(replicates); ++bb) {
    std::mt19937_64 rng(mix_seed(seed, stream, static_cast<std::uint64_t>(bb)));
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> sample(values.size());
    for (auto& s : sample) s = values[pick(rng)];
    medians[static_cast<std::size_t>(bb)] = median(std::move(sample));
  }
  const double m = mean_of(medians);
  return std::sqrt(variance_of(medians, m));
}

GroupStats group_median_se(const ScoreTable& scores, const std::map<std::string, std::string>& assignment,
                           const BootstrapOptions& options) {
  std::unordered_map<std::string_view, double> ses;
  ses.reserve(scores.entries.size());
  for (const auto& e : scores.entries) ses.emplace(e.entity_id, e.ses);

  std::map<std::string, std::vector<double>> members;
  for (const auto& [entity, group] : assignment) {
    auto it = ses.find(entity);
    if (it == ses.end()) throw Error(ErrorKind::UnknownEntity, "no score for entity '" + entity + "'");
    members[group].push_back(it->second);
  }

  GroupStats out;
  std::uint64_t stream = 0;
  for (const auto& [group, values] : members) {
    GroupSummary s;
    s.n = values.size();
    s.median = median(values);
    s.mean = mean_of(values);
    s.se_median = values.size() < 2 ? 0.0 : bootstrap_median_se(values, options.replicates, options.seed, stream);
    s.small = s.n < options.min_group_size;
    out.emplace(group, s);
    ++stream;
  }
  return out;
}

}  // namespace sesmap
