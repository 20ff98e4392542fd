#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "oracle/stats_reference.hpp"
#include "sesmap/error.hpp"
#include "sesmap/stats.hpp"

namespace sesmap {
namespace {

using Vec = std::vector<double>;

TEST(MidRanks, TiesShareAverage) {
  Vec v{10, 20, 20, 5, 20};
  EXPECT_EQ(mid_ranks(v), (Vec{2, 4, 4, 1, 4}));
}

TEST(Spearman, PerfectMonotone) {
  Vec x{1, 2, 3};
  EXPECT_EQ(spearman(x, Vec{2, 4, 6}).rho, 1.0);
  EXPECT_EQ(spearman(x, Vec{2, 4, 6}).p_value, 0.0);
  EXPECT_EQ(spearman(x, Vec{6, 4, 2}).rho, -1.0);
}

TEST(Spearman, TieExample) {
  const auto r = spearman(Vec{1, 2, 2, 3}, Vec{1, 3, 2, 4});
  EXPECT_NEAR(r.rho, 4.5 / std::sqrt(22.5), 1e-15);
  EXPECT_NEAR(r.rho, 0.9486832980505139, 1e-15);
  EXPECT_NEAR(r.p_value, 0.05131670194948612, 1e-12);
  EXPECT_EQ(r.n, 4u);
}

TEST(Spearman, FrozenReferenceValues) {
  const auto r = spearman(Vec{17, 86, 60, 77, 47, 3, 70, 47, 88, 92}, Vec{70, 29, 85, 61, 80, 34, 60, 31, 73, 66});
  EXPECT_NEAR(r.rho, 0.024316221747202587, 1e-14);
  EXPECT_NEAR(r.p_value, 0.9468397049085097, 1e-12);
}

TEST(Spearman, ExactSmallSample) {
  Vec x{1, 2, 3, 4, 5, 6, 7};
  Vec y{2, 1, 4, 3, 7, 5, 6};
  const auto approx = spearman(x, y);
  EXPECT_NEAR(approx.rho, 0.8214285714285715, 1e-14);
  EXPECT_NEAR(approx.p_value, 0.023448808345691505, 1e-12);
  const auto exact = spearman(x, y, {.exact_small_n = true});
  EXPECT_NEAR(exact.p_value, 172.0 / 5040.0, 1e-15);
  EXPECT_NE(exact.method, approx.method);
}

TEST(Spearman, Errors) {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind_of([] { spearman(Vec{1, 2, 3}, Vec{1, 2}); }), ErrorKind::LengthMismatch);
  EXPECT_EQ(kind_of([] { spearman(Vec{1, 2}, Vec{1, 2}); }), ErrorKind::TooFewObservations);
  EXPECT_EQ(kind_of([] { spearman(Vec{1, 1, 1}, Vec{1, 2, 3}); }), ErrorKind::ZeroVariance);
  EXPECT_EQ(kind_of([] { spearman(Vec{1, 2, 3}, Vec{5, 5, 5}); }), ErrorKind::ZeroVariance);
  EXPECT_EQ(kind_of([] { spearman(Vec{1, NAN, 3}, Vec{1, 2, 3}); }), ErrorKind::InvalidArgument);
}

TEST(Spearman, SymmetricAndMonotoneInvariant) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 50; ++rep) {
    Vec x(40), y(40), ex(40);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = z(rng);
      y[i] = x[i] + z(rng);
      ex[i] = std::exp(x[i]);
    }
    EXPECT_EQ(spearman(x, y).rho, spearman(y, x).rho);
    EXPECT_EQ(spearman(x, y).rho, spearman(ex, y).rho);
  }
}

TEST(Spearman, PValueMonotoneInRho) {
  double prev = 1.0;
  for (double rho = 0.0; rho < 1.0; rho += 0.01) {
    const double t = rho * std::sqrt(28.0 / (1 - rho * rho));
    const double p = oracle::t_two_sided(t, 28.0);
    EXPECT_LE(p, prev);
    EXPECT_GE(p, 0.0);
    prev = p;
  }
}

TEST(Spearman, MatchesReferenceOnRandomFixtures) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(3, 60);
  std::uniform_int_distribution<int> coarse(0, 6);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto n = static_cast<std::size_t>(len(rng));
    Vec x(n), y(n);
    const bool tied = rep % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = tied ? coarse(rng) : z(rng);
      y[i] = tied ? coarse(rng) + (rep % 4 == 0 ? x[i] : 0) : z(rng) + 0.3 * x[i];
    }
    x[0] = -100;  // guarantees nonconstant vectors
    y[n - 1] = 100;
    const auto got = spearman(x, y);
    const auto want = oracle::spearman_reference(x, y);
    ASSERT_NEAR(got.rho, want.rho, 1e-10) << "fixture " << rep;
    ASSERT_NEAR(got.p_value, want.p, 1e-10) << "fixture " << rep;
    ASSERT_GE(got.p_value, 0.0);
    ASSERT_LE(got.p_value, 1.0);
  }
}

TEST(WelchT, IdenticalGroups) {
  Vec a{1.5, 2.5, 3.0, 4.0};
  const auto r = welch_t(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(WelchT, ConstantGroupsAreFlagged) {
  const auto r = welch_t(Vec{0, 0}, Vec{1, 1});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.t, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.p, 0.0);
  const auto same = welch_t(Vec{3, 3}, Vec{3, 3, 3});
  EXPECT_TRUE(same.degenerate);
  EXPECT_EQ(same.p, 1.0);
}

TEST(WelchT, FrozenReferenceValues) {
  const auto r = welch_t(Vec{2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8}, Vec{6.1, 5.2, 7.7, 4.9, 6.6});
  EXPECT_NEAR(r.t, -3.9010479442010135, 1e-12);
  EXPECT_NEAR(r.df, 9.505212792205343, 1e-10);
  EXPECT_NEAR(r.p, 0.003255002006633112, 1e-12);
}

TEST(WelchT, TooFewObservations) {
  EXPECT_THROW(welch_t(Vec{1}, Vec{1, 2}), Error);
  try {
    welch_t(Vec{1, 2}, Vec{1});
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewObservations);
  }
}

TEST(WelchT, MatchesReferenceOnRandomFixtures) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> len(2, 40);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> scale(0.2, 5.0);
  for (int rep = 0; rep < 1000; ++rep) {
    Vec a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    const double sa = scale(rng), sb = scale(rng), shift = z(rng);
    for (auto& v : a) v = sa * z(rng);
    for (auto& v : b) v = shift + sb * z(rng);
    if (rep % 5 == 0) {
      for (auto& v : a) v = std::round(v);
      for (auto& v : b) v = std::round(v);
      a[0] = -50;
      b[0] = 50;
    }
    const auto got = welch_t(a, b);
    const auto want = oracle::welch_reference(a, b);
    ASSERT_NEAR(got.t, want.t, 1e-10 * std::max(1.0, std::fabs(want.t))) << "fixture " << rep;
    ASSERT_NEAR(got.df, want.df, 1e-10 * std::max(1.0, want.df)) << "fixture " << rep;
    ASSERT_NEAR(got.p, want.p, 1e-10) << "fixture " << rep;
  }
}

TEST(Anova, FrozenReferenceValues) {
  std::vector<Vec> groups{{2.1, 3.4, 1.9, 5.6}, {4.4, 3.3, 2.8, 3.9, 4.0}, {6.1, 5.2, 7.7}, {4.9, 6.6, 5.0, 5.5}};
  const auto r = one_way_anova(groups);
  EXPECT_NEAR(r.F, 6.190355882737296, 1e-12);
  EXPECT_NEAR(r.p, 0.00873244822695475, 1e-12);
  EXPECT_EQ(r.df1, 3.0);
  EXPECT_EQ(r.df2, 12.0);
}

TEST(Anova, TwoGroupsEqualsPooledTSquared) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<Vec> g(2);
    g[0].resize(5 + rep % 7);
    g[1].resize(4 + rep % 5);
    for (auto& v : g[0]) v = z(rng);
    for (auto& v : g[1]) v = 0.5 + z(rng);
    const auto f = one_way_anova(g);
    const auto t = pooled_t(g[0], g[1]);
    ASSERT_NEAR(f.F, t.t * t.t, 1e-10 * std::max(1.0, f.F));
    ASSERT_NEAR(f.p, t.p, 1e-10);
  }
}

TEST(Anova, Errors) {
  std::vector<Vec> constant{{2, 2, 2}, {2, 2}, {2, 2}};
  try {
    one_way_anova(constant);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVariance);
  }
  std::vector<Vec> one{{1, 2, 3}};
  try {
    one_way_anova(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewGroups);
  }
}

TEST(Anova, MatchesReferenceOnRandomFixtures) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> ngroups(2, 6);
  std::uniform_int_distribution<int> len(2, 30);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<Vec> groups(static_cast<std::size_t>(ngroups(rng)));
    for (std::size_t g = 0; g < groups.size(); ++g) {
      groups[g].resize(static_cast<std::size_t>(len(rng)));
      for (auto& v : groups[g]) v = 0.3 * static_cast<double>(g) + z(rng);
      if (rep % 3 == 0) {
        for (auto& v : groups[g]) v = std::round(2 * v) / 2;
      }
    }
    groups[0][0] = 7.25;
    groups[0][1] = -7.25;
    const auto got = one_way_anova(groups);
    const auto want = oracle::anova_reference(groups);
    ASSERT_NEAR(got.F, want.F, 1e-10 * std::max(1.0, want.F)) << "fixture " << rep;
    ASSERT_NEAR(got.p, want.p, 1e-10) << "fixture " << rep;
  }
}

TEST(Median, OddEven) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

ScoreTable table_of(const std::vector<std::pair<std::string, double>>& rows) {
  ScoreTable t;
  for (const auto& [id, ses] : rows) t.entries.push_back({id, ses, ses});
  return t;
}

TEST(GroupMedianSe, IdenticalScores) {
  auto t = table_of({{"a", 2}, {"b", 2}, {"c", 2}, {"d", 2}});
  std::map<std::string, std::string> g{{"a", "x"}, {"b", "x"}, {"c", "x"}, {"d", "x"}};
  const auto stats = group_median_se(t, g, {.replicates = 200, .seed = 1});
  EXPECT_EQ(stats.at("x").median, 2.0);
  EXPECT_EQ(stats.at("x").se_median, 0.0);
  EXPECT_TRUE(stats.at("x").small);
}

TEST(GroupMedianSe, Reproducible) {
  auto t = table_of({{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}, {"e", 5}});
  std::map<std::string, std::string> g{{"a", "x"}, {"b", "x"}, {"c", "x"}, {"d", "x"}, {"e", "x"}};
  const auto first = group_median_se(t, g, {.replicates = 1000, .seed = 42});
  const auto second = group_median_se(t, g, {.replicates = 1000, .seed = 42});
  EXPECT_EQ(first.at("x").se_median, second.at("x").se_median);
  EXPECT_GT(first.at("x").se_median, 0.0);
  EXPECT_EQ(first.at("x").median, 3.0);
}

TEST(GroupMedianSe, UnknownEntity) {
  auto t = table_of({{"a", 1}});
  std::map<std::string, std::string> g{{"zz", "x"}};
  try {
    group_median_se(t, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownEntity);
  }
}

TEST(GroupMedianSe, NearAnalyticLargeSampleSe) {
  std::mt19937_64 rng(314);
  std::normal_distribution<double> z;
  ScoreTable t;
  std::map<std::string, std::string> assignment;
  std::vector<std::pair<std::size_t, double>> design;
  for (int g = 0; g < 50; ++g) {
    const std::size_t n = 100 + 10 * static_cast<std::size_t>(g);
    const double sigma = 0.5 + 0.05 * g;
    design.emplace_back(n, sigma);
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = "g" + std::to_string(g) + "_" + std::to_string(i);
      const double v = sigma * z(rng);
      t.entries.push_back({id, v, v});
      assignment.emplace(id, "group" + std::to_string(100 + g));
    }
  }
  const auto stats = group_median_se(t, assignment, {.replicates = 1000, .seed = 8});
  ASSERT_EQ(stats.size(), 50u);
  // A single bootstrap median se has relative noise of order n^(-1/4), so the
  // bound applies to the ratio averaged over the fixture.
  double ratio_sum = 0;
  for (int g = 0; g < 50; ++g) {
    const auto& [n, sigma] = design[static_cast<std::size_t>(g)];
    const double analytic = 1.2533 * sigma / std::sqrt(static_cast<double>(n));
    const auto& s = stats.at("group" + std::to_string(100 + g));
    EXPECT_EQ(s.n, n);
    EXPECT_GT(s.se_median, 0.0);
    ratio_sum += s.se_median / analytic;
  }
  EXPECT_NEAR(ratio_sum / 50, 1.0, 0.15);
}

TEST(Bootstrap, IndependentOfThreadCount) {
  Vec v;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int i = 0; i < 300; ++i) v.push_back(z(rng));
  const double a = bootstrap_median_se(v, 500, 9);
  const double b = bootstrap_median_se(v, 500, 9);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, bootstrap_median_se(v, 500, 10));
}

}  // namespace
}  // namespace sesmap
