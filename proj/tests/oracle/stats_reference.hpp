#pragma once

// Straightforward reference statistics. Ranks by O(n^2) counting, moments in
// long double, tail probabilities through the regularized incomplete beta.

#include <cmath>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

namespace sesmap::oracle {

// Two-sided Student t tail: P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
inline double t_two_sided(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return boost::math::ibeta(df / 2, 0.5, df / (df + t * t));
}

// Upper F tail: P(F >= f) = I_{d2/(d2+d1 f)}(d2/2, d1/2).
inline double f_upper(double f, double d1, double d2) { return boost::math::ibeta(d2 / 2, d1 / 2, d2 / (d2 + d1 * f)); }

inline std::vector<double> count_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1) / 2;
  }
  return r;
}

struct SpearmanRef {
  double rho;
  double p;
};

inline SpearmanRef spearman_reference(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = count_ranks(x);
  const auto ry = count_ranks(y);
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += static_cast<long double>(rx[i]) * rx[i];
    syy += static_cast<long double>(ry[i]) * ry[i];
    sxy += static_cast<long double>(rx[i]) * ry[i];
  }
  const long double cov = sxy - sx * sy / n;
  const long double vx = sxx - sx * sx / n;
  const long double vy = syy - sy * sy / n;
  const double rho = static_cast<double>(cov / std::sqrt(vx * vy));
  const double df = static_cast<double>(n) - 2;
  const double p = std::fabs(rho) >= 1 ? 0.0 : t_two_sided(rho * std::sqrt(df / (1 - rho * rho)), df);
  return {rho, p};
}

struct WelchRef {
  double t;
  double df;
  double p;
};

inline WelchRef welch_reference(const std::vector<double>& a, const std::vector<double>& b) {
  auto moments = [](const std::vector<double>& v, long double& mean, long double& var) {
    long double s = 0, ss = 0;
    for (double x : v) {
      s += x;
      ss += static_cast<long double>(x) * x;
    }
    const long double n = static_cast<long double>(v.size());
    mean = s / n;
    var = (ss - s * s / n) / (n - 1);
  };
  long double ma, va, mb, vb;
  moments(a, ma, va);
  moments(b, mb, vb);
  const long double qa = va / a.size(), qb = vb / b.size();
  const double t = static_cast<double>((ma - mb) / std::sqrt(qa + qb));
  const double df = static_cast<double>((qa + qb) * (qa + qb) / (qa * qa / (a.size() - 1) + qb * qb / (b.size() - 1)));
  return {t, df, t_two_sided(t, df)};
}

struct AnovaRef {
  double F;
  double p;
};

// Between sum of squares as total minus within.
inline AnovaRef anova_reference(const std::vector<std::vector<double>>& groups) {
  long double s = 0, ss = 0, n = 0, within = 0;
  for (const auto& g : groups) {
    long double gs = 0, gss = 0;
    for (double x : g) {
      gs += x;
      gss += static_cast<long double>(x) * x;
    }
    within += gss - gs * gs / g.size();
    s += gs;
    ss += gss;
    n += g.size();
  }
  const long double total = ss - s * s / n;
  const long double between = total - within;
  const double d1 = static_cast<double>(groups.size() - 1);
  const double d2 = static_cast<double>(n) - static_cast<double>(groups.size());
  const double F = static_cast<double>((between / d1) / (within / d2));
  return {F, f_upper(F, d1, d2)};
}

}  // namespace sesmap::oracle
