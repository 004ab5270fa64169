#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "scimetric/errors.hpp"

namespace scimetric::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Population variance (divides by n).
inline double variance_pop(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size());
}

/// Sample variance (divides by n-1); requires n >= 2.
inline double variance_sample(std::span<const double> v) {
  if (v.size() < 2) throw ComputeError("sample variance requires at least 2 values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double median_sorted(std::span<const double> sorted) {
  const std::size_t n = sorted.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return median_sorted(v);
}

enum class QuantileMethod {
  kType6,  // SPSS weighted average: h = (n+1)p
  kType7,  // R default: h = (n-1)p + 1
};

/// Quantile of a sorted vector. Type-6 interpolates positions (n+1)p, type-7 (n-1)p+1.
inline double quantile_sorted(std::span<const double> sorted, double p,
                              QuantileMethod method = QuantileMethod::kType6) {
  const std::size_t n = sorted.size();
  if (n == 0) throw ComputeError("quantile of empty vector");
  if (n == 1) return sorted[0];
  const double h = (method == QuantileMethod::kType6)
                       ? (static_cast<double>(n) + 1.0) * p
                       : (static_cast<double>(n) - 1.0) * p + 1.0;
  if (h <= 1.0) return sorted.front();
  if (h >= static_cast<double>(n)) return sorted.back();
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - std::floor(h);
  return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

inline double quantile(std::vector<double> v, double p,
                       QuantileMethod method = QuantileMethod::kType6) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p, method);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ComputeError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw ComputeError("pearson: need at least 2 points");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ComputeError("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

/// Fisher's variance-stabilizing transform, z = atanh(r). Infinite at |r| = 1.
inline double fisher_z(double r) { return std::atanh(r); }

/// Ranks in descending order (rank 1 = largest value), ties get the average rank.
inline std::vector<double> rank_descending(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// --- distribution tails ---------------------------------------------------

inline double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

inline double f_sf(double x, double df1, double df2) {
  if (x <= 0.0) return 1.0;
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, x));
}

/// Two-sided p-value of a t statistic.
inline double t_pvalue(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

inline double normal_cdf(double z) {
  static const boost::math::normal dist;
  return boost::math::cdf(dist, z);
}

inline double normal_quantile(double p) {
  static const boost::math::normal dist;
  return boost::math::quantile(dist, p);
}

// --- formatting ------------------------------------------------------------

/// Locale-independent, shortest representation that parses back to the same
/// double, so TSV intermediates round-trip exactly.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (x == static_cast<long long>(x) && std::fabs(x) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(x));
    return buf;
  }
  char buf[40];
  for (int precision = 10; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

}  // namespace scimetric::stats
