#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scimetric/corpus.hpp"
#include "scimetric/errors.hpp"
#include "scimetric/indicators.hpp"
#include "scimetric/stats.hpp"

namespace scimetric::inference {

// --- predictor importance (one-way ANOVA) -------------------------------------

struct AnovaResult {
  std::string indicator;
  double F = 0.0;
  double df_between = 0.0;
  double df_within = 0.0;
  double p = 1.0;
  double importance = 0.0;  // in [0,1]
};

enum class ImportanceScale {
  OneMinusP,    // 1 - p
  NegLog10P,    // min(1, -log10(p) / 10)
};

struct Anova {
  double F = 0.0, p = 1.0, df_between = 0.0, df_within = 0.0;
};

inline Anova oneway_anova(std::span<const double> values, std::span<const int> labels, int k) {
  const std::size_t n = values.size();
  if (labels.size() != n) throw ComputeError("anova: label/value length mismatch");
  std::vector<double> group_sum(k, 0.0);
  std::vector<int> group_n(k, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int g = labels[i] - 1;
    if (g < 0 || g >= k) throw ComputeError("anova: label out of range");
    group_sum[g] += values[i];
    ++group_n[g];
    total += values[i];
  }
  int groups_present = 0;
  for (int g = 0; g < k; ++g)
    if (group_n[g] > 0) ++groups_present;
  if (groups_present < 2) throw ComputeError("anova: need at least 2 non-empty groups");

  const double grand = total / static_cast<double>(n);
  double ssb = 0.0, ssw = 0.0;
  for (int g = 0; g < k; ++g) {
    if (group_n[g] == 0) continue;
    const double gm = group_sum[g] / group_n[g];
    ssb += group_n[g] * (gm - grand) * (gm - grand);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double gm = group_sum[labels[i] - 1] / group_n[labels[i] - 1];
    ssw += (values[i] - gm) * (values[i] - gm);
  }

  Anova out;
  out.df_between = groups_present - 1;
  out.df_within = static_cast<double>(n) - groups_present;
  if (out.df_within < 1) throw ComputeError("anova: no within-group degrees of freedom");
  if (ssb <= 0.0) {
    out.F = 0.0;
    out.p = 1.0;
    return out;
  }
  if (ssw <= 0.0) {
    out.F = std::numeric_limits<double>::infinity();
    out.p = 0.0;
    return out;
  }
  out.F = (ssb / out.df_between) / (ssw / out.df_within);
  out.p = stats::f_sf(out.F, out.df_between, out.df_within);
  return out;
}

inline double importance_from_p(double p, ImportanceScale scale) {
  if (scale == ImportanceScale::OneMinusP) return 1.0 - p;
  if (p <= 0.0) return 1.0;
  return std::min(1.0, -std::log10(p) / 10.0);
}

/// F-tests each indicator across clusters and rescales the evidence to [0,1].
/// Results come back sorted by importance (descending), ties broken by F.
inline std::vector<AnovaResult> predictor_importance(
    const std::vector<IndicatorVector>& rows, const std::vector<int>& assignments,
    ImportanceScale scale = ImportanceScale::OneMinusP) {
  if (rows.size() != assignments.size())
    throw ComputeError("predictor_importance: row/assignment mismatch");
  int k = 0;
  for (int a : assignments) k = std::max(k, a);
  if (k < 2) throw ComputeError("predictor_importance: need at least 2 clusters");

  std::vector<AnovaResult> out;
  out.reserve(kIndicatorCount);
  std::vector<double> col(rows.size());
  for (int j = 0; j < kIndicatorCount; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i].values[j];
    const Anova a = oneway_anova(col, assignments, k);
    AnovaResult r;
    r.indicator = indicator_names()[j];
    r.F = a.F;
    r.df_between = a.df_between;
    r.df_within = a.df_within;
    r.p = a.p;
    r.importance = (a.F == 0.0) ? 0.0 : importance_from_p(a.p, scale);
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const AnovaResult& a, const AnovaResult& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.F > b.F;
  });
  return out;
}

// --- Tamhane T2 post hoc --------------------------------------------------------

struct PairwiseComparison {
  int cluster_a = 0, cluster_b = 0;  // 1-based
  double mean_diff = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significant = false;
  bool skipped = false;
  std::string note;
};

struct PosthocResult {
  std::string indicator;
  double sidak_alpha = 0.0;
  std::vector<PairwiseComparison> pairs;
};

/// Pairwise Welch t comparisons without the equal-variance assumption,
/// Sidak-adjusted across the pairs of one indicator. Pairs involving a
/// single-member cluster are skipped (their variance is undefined).
inline std::vector<PosthocResult> tamhane_t2(const std::vector<IndicatorVector>& rows,
                                             const std::vector<int>& assignments,
                                             double alpha = 0.001) {
  if (rows.size() != assignments.size()) throw ComputeError("tamhane_t2: row/assignment mismatch");
  int k = 0;
  for (int a : assignments) k = std::max(k, a);
  if (k < 2) throw ComputeError("tamhane_t2: need at least 2 clusters");

  std::vector<PosthocResult> out;
  for (int j = 0; j < kIndicatorCount; ++j) {
    std::vector<std::vector<double>> groups(k);
    for (std::size_t i = 0; i < rows.size(); ++i)
      groups[assignments[i] - 1].push_back(rows[i].values[j]);

    PosthocResult res;
    res.indicator = indicator_names()[j];
    int m = 0;  // testable pairs for the Sidak correction
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        if (groups[a].size() >= 2 && groups[b].size() >= 2) ++m;
    res.sidak_alpha = (m > 0) ? 1.0 - std::pow(1.0 - alpha, 1.0 / m) : alpha;

    for (int a = 0; a < k; ++a) {
      for (int b = a + 1; b < k; ++b) {
        PairwiseComparison cmp;
        cmp.cluster_a = a + 1;
        cmp.cluster_b = b + 1;
        if (groups[a].size() < 2 || groups[b].size() < 2) {
          cmp.skipped = true;
          cmp.note = "cluster with fewer than 2 members; variance undefined";
          res.pairs.push_back(cmp);
          continue;
        }
        const double na = static_cast<double>(groups[a].size());
        const double nb = static_cast<double>(groups[b].size());
        const double va = stats::variance_sample(groups[a]);
        const double vb = stats::variance_sample(groups[b]);
        cmp.mean_diff = stats::mean(groups[a]) - stats::mean(groups[b]);
        const double se2 = va / na + vb / nb;
        if (se2 <= 0.0) {
          if (cmp.mean_diff == 0.0) {
            cmp.t = 0.0;
            cmp.p = 1.0;
          } else {
            cmp.t = std::numeric_limits<double>::infinity();
            cmp.p = 0.0;
            cmp.significant = true;
          }
          res.pairs.push_back(cmp);
          continue;
        }
        cmp.t = cmp.mean_diff / std::sqrt(se2);
        // Welch-Satterthwaite degrees of freedom
        cmp.df = se2 * se2 /
                 ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
        cmp.p = stats::t_pvalue(cmp.t, cmp.df);
        cmp.significant = cmp.p < res.sidak_alpha;
        res.pairs.push_back(cmp);
      }
    }
    out.push_back(std::move(res));
  }
  return out;
}

// --- seniority odds -----------------------------------------------------------------

struct OddsCell {
  Seniority seniority = Seniority::PhD;
  int cluster = 0;  // 1-based
  long a = 0, b = 0, c = 0, d = 0;
  std::optional<double> odds_ratio;  // empty when b, c or d is 0
  double pct_within_seniority = 0.0;
};

struct OddsTable {
  int k = 0;
  std::vector<OddsCell> cells;  // seniority-major, cluster-minor order
};

inline std::optional<double> odds_ratio(long a, long b, long c, long d) {
  if (b == 0 || c == 0 || d == 0) return std::nullopt;
  return (static_cast<double>(a) / b) / (static_cast<double>(c) / d);
}

/// 2x2 cross-tab per (seniority, cluster): a = in both, b = seniority only,
/// c = cluster only, d = neither.
inline OddsTable odds_ratios(const std::vector<Seniority>& seniorities,
                             const std::vector<int>& assignments) {
  if (seniorities.size() != assignments.size())
    throw ComputeError("odds_ratios: seniority/assignment mismatch");
  const long n = static_cast<long>(seniorities.size());
  OddsTable table;
  for (int a : assignments) table.k = std::max(table.k, a);
  for (Seniority s : all_seniorities()) {
    for (int cl = 1; cl <= table.k; ++cl) {
      OddsCell cell;
      cell.seniority = s;
      cell.cluster = cl;
      for (long i = 0; i < n; ++i) {
        const bool in_s = seniorities[i] == s;
        const bool in_c = assignments[i] == cl;
        if (in_s && in_c)
          ++cell.a;
        else if (in_s)
          ++cell.b;
        else if (in_c)
          ++cell.c;
        else
          ++cell.d;
      }
      cell.odds_ratio = odds_ratio(cell.a, cell.b, cell.c, cell.d);
      cell.pct_within_seniority =
          (cell.a + cell.b > 0) ? 100.0 * cell.a / static_cast<double>(cell.a + cell.b) : 0.0;
      table.cells.push_back(cell);
    }
  }
  return table;
}

// --- proportional-odds ordinal regression ----------------------------------------------

struct CoefficientStat {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double wald_chi2 = 0.0;
  double p = 1.0;
  double odds_ratio = 1.0;
  double ci_low = 0.0, ci_high = 0.0;
};

struct OrdinalFit {
  int n = 0;
  int k = 0;                       // outcome levels
  std::vector<double> thresholds;  // k-1, strictly increasing
  std::vector<double> threshold_se;
  std::vector<CoefficientStat> coefficients;
  double ll_model = 0.0;
  double ll_null = 0.0;
  double mcfadden = 0.0, cox_snell = 0.0, nagelkerke = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::string diagnostic;
};

struct OrdinalOptions {
  int max_iterations = 100;
  double ll_tolerance = 1e-8;
  double grad_tolerance = 1e-6;  // max-norm of the score at convergence
  double slope_limit = 15.0;     // larger fitted slopes signal separation
  double ci_level = 0.95;
};

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Cumulative-logit log-likelihood with optional per-threshold slopes.
/// slopes is (k-1) x p; the proportional model repeats one row.
struct CumLogitEval {
  double ll = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

/// Evaluates loglik (+ gradient/Hessian when requested) of the cumulative
/// logit model eta_j = theta_j - x' beta_j. When `proportional`, a single
/// slope vector is shared across thresholds and the parameter layout is
/// (theta_1..theta_{k-1}, beta_1..beta_p); otherwise it is
/// (theta_1..theta_{k-1}, beta_{1,1..p}, ..., beta_{k-1,1..p}).
inline CumLogitEval eval_cumulative_logit(const Eigen::VectorXd& params,
                                          const std::vector<int>& y, const Eigen::MatrixXd& x,
                                          int k, bool proportional, bool with_derivs) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(x.cols());
  const int n_thresh = k - 1;
  const int n_params = static_cast<int>(params.size());

  CumLogitEval out;
  if (with_derivs) {
    out.grad = Eigen::VectorXd::Zero(n_params);
    out.hess = Eigen::MatrixXd::Zero(n_params, n_params);
  }

  auto slope_offset = [&](int j) { return proportional ? n_thresh : n_thresh + j * p; };

  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    const int c = y[i];  // 1..k
    double gamma_c = 1.0, gamma_prev = 0.0;
    double f_c = 0.0, f_prev = 0.0, g_c = 0.0, g_prev = 0.0;
    if (c <= n_thresh) {
      const int j = c - 1;
      double eta = params[j];
      for (int q = 0; q < p; ++q) eta -= x(i, q) * params[slope_offset(j) + q];
      gamma_c = sigmoid(eta);
      f_c = gamma_c * (1.0 - gamma_c);
      g_c = f_c * (1.0 - 2.0 * gamma_c);
    }
    if (c >= 2) {
      const int j = c - 2;
      double eta = params[j];
      for (int q = 0; q < p; ++q) eta -= x(i, q) * params[slope_offset(j) + q];
      gamma_prev = sigmoid(eta);
      f_prev = gamma_prev * (1.0 - gamma_prev);
      g_prev = f_prev * (1.0 - 2.0 * gamma_prev);
    }
    const double pi = gamma_c - gamma_prev;
    if (!(pi > 0.0)) return out;  // invalid region (non-monotone thresholds/slopes)
    ll += std::log(pi);
    if (!with_derivs) continue;

    // first and second partials w.r.t. eta_c and eta_{c-1}
    const double du = f_c / pi;
    const double dv = -f_prev / pi;
    const double duu = g_c / pi - f_c * f_c / (pi * pi);
    const double dvv = -g_prev / pi - f_prev * f_prev / (pi * pi);
    const double duv = f_c * f_prev / (pi * pi);

    auto add_eta = [&](int j, double d1) {
      out.grad[j] += d1;
      const int off = slope_offset(proportional ? 0 : j);
      for (int q = 0; q < p; ++q) out.grad[off + q] -= x(i, q) * d1;
    };
    if (c <= n_thresh) add_eta(c - 1, du);
    if (c >= 2) add_eta(c - 2, dv);

    // Hessian blocks via the chain rule; eta_j depends on theta_j and beta_j.
    struct EtaRef {
      int theta;
      int slope;
      double d2_self;
    };
    std::vector<EtaRef> refs;
    if (c <= n_thresh) refs.push_back({c - 1, slope_offset(proportional ? 0 : c - 1), duu});
    if (c >= 2) refs.push_back({c - 2, slope_offset(proportional ? 0 : c - 2), dvv});

    auto add_block = [&](const EtaRef& ra, const EtaRef& rb, double d2) {
      out.hess(ra.theta, rb.theta) += d2;
      for (int q = 0; q < p; ++q) {
        out.hess(ra.theta, rb.slope + q) -= x(i, q) * d2;
        out.hess(ra.slope + q, rb.theta) -= x(i, q) * d2;
        for (int r = 0; r < p; ++r) out.hess(ra.slope + q, rb.slope + r) += x(i, q) * x(i, r) * d2;
      }
    };
    if (refs.size() == 1) {
      add_block(refs[0], refs[0], refs[0].d2_self);
    } else {
      add_block(refs[0], refs[0], refs[0].d2_self);
      add_block(refs[1], refs[1], refs[1].d2_self);
      add_block(refs[0], refs[1], duv);
      add_block(refs[1], refs[0], duv);
    }
  }
  out.ll = ll;
  return out;
}

struct NewtonResult {
  Eigen::VectorXd params;
  double ll = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  Eigen::MatrixXd hessian;
  std::string diagnostic;
};

/// Newton ascent with step halving; thresholds are kept strictly increasing
/// by rejecting steps that leave the valid region (the likelihood is -inf
/// there anyway).
inline NewtonResult newton_cumulative_logit(Eigen::VectorXd start, const std::vector<int>& y,
                                            const Eigen::MatrixXd& x, int k, bool proportional,
                                            const OrdinalOptions& opt) {
  NewtonResult res;
  res.params = std::move(start);
  CumLogitEval cur = eval_cumulative_logit(res.params, y, x, k, proportional, true);
  if (!std::isfinite(cur.ll)) {
    res.diagnostic = "invalid starting values";
    return res;
  }
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    Eigen::VectorXd step = (-cur.hess).ldlt().solve(cur.grad);
    if (!step.allFinite()) step = cur.grad;  // fall back to plain ascent

    double scale = 1.0;
    CumLogitEval next;
    bool improved = false;
    for (int half = 0; half < 50; ++half) {
      Eigen::VectorXd candidate = res.params + scale * step;
      next = eval_cumulative_logit(candidate, y, x, k, proportional, true);
      if (std::isfinite(next.ll) && next.ll >= cur.ll - 1e-12) {
        res.params = std::move(candidate);
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      res.diagnostic = "step halving failed to improve the log-likelihood";
      break;
    }
    const double delta = std::fabs(next.ll - cur.ll);
    cur = std::move(next);
    const double gnorm = cur.grad.cwiseAbs().maxCoeff();
    if (delta < opt.ll_tolerance && gnorm < opt.grad_tolerance) {
      res.converged = true;
      break;
    }
  }
  res.ll = cur.ll;
  res.gradient_norm = cur.grad.size() ? cur.grad.cwiseAbs().maxCoeff() : 0.0;
  res.hessian = std::move(cur.hess);

  // a slope running away while the likelihood flattens is the classic
  // separation signature; report it as non-convergence either way
  double max_slope = 0.0;
  for (int i = k - 1; i < res.params.size(); ++i)
    max_slope = std::max(max_slope, std::fabs(res.params[i]));
  if (max_slope > opt.slope_limit) {
    res.converged = false;
    res.diagnostic = "did not converge; a predictor may separate the outcome levels";
  } else if (!res.converged && res.diagnostic.empty()) {
    res.diagnostic = "did not converge within the iteration limit";
  }
  return res;
}

/// Column-pivot QR rank check; returns the names of aliased columns.
inline std::vector<std::string> aliased_columns(const Eigen::MatrixXd& x,
                                                const std::vector<std::string>& names) {
  const int n = static_cast<int>(x.rows());
  std::vector<std::string> aliased;
  Eigen::MatrixXd design(n, x.cols() + 1);
  design.col(0).setOnes();  // thresholds act as intercepts
  design.rightCols(x.cols()) = x;
  auto rank_of = [&](int cols) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.leftCols(cols));
    qr.setThreshold(1e-9);
    return static_cast<int>(qr.rank());
  };
  int prev = rank_of(1);
  for (int j = 0; j < x.cols(); ++j) {
    const int r = rank_of(j + 2);
    if (r == prev) aliased.push_back(names[j]);
    prev = r;
  }
  return aliased;
}

}  // namespace detail

/// Maximum-likelihood proportional-odds fit: logit P(Y <= j) = theta_j - x'beta.
/// Wald statistics, odds-ratio confidence intervals, and the three standard
/// pseudo-R2 measures are filled in from the converged fit.
inline OrdinalFit fit_proportional_odds(const std::vector<int>& y, const Eigen::MatrixXd& x,
                                        const std::vector<std::string>& names,
                                        const OrdinalOptions& opt = {}) {
  const int n = static_cast<int>(y.size());
  if (n != x.rows()) throw ComputeError("ordinal fit: outcome/design length mismatch");
  if (static_cast<int>(names.size()) != x.cols())
    throw ComputeError("ordinal fit: predictor names do not match columns");
  int k = 0;
  for (int v : y) k = std::max(k, v);
  std::vector<int> level_counts(k, 0);
  for (int v : y) {
    if (v < 1 || v > k) throw ComputeError("ordinal fit: outcome levels must be 1..k");
    ++level_counts[v - 1];
  }
  if (k < 3) throw ComputeError("ordinal fit: need at least 3 outcome levels");
  for (int c = 0; c < k; ++c)
    if (level_counts[c] == 0)
      throw ComputeError("ordinal fit: outcome level " + std::to_string(c + 1) + " is absent");

  if (auto aliased = detail::aliased_columns(x, names); !aliased.empty()) {
    std::string msg = "ordinal fit: rank-deficient design; aliased columns:";
    for (const auto& a : aliased) msg += " " + a;
    throw ComputeError(msg);
  }

  const int p = static_cast<int>(x.cols());
  const int n_thresh = k - 1;

  // start at the empirical cumulative logits with zero slopes
  Eigen::VectorXd start = Eigen::VectorXd::Zero(n_thresh + p);
  double cum = 0.0;
  double ll_null = 0.0;
  for (int c = 0; c < k; ++c) {
    const double prop = static_cast<double>(level_counts[c]) / n;
    ll_null += level_counts[c] * std::log(prop);
    if (c < n_thresh) {
      cum += prop;
      start[c] = std::log(cum / (1.0 - cum));
    }
  }

  auto newton = detail::newton_cumulative_logit(start, y, x, k, true, opt);

  OrdinalFit fit;
  fit.n = n;
  fit.k = k;
  fit.converged = newton.converged;
  fit.iterations = newton.iterations;
  fit.gradient_norm = newton.gradient_norm;
  fit.diagnostic = newton.diagnostic;
  fit.ll_model = newton.ll;
  fit.ll_null = ll_null;
  fit.mcfadden = 1.0 - fit.ll_model / fit.ll_null;
  fit.cox_snell = 1.0 - std::exp(2.0 * (fit.ll_null - fit.ll_model) / n);
  fit.nagelkerke = fit.cox_snell / (1.0 - std::exp(2.0 * fit.ll_null / n));

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n_thresh + p, n_thresh + p);
  const Eigen::MatrixXd info = -newton.hessian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (lu.isInvertible()) cov = lu.inverse();

  for (int j = 0; j < n_thresh; ++j) {
    fit.thresholds.push_back(newton.params[j]);
    fit.threshold_se.push_back(std::sqrt(std::max(cov(j, j), 0.0)));
  }
  const double z = stats::normal_quantile(1.0 - (1.0 - opt.ci_level) / 2.0);
  for (int q = 0; q < p; ++q) {
    CoefficientStat cs;
    cs.name = names[q];
    cs.beta = newton.params[n_thresh + q];
    cs.se = std::sqrt(std::max(cov(n_thresh + q, n_thresh + q), 0.0));
    if (cs.se > 0.0) {
      cs.wald_chi2 = (cs.beta / cs.se) * (cs.beta / cs.se);
      cs.p = stats::chi2_sf(cs.wald_chi2, 1.0);
    }
    cs.odds_ratio = std::exp(cs.beta);
    cs.ci_low = std::exp(cs.beta - z * cs.se);
    cs.ci_high = std::exp(cs.beta + z * cs.se);
    fit.coefficients.push_back(std::move(cs));
  }
  return fit;
}

// --- parallel lines (proportional-odds assumption) test -------------------------------------

struct ParallelLinesTest {
  double lr = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool inconclusive = false;
  std::string note;
};

/// Likelihood-ratio test of the shared-slope model against per-threshold
/// slopes. The relaxed model starts from the proportional solution so the
/// statistic cannot go negative.
inline ParallelLinesTest parallel_lines_test(const OrdinalFit& fit, const std::vector<int>& y,
                                             const Eigen::MatrixXd& x,
                                             const OrdinalOptions& opt = {}) {
  const int k = fit.k;
  const int p = static_cast<int>(x.cols());
  ParallelLinesTest out;
  out.df = static_cast<double>(k - 2) * p;
  if (k < 3 || p == 0) {
    out.inconclusive = true;
    out.note = "no relaxed model to compare against";
    return out;
  }

  const int n_thresh = k - 1;
  Eigen::VectorXd start = Eigen::VectorXd::Zero(n_thresh + n_thresh * p);
  for (int j = 0; j < n_thresh; ++j) start[j] = fit.thresholds[j];
  for (int j = 0; j < n_thresh; ++j)
    for (int q = 0; q < p; ++q) start[n_thresh + j * p + q] = fit.coefficients[q].beta;

  auto relaxed = detail::newton_cumulative_logit(start, y, x, k, false, opt);
  if (!relaxed.converged) {
    out.inconclusive = true;
    out.note = "relaxed model: " + relaxed.diagnostic;
    return out;
  }
  out.lr = std::max(2.0 * (relaxed.ll - fit.ll_model), 0.0);
  out.p = stats::chi2_sf(out.lr, out.df);
  return out;
}

// --- collinearity screen ----------------------------------------------------------------------

struct CollinearityCheck {
  double ppmc = 0.0;
  bool flagged = false;
};

/// Pearson correlation of academic age against the ordinal seniority codes;
/// |r| > 0.7 flags the pair as too collinear for a joint regression.
inline CollinearityCheck collinearity_check(std::span<const double> age,
                                            std::span<const int> seniority_codes,
                                            double threshold = 0.7) {
  if (age.size() != seniority_codes.size())
    throw ComputeError("collinearity_check: length mismatch");
  if (age.size() < 3) throw ComputeError("collinearity_check: need at least 3 observations");
  std::vector<double> codes(seniority_codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = seniority_codes[i];
  CollinearityCheck out;
  out.ppmc = stats::pearson(age, codes);  // throws on zero variance
  out.flagged = std::fabs(out.ppmc) > threshold;
  return out;
}

// --- Fisher-z comparison of two correlations ----------------------------------------------------

struct CorrelationDifference {
  double r1 = 0.0, r2 = 0.0;
  double z1 = 0.0, z2 = 0.0;
  double z_obs = 0.0;
  long n1 = 0, n2 = 0;
  bool no_real_difference = false;
  bool degenerate = false;  // |r| = 1 made a transform infinite
};

inline CorrelationDifference correlation_difference(std::span<const double> x1,
                                                    std::span<const double> y1,
                                                    std::span<const double> x2,
                                                    std::span<const double> y2) {
  if (x1.size() < 4 || x2.size() < 4)
    throw ComputeError("correlation_difference: each pair needs at least 4 points");
  CorrelationDifference out;
  out.n1 = static_cast<long>(x1.size());
  out.n2 = static_cast<long>(x2.size());
  out.r1 = stats::pearson(x1, y1);
  out.r2 = stats::pearson(x2, y2);
  out.z1 = stats::fisher_z(out.r1);
  out.z2 = stats::fisher_z(out.r2);
  out.degenerate = !std::isfinite(out.z1) || !std::isfinite(out.z2);
  out.z_obs = (out.z1 - out.z2) /
              std::sqrt(1.0 / (out.n1 - 3.0) + 1.0 / (out.n2 - 3.0));
  out.no_real_difference = std::isfinite(out.z_obs) && out.z_obs > -1.96 && out.z_obs < 1.96;
  return out;
}

// --- design helpers ------------------------------------------------------------------------------

struct RegressionDesign {
  Eigen::MatrixXd x;
  std::vector<std::string> names;
};

/// Age plus seniority dummies with Professor as the reference level.
inline RegressionDesign age_seniority_design(const std::vector<const ResearcherProfile*>& profiles,
                                             int eval_year, bool include_age = true,
                                             bool include_seniority = true) {
  const int n = static_cast<int>(profiles.size());
  std::vector<std::string> names;
  if (include_age) names.push_back("academic_age");
  const std::vector<Seniority> dummies = {Seniority::PhD, Seniority::PostDoc,
                                          Seniority::AssistantProf, Seniority::AssociateProf};
  if (include_seniority)
    for (Seniority s : dummies) names.push_back("seniority_" + to_string(s));

  RegressionDesign design;
  design.names = names;
  design.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
  for (int i = 0; i < n; ++i) {
    int col = 0;
    if (include_age) design.x(i, col++) = academic_age(*profiles[i], eval_year);
    if (include_seniority)
      for (Seniority s : dummies) design.x(i, col++) = (profiles[i]->seniority == s) ? 1.0 : 0.0;
  }
  return design;
}

}  // namespace scimetric::inference
