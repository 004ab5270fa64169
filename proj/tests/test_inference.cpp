#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <Eigen/Dense>

#include "scimetric/inference.hpp"

#include "oracle.hpp"

using namespace scimetric;
using namespace scimetric::inference;
using Catch::Matchers::WithinAbs;

namespace {

double normal_draw(oracle::TestRng& rng) {
  const double u = std::max(rng.uniform(), 1e-12);
  const double v = rng.uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Draws an ordinal outcome from the cumulative-logit model.
int draw_ordinal(oracle::TestRng& rng, const std::vector<double>& thresholds, double eta_x) {
  const double u = rng.uniform();
  for (std::size_t j = 0; j < thresholds.size(); ++j)
    if (u <= sigmoid(thresholds[j] - eta_x)) return static_cast<int>(j) + 1;
  return static_cast<int>(thresholds.size()) + 1;
}

/// Indicator rows where one indicator column is set per row; everything else 0.
std::vector<IndicatorVector> rows_with_column(Ind column, const std::vector<double>& values) {
  std::vector<IndicatorVector> rows(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    rows[i].researcher_id = "r" + std::to_string(i);
    rows[i][column] = values[i];
  }
  return rows;
}

}  // namespace

TEST_CASE("anova: constant indicator has zero importance") {
  std::vector<double> values(40, 7.5);
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(1 + i % 4);
  const auto a = oneway_anova(values, labels, 4);
  REQUIRE(a.F == 0.0);
  REQUIRE(a.p == 1.0);
}

TEST_CASE("anova: far-separated cluster means give importance above 0.999") {
  oracle::TestRng rng(17);
  std::vector<double> values;
  std::vector<int> labels;
  for (int g = 0; g < 4; ++g)
    for (int i = 0; i < 20; ++i) {
      values.push_back(10.0 * g + normal_draw(rng));
      labels.push_back(g + 1);
    }
  const auto a = oneway_anova(values, labels, 4);
  REQUIRE(a.df_between == 3.0);
  REQUIRE(a.df_within == 76.0);
  REQUIRE(1.0 - a.p > 0.999);

  const auto rows = rows_with_column(Ind::H, values);
  const auto results = predictor_importance(rows, labels);
  REQUIRE(results.front().indicator == "h");  // ties on 0 sort behind the real signal
  REQUIRE(results.front().importance > 0.999);
  REQUIRE(results.back().importance == 0.0);
}

TEST_CASE("importance scales: 1-p default and the -log10(p)/10 alternative") {
  REQUIRE(importance_from_p(0.2, ImportanceScale::OneMinusP) == 0.8);
  REQUIRE_THAT(importance_from_p(1e-3, ImportanceScale::NegLog10P), WithinAbs(0.3, 1e-12));
  REQUIRE(importance_from_p(1e-15, ImportanceScale::NegLog10P) == 1.0);  // capped at 1
  REQUIRE(importance_from_p(0.0, ImportanceScale::NegLog10P) == 1.0);
}

TEST_CASE("anova F is invariant under affine transforms of the indicator") {
  oracle::TestRng rng(99);
  std::vector<double> values, scaled;
  std::vector<int> labels;
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 15; ++i) {
      const double v = 2.0 * g + normal_draw(rng);
      values.push_back(v);
      scaled.push_back(-3.7 * v + 11.0);
      labels.push_back(g + 1);
    }
  const auto a = oneway_anova(values, labels, 3);
  const auto b = oneway_anova(scaled, labels, 3);
  REQUIRE_THAT(a.F, WithinAbs(b.F, 1e-9 * std::max(1.0, a.F)));
  REQUIRE_THAT(a.p, WithinAbs(b.p, 1e-12));
}

TEST_CASE("anova (hand check): F matches the explicit sum-of-squares route") {
  // groups {1,2,3} and {4,6,8}: SSB = 24, SSW = 2 + 8 = 10, F = 24/(10/4) = 9.6
  const std::vector<double> values = {1, 2, 3, 4, 6, 8};
  const std::vector<int> labels = {1, 1, 1, 2, 2, 2};
  const auto a = oneway_anova(values, labels, 2);
  REQUIRE_THAT(a.F, WithinAbs(9.6, 1e-12));
  REQUIRE(a.df_between == 1.0);
  REQUIRE(a.df_within == 4.0);
}

TEST_CASE("tamhane: null case is not significant, strong separation is") {
  oracle::TestRng rng(5);
  std::vector<double> same, separated;
  std::vector<int> labels;
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 30; ++i) {
      same.push_back(normal_draw(rng));
      separated.push_back(5.0 * g + normal_draw(rng));
      labels.push_back(g + 1);
    }
  {
    const auto res = tamhane_t2(rows_with_column(Ind::C, same), labels, 0.001);
    const auto& pair = res[static_cast<int>(Ind::C)].pairs[0];
    REQUIRE_FALSE(pair.skipped);
    REQUIRE_FALSE(pair.significant);
  }
  {
    const auto res = tamhane_t2(rows_with_column(Ind::C, separated), labels, 0.001);
    const auto& pair = res[static_cast<int>(Ind::C)].pairs[0];
    REQUIRE(pair.significant);
    REQUIRE(std::fabs(pair.t) > 10.0);  // the expected statistic is near 19
  }
}

TEST_CASE("tamhane: single-member clusters are skipped with a notice") {
  std::vector<double> values = {1.0, 2.0, 3.0, 4.0, 10.0};
  std::vector<int> labels = {1, 1, 2, 2, 3};  // cluster 3 has one member
  const auto res = tamhane_t2(rows_with_column(Ind::P, values), labels, 0.05);
  const auto& pairs = res[static_cast<int>(Ind::P)].pairs;
  REQUIRE(pairs.size() == 3);
  REQUIRE_FALSE(pairs[0].skipped);  // 1 vs 2
  REQUIRE(pairs[1].skipped);        // 1 vs 3
  REQUIRE(pairs[2].skipped);        // 2 vs 3
  REQUIRE_THAT(pairs[1].note, Catch::Matchers::ContainsSubstring("fewer than 2"));
  // Sidak correction counts only the testable pair
  REQUIRE_THAT(res[static_cast<int>(Ind::P)].sidak_alpha, WithinAbs(0.05, 1e-12));
}

TEST_CASE("tamhane: Welch-Satterthwaite df and Sidak level") {
  oracle::TestRng rng(31);
  std::vector<double> values;
  std::vector<int> labels;
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 10 + 5 * g; ++i) {
      values.push_back(g * 1.0 + (1.0 + g) * normal_draw(rng));
      labels.push_back(g + 1);
    }
  const auto res = tamhane_t2(rows_with_column(Ind::E, values), labels, 0.01);
  const auto& r = res[static_cast<int>(Ind::E)];
  REQUIRE_THAT(r.sidak_alpha, WithinAbs(1.0 - std::pow(0.99, 1.0 / 3.0), 1e-12));
  for (const auto& pair : r.pairs) {
    REQUIRE(pair.df > 1.0);
    REQUIRE(pair.p >= 0.0);
    REQUIRE(pair.p <= 1.0);
  }
}

TEST_CASE("odds ratios reproduce the hand-computed 2x2 tables") {
  // seniority PhD: 15 researchers, 12 in cluster 1; everyone else: 177, 41 in cluster 1
  std::vector<Seniority> seniorities;
  std::vector<int> assignments;
  auto add = [&](Seniority s, int cluster, int count) {
    for (int i = 0; i < count; ++i) {
      seniorities.push_back(s);
      assignments.push_back(cluster);
    }
  };
  add(Seniority::PhD, 1, 12);
  add(Seniority::PhD, 2, 3);
  add(Seniority::Professor, 1, 41);
  add(Seniority::Professor, 2, 136);
  const auto table = odds_ratios(seniorities, assignments);
  const auto& cell = table.cells[0];  // PhD x cluster 1
  REQUIRE(cell.seniority == Seniority::PhD);
  REQUIRE(cell.cluster == 1);
  REQUIRE(cell.a == 12);
  REQUIRE(cell.b == 3);
  REQUIRE(cell.c == 41);
  REQUIRE(cell.d == 136);
  REQUIRE(cell.odds_ratio.has_value());
  REQUIRE_THAT(*cell.odds_ratio, WithinAbs(13.2683, 0.001));
  REQUIRE_THAT(cell.pct_within_seniority, WithinAbs(80.0, 1e-9));
}

TEST_CASE("odds ratio is undefined on zero cells and reciprocal otherwise") {
  REQUIRE_FALSE(odds_ratio(5, 0, 3, 7).has_value());
  REQUIRE_FALSE(odds_ratio(5, 2, 0, 7).has_value());
  REQUIRE_FALSE(odds_ratio(5, 2, 3, 0).has_value());
  REQUIRE(odds_ratio(0, 2, 3, 7).has_value());  // a = 0 gives a defined OR of 0

  oracle::TestRng rng(4096);
  for (int trial = 0; trial < 200; ++trial) {
    const long a = 1 + rng.below(50), b = 1 + rng.below(50), c = 1 + rng.below(50),
               d = 1 + rng.below(50);
    const double fwd = *odds_ratio(a, b, c, d);
    const double rev = *odds_ratio(c, d, a, b);
    REQUIRE_THAT(fwd * rev, WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("odds ratios: seniority missing from a cluster yields an undefined OR") {
  std::vector<Seniority> seniorities = {Seniority::PhD, Seniority::PhD, Seniority::Professor,
                                        Seniority::Professor};
  std::vector<int> assignments = {1, 1, 2, 2};
  const auto table = odds_ratios(seniorities, assignments);
  for (const auto& cell : table.cells) {
    if (cell.seniority == Seniority::PhD && cell.cluster == 2) {
      REQUIRE(cell.a == 0);
      REQUIRE_FALSE(cell.odds_ratio.has_value());  // c (cluster-only) fills, b stays, d = 0 case
    }
  }
}

TEST_CASE("proportional odds: parametric recovery of a known slope") {
  oracle::TestRng rng(314159);
  const std::vector<double> thresholds = {-1.0, 0.0, 1.0};
  const double beta_age = 0.14;
  const int n = 1000;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    const double age = 10.0 * rng.uniform();  // 0..10 years
    x(i, 0) = age;
    y[i] = draw_ordinal(rng, thresholds, beta_age * age);
  }
  const auto fit = fit_proportional_odds(y, x, {"age"});
  REQUIRE(fit.converged);
  REQUIRE(fit.gradient_norm < 1e-6);
  const auto& age = fit.coefficients[0];
  REQUIRE(std::fabs(age.beta - beta_age) < 3.0 * age.se);
  REQUIRE(age.ci_low < age.odds_ratio);
  REQUIRE(age.ci_high > age.odds_ratio);
  REQUIRE(fit.mcfadden >= 0.0);
  REQUIRE(fit.mcfadden <= 1.0);
  REQUIRE(fit.cox_snell >= 0.0);
  REQUIRE(fit.cox_snell <= 1.0);
  REQUIRE(fit.nagelkerke >= 0.0);
  REQUIRE(fit.nagelkerke <= 1.0);
  REQUIRE(fit.ll_model >= fit.ll_null);
  for (std::size_t j = 1; j < fit.thresholds.size(); ++j)
    REQUIRE(fit.thresholds[j] > fit.thresholds[j - 1]);
}

TEST_CASE("proportional odds: permutation null keeps the slope quiet") {
  int quiet = 0;
  const int seeds = 20;
  for (int seed = 1; seed <= seeds; ++seed) {
    oracle::TestRng rng(static_cast<std::uint64_t>(900 + seed));
    const std::vector<double> thresholds = {-0.8, 0.3, 1.2};
    const int n = 1000;
    Eigen::MatrixXd x(n, 1);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = draw_ordinal(rng, thresholds, 0.0);  // outcome independent of age
      x(i, 0) = 40.0 * rng.uniform();             // shuffled-age stand-in
    }
    const auto fit = fit_proportional_odds(y, x, {"age"});
    if (fit.converged && fit.coefficients[0].p >= 0.05) ++quiet;
  }
  REQUIRE(quiet >= seeds * 9 / 10);
}

TEST_CASE("proportional odds: analytic gradient matches central finite differences") {
  oracle::TestRng rng(271828);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 60, k = 3 + rng.below(2), p = 1 + rng.below(2);
    Eigen::MatrixXd x(n, p);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      for (int q = 0; q < p; ++q) x(i, q) = 2.0 * normal_draw(rng);
      y[i] = 1 + rng.below(k);
    }
    bool all_levels = true;
    for (int c = 1; c <= k; ++c)
      all_levels = all_levels && std::count(y.begin(), y.end(), c) > 0;
    if (!all_levels) continue;

    const int m = (k - 1) + p;
    Eigen::VectorXd params(m);
    for (int j = 0; j < k - 1; ++j) params[j] = -1.0 + 2.0 * j / (k - 1);
    for (int q = 0; q < p; ++q) params[k - 1 + q] = 0.3 * normal_draw(rng);

    const auto eval = inference::detail::eval_cumulative_logit(params, y, x, k, true, true);
    REQUIRE(std::isfinite(eval.ll));
    const double eps = 1e-6;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd hi = params, lo = params;
      hi[j] += eps;
      lo[j] -= eps;
      const double fhi = inference::detail::eval_cumulative_logit(hi, y, x, k, true, false).ll;
      const double flo = inference::detail::eval_cumulative_logit(lo, y, x, k, true, false).ll;
      const double fd = (fhi - flo) / (2.0 * eps);
      REQUIRE_THAT(eval.grad[j], WithinAbs(fd, 1e-4 * std::max(1.0, std::fabs(fd))));
    }
  }
}

TEST_CASE("proportional odds: cumulative probabilities are monotone and close at 1") {
  oracle::TestRng rng(11);
  const int n = 400;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal_draw(rng);
    y[i] = draw_ordinal(rng, {-0.5, 0.5, 1.5}, 0.8 * x(i, 0));
  }
  const auto fit = fit_proportional_odds(y, x, {"x"});
  REQUIRE(fit.converged);
  for (int trial = 0; trial < 20; ++trial) {
    const double xv = -3.0 + 6.0 * rng.uniform();
    double prev = 0.0;
    double total_probability = 0.0;
    for (int j = 0; j < fit.k; ++j) {
      const double gamma =
          (j < fit.k - 1) ? sigmoid(fit.thresholds[j] - fit.coefficients[0].beta * xv) : 1.0;
      REQUIRE(gamma >= prev - 1e-12);
      total_probability += gamma - prev;
      prev = gamma;
    }
    REQUIRE_THAT(total_probability, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("proportional odds: rank-deficient design names the aliased column") {
  const int n = 50;
  oracle::TestRng rng(8);
  Eigen::MatrixXd x(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal_draw(rng);
    x(i, 1) = 2.0 * x(i, 0);  // exact alias
    y[i] = 1 + i % 3;
  }
  REQUIRE_THROWS_MATCHES(
      fit_proportional_odds(y, x, {"age", "age_times_two"}), ComputeError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("age_times_two")));
}

TEST_CASE("proportional odds: separation is flagged, not thrown") {
  const int n = 60;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = 1 + (i % 3);
    x(i, 0) = static_cast<double>(y[i]);  // predictor perfectly orders the outcome
  }
  const auto fit = fit_proportional_odds(y, x, {"perfect"});
  REQUIRE_FALSE(fit.converged);
  REQUIRE_FALSE(fit.diagnostic.empty());
}

TEST_CASE("proportional odds: fewer than 3 levels or absent levels are rejected") {
  Eigen::MatrixXd x(10, 1);
  x.setZero();
  std::vector<int> y01 = {1, 2, 1, 2, 1, 2, 1, 2, 1, 2};
  REQUIRE_THROWS_AS(fit_proportional_odds(y01, x, {"x"}), ComputeError);
  std::vector<int> gap = {1, 1, 1, 3, 3, 3, 1, 3, 1, 3};  // level 2 absent
  REQUIRE_THROWS_AS(fit_proportional_odds(gap, x, {"x"}), ComputeError);
}

TEST_CASE("parallel lines: proportional data passes, opposite slopes fail") {
  oracle::TestRng rng(2719);
  {
    const int n = 600;
    Eigen::MatrixXd x(n, 1);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = normal_draw(rng);
      y[i] = draw_ordinal(rng, {-1.0, 0.0, 1.0}, 0.5 * x(i, 0));
    }
    const auto fit = fit_proportional_odds(y, x, {"x"});
    const auto pl = parallel_lines_test(fit, y, x);
    REQUIRE_FALSE(pl.inconclusive);
    REQUIRE(pl.lr >= 0.0);
    REQUIRE(pl.df == 2.0);
    REQUIRE(pl.p > 0.01);  // no evidence against the shared slope
  }
  {
    // per-threshold slopes +1 and -1: gamma_1 = s(-1 - x), gamma_2 = s(1 + x)
    const int n = 500;
    Eigen::MatrixXd x(n, 1);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      const double xv = 1.5 * rng.uniform();  // x >= 0 keeps the curves ordered
      x(i, 0) = xv;
      const double g1 = sigmoid(-1.0 - xv), g2 = sigmoid(1.0 + xv);
      const double u = rng.uniform();
      y[i] = u <= g1 ? 1 : (u <= g2 ? 2 : 3);
    }
    const auto fit = fit_proportional_odds(y, x, {"x"});
    const auto pl = parallel_lines_test(fit, y, x);
    REQUIRE_FALSE(pl.inconclusive);
    REQUIRE(pl.p < 0.01);
  }
}

TEST_CASE("parallel lines: type-I error is near the nominal level") {
  int rejections = 0;
  const int sims = 40;
  for (int seed = 1; seed <= sims; ++seed) {
    oracle::TestRng rng(static_cast<std::uint64_t>(7000 + seed));
    const int n = 400;
    Eigen::MatrixXd x(n, 1);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = normal_draw(rng);
      y[i] = draw_ordinal(rng, {-1.0, 0.2, 1.3}, 0.4 * x(i, 0));
    }
    const auto fit = fit_proportional_odds(y, x, {"x"});
    if (!fit.converged) continue;
    const auto pl = parallel_lines_test(fit, y, x);
    if (!pl.inconclusive && pl.p < 0.05) ++rejections;
  }
  REQUIRE(rejections <= sims / 4);  // loose unit-level bound; acceptance runs 200 sims
}

TEST_CASE("collinearity check flags a strong age/seniority relationship") {
  std::vector<double> age = {1, 2, 3, 4, 5, 1, 2, 3, 4, 5};
  std::vector<int> codes = {1, 2, 3, 4, 5, 1, 2, 3, 4, 5};
  const auto c = collinearity_check(age, codes);
  REQUIRE_THAT(c.ppmc, WithinAbs(1.0, 1e-12));
  REQUIRE(c.flagged);

  oracle::TestRng rng(303);
  int calm = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::vector<double> a(200);
    std::vector<int> s(200);
    for (int i = 0; i < 200; ++i) {
      a[i] = 30.0 * rng.uniform();
      s[i] = 1 + rng.below(5);
    }
    if (std::fabs(collinearity_check(a, s).ppmc) < 0.2) ++calm;
  }
  REQUIRE(calm >= 19);

  std::vector<double> flat = {2, 2, 2, 2};
  std::vector<int> codes4 = {1, 2, 3, 4};
  REQUIRE_THROWS_AS(collinearity_check(flat, codes4), ComputeError);
}

TEST_CASE("correlation difference: identity, closed form, verdict threshold") {
  oracle::TestRng rng(41);
  std::vector<double> x(50), y(50);
  for (int i = 0; i < 50; ++i) {
    x[i] = normal_draw(rng);
    y[i] = 0.8 * x[i] + 0.4 * normal_draw(rng);
  }
  const auto same = correlation_difference(x, y, x, y);
  REQUIRE(same.r1 == same.r2);
  REQUIRE_THAT(same.z_obs, WithinAbs(0.0, 1e-12));
  REQUIRE(same.no_real_difference);

  REQUIRE_THAT(stats::fisher_z(0.74), WithinAbs(0.95048, 1e-4));
  REQUIRE_THAT(stats::fisher_z(-0.74), WithinAbs(-stats::fisher_z(0.74), 1e-15));

  // |r| = 1 makes the transform infinite and is reported, not thrown
  std::vector<double> exact_x = {1, 2, 3, 4, 5};
  std::vector<double> exact_y = {2, 4, 6, 8, 10};
  const auto degenerate = correlation_difference(exact_x, exact_y, x, y);
  REQUIRE(degenerate.degenerate);
  REQUIRE(std::isinf(degenerate.z1));

  std::vector<double> tiny = {1, 2, 3};
  REQUIRE_THROWS_AS(correlation_difference(tiny, tiny, x, y), ComputeError);
}

TEST_CASE("fisher z is odd over the whole r range") {
  oracle::TestRng rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    const double r = -0.999 + 1.998 * rng.uniform();
    REQUIRE_THAT(stats::fisher_z(-r), WithinAbs(-stats::fisher_z(r), 1e-12));
  }
}

TEST_CASE("age/seniority design uses Professor as the reference level") {
  ResearcherProfile prof, phd;
  prof.id = "prof";
  prof.seniority = Seniority::Professor;
  phd.id = "phd";
  phd.seniority = Seniority::PhD;
  PublicationRecord p;
  p.id = "x";
  p.year = 2000;
  p.n_authors = 1;
  prof.publications.push_back(p);
  p.id = "y";
  phd.publications.push_back(p);
  const std::vector<const ResearcherProfile*> profiles = {&prof, &phd};
  const auto design = age_seniority_design(profiles, 2013);
  REQUIRE(design.names ==
          std::vector<std::string>{"academic_age", "seniority_PhD", "seniority_PostDoc",
                                   "seniority_AssistantProf", "seniority_AssociateProf"});
  REQUIRE(design.x(0, 0) == 13.0);
  for (int q = 1; q < 5; ++q) REQUIRE(design.x(0, q) == 0.0);  // Professor: all dummies zero
  REQUIRE(design.x(1, 1) == 1.0);                              // PhD dummy set
}
