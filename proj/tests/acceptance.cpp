// Acceptance suite: one criterion per section, one pass/fail line each.
// Every tolerance is pinned here; the binary exits non-zero if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scimetric/corpus.hpp"
#include "scimetric/indicators.hpp"
#include "scimetric/inference.hpp"
#include "scimetric/io.hpp"
#include "scimetric/pipeline.hpp"
#include "scimetric/report.hpp"
#include "scimetric/synth.hpp"
#include "scimetric/twostep.hpp"

#include "oracle.hpp"

using namespace scimetric;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

int g_failures = 0;

template <typename Fn>
void criterion(int id, const std::string& name, double budget_ms, Fn&& fn) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fn(out);
  } catch (const std::exception& e) {
    out.fail(std::string("exception: ") + e.what());
  }
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (budget_ms > 0 && ms > budget_ms)
    out.fail("runtime " + std::to_string(ms) + " ms exceeds " + std::to_string(budget_ms) + " ms");
  if (!out.pass) ++g_failures;
  std::printf("[%s] criterion %2d: %s (%.1f ms)%s%s\n", out.pass ? "PASS" : "FAIL", id,
              name.c_str(), ms, out.detail.empty() ? "" : " -- ", out.detail.c_str());
  std::fflush(stdout);
}

void check_close(Outcome& out, const std::string& what, double got, double want, double tol) {
  if (!(std::fabs(got - want) <= tol))
    out.fail(what + ": got " + std::to_string(got) + ", want " + std::to_string(want) + " +/- " +
             std::to_string(tol));
}

void check_exact(Outcome& out, const std::string& what, double got, double want) {
  if (got != want)
    out.fail(what + ": got " + std::to_string(got) + ", want exactly " + std::to_string(want));
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

double engine_millers_h(double citations) {
  const std::vector<int> counts = {static_cast<int>(citations)};
  return h_family(h_core(counts, {1}), counts, 1, citations, 1).millers_h;
}

double engine_h2(double citations) {
  const std::vector<int> counts = {static_cast<int>(citations)};
  return h_family(h_core(counts, {1}), counts, 1, citations, 1).h2;
}

std::string temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("scimetric_acceptance_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

double normal_draw(oracle::TestRng& rng) {
  const double u = std::max(rng.uniform(), 1e-12);
  const double v = rng.uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

int draw_ordinal(oracle::TestRng& rng, const std::vector<double>& thresholds, double eta_x) {
  const double u = rng.uniform();
  for (std::size_t j = 0; j < thresholds.size(); ++j)
    if (u <= 1.0 / (1.0 + std::exp(-(thresholds[j] - eta_x)))) return static_cast<int>(j) + 1;
  return static_cast<int>(thresholds.size()) + 1;
}

const std::vector<std::string> kIntegerIndicators = {
    "P",  "C",    "Csc", "sc", "nnc",    "SIG",
    "Cless5", "h", "g",   "POPh", "NprodP", "sum_pp_top_n_cits"};

}  // namespace

int main() {
  const std::string fixtures = FIXTURES_DIR;

  // 1. sqrt(C/2) reproduces the four per-field maxima after 1-decimal rounding
  criterion(1, "Miller h cross-check", 1.0, [&](Outcome& out) {
    const double totals[] = {16481, 14141, 3495, 13520};
    const double maxima[] = {90.7, 84.0, 41.8, 82.2};
    for (int i = 0; i < 4; ++i)
      check_close(out, "sqrt(" + std::to_string((int)totals[i]) + "/2)",
                  round1(engine_millers_h(totals[i])), maxima[i], 0.1000001);
  });

  // 2. cube roots of the same totals reproduce the h2 maxima
  criterion(2, "h2 cross-check", 0.0, [&](Outcome& out) {
    const double totals[] = {16481, 14141, 3495, 13520};
    const double maxima[] = {25.4, 24.1, 15.1, 23.8};
    for (int i = 0; i < 4; ++i)
      check_close(out, "cbrt(" + std::to_string((int)totals[i]) + ")",
                  round1(engine_h2(totals[i])), maxima[i], 0.1000001);
  });

  // 3. upper whiskers from the four field quartile sets; the first set's lower
  //    whisker clamps to the observed minimum of 1
  criterion(3, "whisker reconstruction", 0.0, [&](Outcome& out) {
    struct Case {
      std::vector<double> values;
      double upper;
    };
    const std::vector<Case> cases = {
        {{1.0, 8.0, 10.0, 15.0, 20.0, 24.7, 66.0}, 49.8},
        {{0.0, 5.0, 7.0, 9.0, 12.0, 14.0, 59.0}, 27.5},
        {{0.0, 1.0, 1.5, 2.0, 3.0, 4.0, 32.0}, 8.5},
        {{0.0, 5.0, 7.0, 9.0, 12.0, 16.0, 60.0}, 32.5},
    };
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto s = report::boxplot_summary(cases[i].values);
      check_close(out, "upper whisker " + std::to_string(i + 1), s.upper_whisker, cases[i].upper,
                  0.1000001);
    }
    const auto astro = report::boxplot_summary(cases[0].values);
    check_exact(out, "clamped lower whisker", astro.lower_whisker, 1.0);
  });

  // 4. odds ratios on the published cross-tab counts
  criterion(4, "odds reconstruction", 0.0, [&](Outcome& out) {
    std::vector<Seniority> sen;
    std::vector<int> cl;
    auto add = [&](Seniority s, int cluster, int count) {
      for (int i = 0; i < count; ++i) {
        sen.push_back(s);
        cl.push_back(cluster);
      }
    };
    // Astronomy: 15 PhD (12 in cluster 1), 177 others (41 in cluster 1)
    add(Seniority::PhD, 1, 12);
    add(Seniority::PhD, 2, 3);
    add(Seniority::Professor, 1, 41);
    add(Seniority::Professor, 2, 136);
    const auto astro = inference::odds_ratios(sen, cl);
    if (!astro.cells[0].odds_ratio)
      out.fail("astronomy OR undefined");
    else
      check_close(out, "astronomy PhD/cluster1 OR", *astro.cells[0].odds_ratio, 13.0, 0.5);

    sen.clear();
    cl.clear();
    // Public Health: 9 PhD (8 in cluster 1), 123 others (51 in cluster 1)
    add(Seniority::PhD, 1, 8);
    add(Seniority::PhD, 2, 1);
    add(Seniority::Professor, 1, 51);
    add(Seniority::Professor, 2, 72);
    const auto pub = inference::odds_ratios(sen, cl);
    if (!pub.cells[0].odds_ratio)
      out.fail("public health OR undefined");
    else
      check_close(out, "public health PhD/cluster1 OR", *pub.cells[0].odds_ratio, 11.2, 0.2);
  });

  // 5. academic age
  criterion(5, "academic age", 0.0, [&](Outcome& out) {
    ResearcherProfile r;
    r.id = "prof";
    PublicationRecord p;
    p.id = "first";
    p.year = 1980;
    p.n_authors = 1;
    r.publications.push_back(p);
    check_exact(out, "academic age 1980->2013", academic_age(r, 2013), 33.0);
  });

  // 6. every listed d1 indicator value, exact or 1e-9
  const Corpus d1 = parse_corpus(fixtures + "/d1.json");
  criterion(6, "fixture d1 exact values", 10.0, [&](Outcome& out) {
    const auto rows = indicator_matrix(d1);
    if (rows.size() != 1) {
      out.fail("expected one researcher row");
      return;
    }
    const auto& v = rows[0];
    if (v.academic_age != 5) out.fail("academic age");
    const std::vector<std::pair<Ind, double>> integers = {
        {Ind::P, 5},   {Ind::C, 30},      {Ind::Sc, 3},   {Ind::Csc, 27}, {Ind::Nnc, 0},
        {Ind::SIG, 10}, {Ind::Cless5, 27}, {Ind::H, 4},    {Ind::G, 5},    {Ind::POPh, 2},
        {Ind::NprodP, 3}, {Ind::SumPpTopNCits, 0}};
    for (const auto& [ind, want] : integers)
      check_exact(out, indicator_name(ind), v[ind], want);
    const std::vector<std::pair<Ind, double>> reals = {
        {Ind::Fp, 2.05},
        {Ind::App, 4.4},
        {Ind::MeanPpCollab, 0.8},
        {Ind::MeanPpIntCollab, 0.7},
        {Ind::PctSc, 10.0},
        {Ind::PctNc, 0.0},
        {Ind::CPP, 6.0},
        {Ind::Cage, 2.2},
        {Ind::PI, 90.0},
        {Ind::Fc, 15.3},
        {Ind::FracCPP, 15.3 / 2.05},
        {Ind::H2, std::cbrt(30.0)},
        {Ind::E, std::sqrt(11.0)},
        {Ind::A, 6.75},
        {Ind::M, 6.5},
        {Ind::Q2, std::sqrt(26.0)},
        {Ind::Hg, std::sqrt(20.0)},
        {Ind::AR, std::sqrt(23.0 / 3.0)},
        {Ind::Hnorm, 0.8},
        {Ind::MillersH, std::sqrt(15.0)},
        {Ind::MQuot, 0.8},
        {Ind::MgQuot, 1.0},
        {Ind::AWCR, 32.0 / 3.0},
        {Ind::AW, std::sqrt(32.0 / 3.0)},
        {Ind::AWCRpa, 62.0 / 15.0},
        {Ind::Mcs, 5.4},
        {Ind::TGtCa, 23.0 / 12.0},
        {Ind::SumPpTopProp, 0.0}};
    for (const auto& [ind, want] : reals)
      check_close(out, indicator_name(ind), v[ind], want, 1e-9);
  });

  // 7. brute-force reimplementation agrees on 100 random researchers
  criterion(7, "oracle equivalence", 5000.0, [&](Outcome& out) {
    oracle::TestRng rng(741);
    for (int trial = 0; trial < 100 && out.pass; ++trial) {
      const auto r = oracle::random_researcher(rng, 2013, 30, 200);
      const double benchmark = 1.0 + 9.0 * rng.uniform();
      const auto vec = indicator_vector(r, 2013, benchmark);
      const auto expected = oracle::compute_all(r, 2013, benchmark);
      for (int j = 0; j < kIndicatorCount; ++j) {
        const std::string& name = indicator_names()[j];
        const double want = expected.at(name);
        const double got = vec.values[j];
        const bool integer = std::find(kIntegerIndicators.begin(), kIntegerIndicators.end(),
                                       name) != kIntegerIndicators.end();
        if (integer ? (got != want) : !(std::fabs(got - want) <= 1e-9)) {
          out.fail("trial " + std::to_string(trial) + " indicator " + name);
          break;
        }
      }
    }
  });

  // 8. auto-k on four well-separated blobs: >= 95/100 seeds recover k=4 with
  //    ARI >= 0.99; refits are identical
  criterion(8, "clustering recovery", 30000.0, [&](Outcome& out) {
    int successes = 0;
    for (int seed = 1; seed <= 100; ++seed) {
      oracle::TestRng rng(static_cast<std::uint64_t>(seed));
      Eigen::MatrixXd x(400, 2);
      std::vector<int> labels(400);
      for (int b = 0; b < 4; ++b)
        for (int i = 0; i < 100; ++i) {
          const int row = b * 100 + i;
          x(row, 0) = (b % 2) * 12.0 + normal_draw(rng);
          x(row, 1) = (b / 2) * 12.0 + normal_draw(rng);
          labels[row] = b + 1;
        }
      std::vector<std::string> ids(400);
      for (int i = 0; i < 400; ++i) ids[i] = "r" + std::to_string(1000 + i);
      const auto model = twostep::fit(x, ids, {"x", "y"});
      const bool ok =
          model.k == 4 && oracle::adjusted_rand_index(model.row_assignments, labels) >= 0.99;
      if (ok) ++successes;
      if (seed == 1) {
        const auto refit = twostep::fit(x, ids, {"x", "y"});
        if (refit.row_assignments != model.row_assignments || refit.k != model.k)
          out.fail("refit differs on seed 1");
      }
    }
    if (successes < 95)
      out.fail("only " + std::to_string(successes) + "/100 seeds recovered the blobs");
    else
      out.detail = std::to_string(successes) + "/100 seeds";
  });

  // 9. regression calibration: slope recovery within 3 SE, parallel-lines
  //    type-I error in [2%, 8%] over 200 simulations, pseudo-R2 in [0,1]
  criterion(9, "regression calibration", 60000.0, [&](Outcome& out) {
    {
      oracle::TestRng rng(314159);
      const std::vector<double> thresholds = {-1.0, 0.0, 1.0};
      const int n = 1000;
      Eigen::MatrixXd x(n, 1);
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) {
        const double age = 10.0 * rng.uniform();
        x(i, 0) = age;
        y[i] = draw_ordinal(rng, thresholds, 0.14 * age);
      }
      const auto fit = inference::fit_proportional_odds(y, x, {"age"});
      if (!fit.converged) out.fail("recovery fit did not converge");
      const auto& age = fit.coefficients[0];
      if (!(std::fabs(age.beta - 0.14) < 3.0 * age.se))
        out.fail("slope " + std::to_string(age.beta) + " not within 3 SE of 0.14");
      for (double r2 : {fit.mcfadden, fit.cox_snell, fit.nagelkerke})
        if (!(r2 >= 0.0 && r2 <= 1.0)) out.fail("pseudo-R2 out of [0,1]");
    }
    int rejections = 0, usable = 0;
    for (int seed = 1; seed <= 200; ++seed) {
      oracle::TestRng rng(static_cast<std::uint64_t>(60000 + seed));
      const int n = 800;
      Eigen::MatrixXd x(n, 1);
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) {
        x(i, 0) = normal_draw(rng);
        y[i] = draw_ordinal(rng, {-1.0, 0.2, 1.3}, 0.4 * x(i, 0));
      }
      const auto fit = inference::fit_proportional_odds(y, x, {"x"});
      if (!fit.converged) continue;
      for (double r2 : {fit.mcfadden, fit.cox_snell, fit.nagelkerke})
        if (!(r2 >= 0.0 && r2 <= 1.0)) out.fail("pseudo-R2 out of [0,1] in simulation");
      const auto pl = inference::parallel_lines_test(fit, y, x);
      if (pl.inconclusive) continue;
      ++usable;
      if (pl.p < 0.05) ++rejections;
    }
    if (usable < 190) out.fail("only " + std::to_string(usable) + " usable simulations");
    const double rate = 100.0 * rejections / std::max(usable, 1);
    if (!(rate >= 2.0 && rate <= 8.0))
      out.fail("type-I rate " + std::to_string(rate) + "% outside [2%, 8%]");
    else
      out.detail = "type-I rate " + std::to_string(rate).substr(0, 4) + "%";
  });

  // 10. the exact identities over 1000 randomized cases each
  criterion(10, "invariant suite", 10000.0, [&](Outcome& out) {
    oracle::TestRng rng(1000);
    for (int trial = 0; trial < 1000 && out.pass; ++trial) {
      const auto r = oracle::random_researcher(rng, 2013, 15, 80);
      const auto v = indicator_vector(r, 2013, 5.0);
      std::vector<int> counts, ages;
      for (const auto& p : r.publications) {
        counts.push_back(p.citation_count());
        ages.push_back(2013 - p.year);
      }
      double core_sum = 0;
      for (int c : h_core(counts, ages).core_citations) core_sum += c;
      if (std::fabs(v[Ind::E] * v[Ind::E] + v[Ind::H] * v[Ind::H] - core_sum) > 1e-9)
        out.fail("e^2 + h^2 != core sum");
      if (std::fabs(v[Ind::Q2] * v[Ind::Q2] - v[Ind::H] * v[Ind::M]) > 1e-9)
        out.fail("Q2^2 != h*m");
      if (std::fabs(v[Ind::Hg] * v[Ind::Hg] - v[Ind::H] * v[Ind::G]) > 1e-9)
        out.fail("hg^2 != h*g");
      if (std::fabs(v[Ind::AW] * v[Ind::AW] - v[Ind::AWCR]) > 1e-9) out.fail("AW^2 != AWCR");

      const long a = 1 + rng.below(60), b = 1 + rng.below(60), c = 1 + rng.below(60),
                 d = 1 + rng.below(60);
      const double fwd = *inference::odds_ratio(a, b, c, d);
      const double rev = *inference::odds_ratio(c, d, a, b);
      if (std::fabs(fwd * rev - 1.0) > 1e-9) out.fail("odds reciprocity");

      const double rr = -0.999 + 1.998 * rng.uniform();
      if (std::fabs(stats::fisher_z(-rr) + stats::fisher_z(rr)) > 1e-12)
        out.fail("fisher z oddness");

      std::vector<double> sample(1 + rng.below(40));
      for (auto& s : sample) s = 50.0 * rng.uniform() - 10.0;
      const auto box = report::boxplot_summary(sample);
      const double iqr = box.q3 - box.q1;
      if (std::fabs(box.upper_whisker - std::min(box.max, box.q3 + 1.5 * iqr)) > 1e-9)
        out.fail("upper whisker identity");
      if (std::fabs(box.lower_whisker - std::max(box.min, box.q1 - 1.5 * iqr)) > 1e-9)
        out.fail("lower whisker identity");
    }
  });

  // 11. full pipeline on the 741-researcher synthetic corpus, twice, and the
  //     emitted importance table is well formed
  criterion(11, "end-to-end synthetic run", 60000.0, [&](Outcome& out) {
    const auto dir = temp_dir("e2e");
    synth::SynthSpec spec = synth::default_synth_spec();
    spec.seed = 42;
    const Corpus corpus = synth_corpus(spec);
    if (corpus.researchers.size() != 741)
      out.fail("synthetic corpus has " + std::to_string(corpus.researchers.size()) +
               " researchers");
    save_corpus(corpus, dir + "/corpus.json");

    for (const char* run : {"a", "b"}) {
      pipeline::RunConfig cfg;
      cfg.input = dir + "/corpus.json";
      cfg.out = dir + "/" + run;
      cfg.cluster.k = 4;  // the four-tier segmentation this pipeline targets
      cfg.report.svg = true;
      cfg.quiet = true;
      std::ostringstream log;
      const auto result = pipeline::run_pipeline(cfg, log);
      if (result.exit_code != 0) {
        out.fail("pipeline exit " + std::to_string(result.exit_code) + " at stage " +
                 result.failed_stage);
        return;
      }
    }
    for (const char* name :
         {"indicators.tsv", "clusters.json", "assignments.tsv", "profile_table.tsv",
          "importance.tsv", "posthoc.json", "odds.tsv", "regression.json", "boxplots.json",
          "ph_ratio.json", "boxplots.svg"}) {
      if (!fs::exists(dir + "/a/" + std::string(name))) out.fail(std::string(name) + " missing");
    }
    // deterministic report set: the two runs must be byte-identical
    for (const auto& entry : fs::directory_iterator(dir + "/a")) {
      const auto name = entry.path().filename().string();
      std::ifstream fa(dir + "/a/" + name, std::ios::binary);
      std::ifstream fb(dir + "/b/" + name, std::ios::binary);
      std::string ca((std::istreambuf_iterator<char>(fa)), {});
      std::string cb((std::istreambuf_iterator<char>(fb)), {});
      if (ca != cb) out.fail(name + " differs between identical runs");
    }
    // importance: all 44 indicators present with importance in [0,1]
    std::ifstream imp(dir + "/a/importance.tsv");
    std::string line;
    std::getline(imp, line);
    int rows = 0;
    while (std::getline(imp, line)) {
      if (line.empty()) continue;
      ++rows;
      const auto fields = io::split_tsv_row(line);
      const double importance = std::stod(fields.back());
      if (!(importance >= 0.0 && importance <= 1.0))
        out.fail("importance out of range for " + fields.front());
    }
    if (rows != kIndicatorCount)
      out.fail("importance table has " + std::to_string(rows) + " rows");
  });

  if (g_failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
