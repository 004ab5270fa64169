#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "scimetric/corpus.hpp"
#include "scimetric/errors.hpp"
#include "scimetric/indicators.hpp"
#include "scimetric/inference.hpp"
#include "scimetric/io.hpp"
#include "scimetric/report.hpp"
#include "scimetric/stats.hpp"
#include "scimetric/synth.hpp"
#include "scimetric/twostep.hpp"

namespace scimetric::pipeline {

// --- configuration -----------------------------------------------------------

struct ClusterConfig {
  std::optional<int> k;  // nullopt = auto
  std::vector<std::string> variables;
  bool log10 = false;
  bool standardize = true;
  twostep::CfTreeOptions tree;
  twostep::SelectKOptions selection;
  int j_max = 15;
};

struct InferenceConfig {
  double posthoc_alpha = 0.001;
  inference::ImportanceScale importance_scale = inference::ImportanceScale::OneMinusP;
  bool regression_age = true;
  bool regression_seniority = true;
  double ci_level = 0.95;
  std::string corr_diff = "P:C";  // indicator pair for the Fisher-z comparison
  bool corr_log10 = true;
};

struct ReportCfg {
  stats::QuantileMethod quartile_method = stats::QuantileMethod::kType6;
  bool svg = false;
  std::vector<std::pair<std::string, std::string>> projections = {{"C", "h"}, {"Fc", "Fp"}};
  std::string ph_from = "C", ph_to = "h";
};

struct RunConfig {
  std::string input;
  CorpusFormat format = CorpusFormat::Json;
  std::string out = "out";
  std::optional<int> eval_year;
  std::uint64_t seed = 42;
  bool quiet = false;
  bool g_cap_at_p = false;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  ClusterConfig cluster;
  InferenceConfig inference;
  ReportCfg report;
};

/// Reads a JSON config whose keys mirror RunConfig; missing keys keep their
/// defaults. Command-line flags are applied on top by the CLI.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  RunConfig cfg;
  if (j.contains("input")) cfg.input = j["input"].get<std::string>();
  if (j.contains("format"))
    cfg.format = j["format"].get<std::string>() == "csv-bundle" ? CorpusFormat::CsvBundle
                                                                : CorpusFormat::Json;
  if (j.contains("out")) cfg.out = j["out"].get<std::string>();
  if (j.contains("eval_year")) cfg.eval_year = j["eval_year"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("quiet")) cfg.quiet = j["quiet"].get<bool>();
  if (j.contains("g_cap_at_p")) cfg.g_cap_at_p = j["g_cap_at_p"].get<bool>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("cluster")) {
    const auto& c = j["cluster"];
    if (c.contains("k") && !c["k"].is_null()) {
      if (c["k"].is_number_integer())
        cfg.cluster.k = c["k"].get<int>();
      else if (c["k"].get<std::string>() != "auto")
        throw ParseError(path + ": cluster.k must be \"auto\" or an integer");
    }
    if (c.contains("variables")) cfg.cluster.variables = c["variables"].get<std::vector<std::string>>();
    if (c.contains("log10")) cfg.cluster.log10 = c["log10"].get<bool>();
    if (c.contains("standardize")) cfg.cluster.standardize = c["standardize"].get<bool>();
    if (c.contains("tree_branching")) cfg.cluster.tree.branching = c["tree_branching"].get<int>();
    if (c.contains("tree_leaf")) cfg.cluster.tree.leaf_capacity = c["tree_leaf"].get<int>();
    if (c.contains("max_leaf_entries"))
      cfg.cluster.tree.max_leaf_entries = c["max_leaf_entries"].get<int>();
    if (c.contains("j_max")) cfg.cluster.j_max = c["j_max"].get<int>();
    if (c.contains("bic_cutoff"))
      cfg.cluster.selection.bic_improvement_cutoff = c["bic_cutoff"].get<double>();
    if (c.contains("dist_margin"))
      cfg.cluster.selection.distance_ratio_margin = c["dist_margin"].get<double>();
  }
  if (j.contains("inference")) {
    const auto& c = j["inference"];
    if (c.contains("posthoc_alpha")) cfg.inference.posthoc_alpha = c["posthoc_alpha"].get<double>();
    if (c.contains("importance_scale"))
      cfg.inference.importance_scale = c["importance_scale"].get<std::string>() == "neglog10"
                                           ? inference::ImportanceScale::NegLog10P
                                           : inference::ImportanceScale::OneMinusP;
    if (c.contains("regression")) {
      const std::string spec = c["regression"].get<std::string>();
      cfg.inference.regression_age = spec.find("age") != std::string::npos;
      cfg.inference.regression_seniority = spec.find("seniority") != std::string::npos;
    }
    if (c.contains("ci_level")) cfg.inference.ci_level = c["ci_level"].get<double>();
    if (c.contains("corr_diff")) cfg.inference.corr_diff = c["corr_diff"].get<std::string>();
    if (c.contains("corr_log10")) cfg.inference.corr_log10 = c["corr_log10"].get<bool>();
  }
  if (j.contains("report")) {
    const auto& c = j["report"];
    if (c.contains("quartile_method"))
      cfg.report.quartile_method = c["quartile_method"].get<std::string>() == "type7"
                                       ? stats::QuantileMethod::kType7
                                       : stats::QuantileMethod::kType6;
    if (c.contains("svg")) cfg.report.svg = c["svg"].get<bool>();
    if (c.contains("projections")) {
      cfg.report.projections.clear();
      for (const auto& pr : c["projections"])
        cfg.report.projections.emplace_back(pr[0].get<std::string>(), pr[1].get<std::string>());
    }
    if (c.contains("ph_from")) cfg.report.ph_from = c["ph_from"].get<std::string>();
    if (c.contains("ph_to")) cfg.report.ph_to = c["ph_to"].get<std::string>();
  }
  return cfg;
}

// --- pipeline ---------------------------------------------------------------------

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitComputation = 2;
inline constexpr int kExitIo = 3;

struct PipelineResult {
  int exit_code = kExitOk;
  std::string failed_stage;
  std::string message;
  std::vector<std::string> files;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e))
    return kExitValidation;
  return kExitComputation;
}

/// Builds the clustering input matrix from indicator rows.
inline Eigen::MatrixXd matrix_from_rows(const std::vector<IndicatorVector>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), kIndicatorCount);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < kIndicatorCount; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i].values[j];
  return m;
}

/// Canonical researcher order (sorted by id), matching indicator_matrix rows.
inline std::vector<const ResearcherProfile*> canonical_profiles(const Corpus& corpus) {
  std::vector<const ResearcherProfile*> out;
  out.reserve(corpus.researchers.size());
  for (const auto& r : corpus.researchers) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const ResearcherProfile* a, const ResearcherProfile* b) { return a->id < b->id; });
  return out;
}

inline twostep::TwoStepOptions twostep_options(const ClusterConfig& cfg) {
  twostep::TwoStepOptions opt;
  opt.fixed_k = cfg.k;
  opt.standardize = cfg.standardize;
  opt.log10_transform = cfg.log10;
  opt.variables = cfg.variables;
  opt.tree = cfg.tree;
  opt.selection = cfg.selection;
  opt.j_max = cfg.j_max;
  return opt;
}

/// validate -> indicators -> cluster -> inference -> report. Any stage failure
/// aborts with the stage name and mapped exit code; nothing is thrown.
inline PipelineResult run_pipeline(const RunConfig& cfg, std::ostream& log = std::cerr) {
  PipelineResult result;
  auto info = [&](const std::string& msg) {
    if (!cfg.quiet) log << "[scimetric] " << msg << "\n";
  };
  std::string stage = "validate";
  try {
    // stage 1: load + validate
    Corpus corpus = parse_corpus(cfg.input, cfg.format);
    if (cfg.eval_year) corpus.eval_year = *cfg.eval_year;
    info("validate: " + std::to_string(corpus.researchers.size()) + " researchers, eval year " +
         std::to_string(corpus.eval_year));

    // stage 2: indicators
    stage = "indicators";
    IndicatorOptions iopt;
    iopt.g_cap_at_p = cfg.g_cap_at_p;
    iopt.threads = cfg.threads;
    const auto rows = indicator_matrix(corpus, iopt);
    info("indicators: " + std::to_string(rows.size()) + " x " +
         std::to_string(kIndicatorCount) + " matrix");

    // stage 3: clustering
    stage = "cluster";
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (const auto& r : rows) ids.push_back(r.researcher_id);
    std::vector<std::string> names(indicator_names().begin(), indicator_names().end());
    const auto model = twostep::fit(matrix_from_rows(rows), ids, names, twostep_options(cfg.cluster));
    info("cluster: k = " + std::to_string(model.k) + ", silhouette = " +
         stats::format_number(model.silhouette) + " (" + twostep::to_string(model.fit_grade) + ")");
    for (const auto& w : model.warnings) info("cluster: warning: " + w);

    // stage 4: inference (degenerate cluster counts skip parts with a note)
    stage = "inference";
    report::ReportInputs inputs;
    inputs.matrix = &rows;
    inputs.model = &model;

    std::vector<inference::AnovaResult> importance;
    std::vector<inference::PosthocResult> posthoc;
    inference::OddsTable odds;
    std::optional<inference::OrdinalFit> regression;
    std::optional<inference::ParallelLinesTest> parallel;

    const auto profiles = canonical_profiles(corpus);
    std::vector<Seniority> seniorities;
    for (const auto* p : profiles) seniorities.push_back(p->seniority);

    if (model.k >= 2) {
      importance = inference::predictor_importance(rows, model.row_assignments,
                                                   cfg.inference.importance_scale);
      posthoc = inference::tamhane_t2(rows, model.row_assignments, cfg.inference.posthoc_alpha);
      odds = inference::odds_ratios(seniorities, model.row_assignments);
      inputs.importance = &importance;
      inputs.posthoc = &posthoc;
      inputs.odds = &odds;
    } else {
      inputs.notes.push_back("inference skipped: fewer than 2 clusters");
      info("inference: skipped (fewer than 2 clusters)");
    }
    if (model.k >= 3) {
      std::vector<double> ages;
      std::vector<int> codes;
      for (const auto* p : profiles) {
        ages.push_back(academic_age(*p, corpus.eval_year));
        codes.push_back(static_cast<int>(p->seniority));
      }
      try {
        const auto col = inference::collinearity_check(ages, codes);
        if (col.flagged)
          inputs.notes.push_back("collinearity: age/seniority PPMC = " +
                                 stats::format_number(col.ppmc) + "; regression discouraged");
        const auto design = inference::age_seniority_design(profiles, corpus.eval_year,
                                                            cfg.inference.regression_age,
                                                            cfg.inference.regression_seniority);
        inference::OrdinalOptions oopt;
        oopt.ci_level = cfg.inference.ci_level;
        regression = inference::fit_proportional_odds(model.row_assignments, design.x,
                                                      design.names, oopt);
        parallel = inference::parallel_lines_test(*regression, model.row_assignments, design.x,
                                                  oopt);
        inputs.regression = &*regression;
        inputs.parallel_lines = &*parallel;
        info("inference: regression " + std::string(regression->converged ? "converged" : "did not converge"));
      } catch (const ComputeError& e) {
        inputs.notes.push_back(std::string("regression skipped: ") + e.what());
        info(std::string("inference: regression skipped: ") + e.what());
      }
    } else {
      inputs.notes.push_back("regression skipped: fewer than 3 clusters");
    }

    // stage 5: report artifacts + emission
    stage = "report";
    std::vector<report::BoxplotSummary> boxplots;
    std::vector<std::string> row_ids;
    for (const auto& r : rows) row_ids.push_back(r.researcher_id);
    for (int j = 0; j < kIndicatorCount; ++j) {
      std::vector<double> col(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i].values[j];
      if (col.empty()) continue;
      auto s = report::boxplot_summary(col, cfg.report.quartile_method, row_ids);
      s.name = indicator_names()[j];
      boxplots.push_back(std::move(s));
    }
    if (!boxplots.empty()) inputs.boxplots = &boxplots;

    report::ProfileTable profile;
    std::vector<report::RankProjection> projections;
    std::optional<report::PhRatioAnalysis> ph;
    if (!rows.empty()) {
      profile = report::cluster_profile_table(rows, model.row_assignments);
      inputs.profile = &profile;
      for (const auto& [x, y] : cfg.report.projections)
        projections.push_back(report::rank_projection(rows, model.row_assignments, x, y));
      if (!projections.empty()) inputs.projections = &projections;
      ph = report::ph_ratio_analysis(rows, cfg.report.ph_from, cfg.report.ph_to);
      inputs.ph_analysis = &*ph;
    }

    report::ReportOptions ropt;
    ropt.svg = cfg.report.svg;
    result.files = report::emit_report(inputs, cfg.out, ropt);
    info("report: wrote " + std::to_string(result.files.size()) + " files to " + cfg.out);
  } catch (const std::exception& e) {
    result.exit_code = exit_code_for(e);
    result.failed_stage = stage;
    result.message = e.what();
    log << "[scimetric] stage " << stage << " failed: " << e.what() << "\n";
  }
  return result;
}

}  // namespace scimetric::pipeline
