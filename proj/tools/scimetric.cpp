// scimetric command-line front end: validate / indicators / cluster / infer /
// report / run / synth over researcher publication-citation corpora.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scimetric/corpus.hpp"
#include "scimetric/errors.hpp"
#include "scimetric/indicators.hpp"
#include "scimetric/inference.hpp"
#include "scimetric/io.hpp"
#include "scimetric/pipeline.hpp"
#include "scimetric/report.hpp"
#include "scimetric/stats.hpp"
#include "scimetric/synth.hpp"
#include "scimetric/twostep.hpp"

namespace {

using namespace scimetric;

int env_thread_cap() {
  const char* env = std::getenv("SCIMETRIC_THREADS");
  if (!env) return 0;
  const int v = std::atoi(env);
  return v > 0 ? v : 0;
}

Corpus load_corpus_raw(const std::string& path, CorpusFormat format) {
  if (format == CorpusFormat::CsvBundle) return parse_corpus_csv_bundle(path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return corpus_from_json(root);
}

CorpusFormat format_from_string(const std::string& s) {
  if (s == "json") return CorpusFormat::Json;
  if (s == "csv-bundle") return CorpusFormat::CsvBundle;
  throw ParseError("unknown corpus format \"" + s + "\"; allowed: json, csv-bundle");
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Shared CLI state; config file values are applied first, explicit flags win.
struct Cli {
  std::string input;
  std::string out = "out";
  std::string config;
  std::string format = "json";
  int eval_year = 0;
  std::uint64_t seed = 42;
  bool quiet = false;

  CLI::Option* input_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* eval_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* quiet_opt = nullptr;
  CLI::Option* format_opt = nullptr;

  void attach(CLI::App* cmd) {
    input_opt = cmd->add_option("--input", input, "corpus file (JSON) or CSV-bundle directory");
    out_opt = cmd->add_option("--out", out, "output directory");
    cmd->add_option("--config", config, "JSON config file; flags override its keys");
    format_opt = cmd->add_option("--format", format, "corpus format: json or csv-bundle");
    eval_opt = cmd->add_option("--eval-year", eval_year, "override the corpus evaluation year");
    seed_opt = cmd->add_option("--seed", seed, "seed for synthetic data generation");
    quiet_opt = cmd->add_flag("--quiet", quiet, "suppress progress messages");
  }

  pipeline::RunConfig to_run_config() const {
    pipeline::RunConfig cfg;
    if (!config.empty()) cfg = pipeline::load_config(config);
    if (input_opt->count()) cfg.input = input;
    if (out_opt->count()) cfg.out = out;
    if (format_opt->count()) cfg.format = format_from_string(format);
    if (eval_opt->count()) cfg.eval_year = eval_year;
    if (seed_opt->count()) cfg.seed = seed;
    if (quiet_opt->count()) cfg.quiet = quiet;
    if (const int cap = env_thread_cap(); cap > 0)
      cfg.threads = std::min(std::max(cfg.threads, 1), cap);
    return cfg;
  }
};

struct ClusterFlags {
  std::string k = "auto";
  std::string variables;
  bool log10 = false;
  bool standardize = true;
  int tree_branching = 0;
  int tree_leaf = 0;
  int max_leaf_entries = 0;
  CLI::Option* standardize_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--k", k, "cluster count: auto or a fixed integer");
    cmd->add_option("--variables", variables, "comma list of indicator names to cluster on");
    cmd->add_flag("--log10", log10, "log10(x+1)-transform variables before clustering");
    standardize_opt = cmd->add_flag("--standardize,!--no-standardize", standardize,
                                    "z-standardize variables (default on)");
    cmd->add_option("--tree-branching", tree_branching, "CF-tree branching factor");
    cmd->add_option("--tree-leaf", tree_leaf, "CF-tree leaf capacity");
    cmd->add_option("--max-leaf-entries", max_leaf_entries, "CF-tree global entry budget");
  }

  void apply(pipeline::ClusterConfig& cfg) const {
    if (k != "auto") {
      try {
        cfg.k = std::stoi(k);
      } catch (...) {
        throw ParseError("--k expects \"auto\" or an integer, got \"" + k + "\"");
      }
    }
    if (!variables.empty()) cfg.variables = split_list(variables);
    if (log10) cfg.log10 = true;
    if (standardize_opt && standardize_opt->count()) cfg.standardize = standardize;
    if (tree_branching > 0) cfg.tree.branching = tree_branching;
    if (tree_leaf > 0) cfg.tree.leaf_capacity = tree_leaf;
    if (max_leaf_entries > 0) cfg.tree.max_leaf_entries = max_leaf_entries;
  }
};

struct MatrixBundle {
  std::vector<IndicatorVector> rows;
  std::vector<int> assignments;  // aligned with rows, 1..k
  int k = 0;
};

std::vector<int> align_assignments(const std::vector<IndicatorVector>& rows,
                                   const std::map<std::string, int>& by_id) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    auto it = by_id.find(r.researcher_id);
    if (it == by_id.end())
      throw ComputeError("no cluster assignment for researcher " + r.researcher_id);
    out.push_back(it->second);
  }
  return out;
}

void print_importance_table(const std::vector<inference::AnovaResult>& results) {
  std::printf("%-20s %12s %8s %12s %12s\n", "indicator", "F", "df", "p", "importance");
  for (const auto& r : results)
    std::printf("%-20s %12.4g %8.4g %12.4g %12.6f\n", r.indicator.c_str(), r.F, r.df_within, r.p,
                r.importance);
}

void print_odds_table(const inference::OddsTable& table) {
  std::printf("%-15s", "seniority");
  for (int c = 1; c <= table.k; ++c) std::printf("  %10s %8s", ("%inC" + std::to_string(c)).c_str(), "OR");
  std::printf("\n");
  for (Seniority s : all_seniorities()) {
    std::printf("%-15s", to_string(s).c_str());
    for (const auto& cell : table.cells) {
      if (cell.seniority != s) continue;
      if (cell.odds_ratio)
        std::printf("  %10.1f %8.2f", cell.pct_within_seniority, *cell.odds_ratio);
      else
        std::printf("  %10.1f %8s", cell.pct_within_seniority, "-");
    }
    std::printf("\n");
  }
}

void print_regression(const inference::OrdinalFit& fit, const inference::ParallelLinesTest* pl) {
  std::printf("proportional-odds fit: n=%d, levels=%d, %s (%d iterations)\n", fit.n, fit.k,
              fit.converged ? "converged" : "NOT converged", fit.iterations);
  if (!fit.diagnostic.empty()) std::printf("  note: %s\n", fit.diagnostic.c_str());
  std::printf("  LL(model)=%.4f LL(null)=%.4f  McFadden=%.3f Cox-Snell=%.3f Nagelkerke=%.3f\n",
              fit.ll_model, fit.ll_null, fit.mcfadden, fit.cox_snell, fit.nagelkerke);
  std::printf("  %-22s %10s %8s %10s %10s %8s %18s\n", "predictor", "beta", "se", "wald chi2",
              "p", "OR", "95% CI");
  for (const auto& c : fit.coefficients)
    std::printf("  %-22s %10.4f %8.4f %10.3f %10.4g %8.3f [%8.3f, %8.3f]\n", c.name.c_str(),
                c.beta, c.se, c.wald_chi2, c.p, c.odds_ratio, c.ci_low, c.ci_high);
  if (pl) {
    if (pl->inconclusive)
      std::printf("  parallel lines: inconclusive (%s)\n", pl->note.c_str());
    else
      std::printf("  parallel lines: LR=%.3f df=%.0f p=%.4g\n", pl->lr, pl->df, pl->p);
  }
}

int cmd_validate(const Cli& cli) {
  const auto cfg = cli.to_run_config();
  Corpus corpus = load_corpus_raw(cfg.input, cfg.format);
  if (cfg.eval_year) corpus.eval_year = *cfg.eval_year;
  const ValidationReport report = validate(corpus);
  if (report.ok()) {
    if (!cfg.quiet)
      std::printf("ok: %zu researchers, eval year %d\n", corpus.researchers.size(),
                  corpus.eval_year);
    return pipeline::kExitOk;
  }
  for (const auto& v : report.violations)
    std::printf("%s\t%s\t%s\n", v.researcher_id.c_str(), v.publication_id.c_str(), v.rule.c_str());
  return pipeline::kExitValidation;
}

int cmd_indicators(const Cli& cli, const std::string& columns, const std::string& out_format,
                   const std::string& output, bool g_cap_at_p) {
  const auto cfg = cli.to_run_config();
  Corpus corpus = parse_corpus(cfg.input, cfg.format);
  if (cfg.eval_year) corpus.eval_year = *cfg.eval_year;
  IndicatorOptions opt;
  opt.g_cap_at_p = g_cap_at_p || cfg.g_cap_at_p;
  opt.threads = cfg.threads;
  const auto rows = indicator_matrix(corpus, opt);

  std::vector<Ind> cols;
  if (columns.empty()) {
    cols = io::all_indicator_columns();
  } else {
    for (const auto& name : split_list(columns)) cols.push_back(indicator_from_name(name));
  }

  std::string content;
  if (out_format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json jr;
      jr["researcher_id"] = r.researcher_id;
      jr["academic_age"] = r.academic_age;
      for (Ind c : cols) jr[indicator_name(c)] = r[c];
      nlohmann::json degenerate = nlohmann::json::array();
      for (Ind c : cols)
        if (r.is_degenerate(c)) degenerate.push_back(indicator_name(c));
      if (!degenerate.empty()) jr["degenerate"] = degenerate;
      arr.push_back(std::move(jr));
    }
    content = arr.dump(2) + "\n";
  } else if (out_format == "tsv") {
    content = io::matrix_to_tsv(rows, cols);
  } else {
    throw ParseError("unknown output format \"" + out_format + "\"; allowed: tsv, json");
  }
  if (output.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    io::write_file(output, content);
    if (!cfg.quiet) std::printf("wrote %s\n", output.c_str());
  }
  return pipeline::kExitOk;
}

MatrixBundle compute_or_load_matrix(const pipeline::RunConfig& cfg, const std::string& matrix_path) {
  MatrixBundle bundle;
  if (!matrix_path.empty()) {
    bundle.rows = io::load_matrix_tsv(matrix_path);
  } else {
    Corpus corpus = parse_corpus(cfg.input, cfg.format);
    if (cfg.eval_year) corpus.eval_year = *cfg.eval_year;
    IndicatorOptions opt;
    opt.g_cap_at_p = cfg.g_cap_at_p;
    opt.threads = cfg.threads;
    bundle.rows = indicator_matrix(corpus, opt);
  }
  return bundle;
}

int cmd_cluster(const Cli& cli, const ClusterFlags& flags, const std::string& matrix_path) {
  auto cfg = cli.to_run_config();
  flags.apply(cfg.cluster);
  MatrixBundle bundle = compute_or_load_matrix(cfg, matrix_path);

  std::vector<std::string> ids;
  for (const auto& r : bundle.rows) ids.push_back(r.researcher_id);
  std::vector<std::string> names(indicator_names().begin(), indicator_names().end());
  const auto model = twostep::fit(pipeline::matrix_from_rows(bundle.rows), ids, names,
                                  pipeline::twostep_options(cfg.cluster));

  std::filesystem::create_directories(cfg.out);
  io::write_file(cfg.out + "/assignments.tsv", io::assignments_to_tsv(model.assignments));
  io::write_file(cfg.out + "/clusters.json", report::cluster_model_json(model).dump(2));
  if (!cfg.quiet)
    std::printf("k = %d, silhouette = %.4f (%s); wrote %s/assignments.tsv, %s/clusters.json\n",
                model.k, model.silhouette, twostep::to_string(model.fit_grade), cfg.out.c_str(),
                cfg.out.c_str());
  return pipeline::kExitOk;
}

int cmd_infer(const Cli& cli, const std::string& matrix_path, const std::string& assignments_path,
              bool do_importance, bool do_posthoc, const std::string& posthoc_arg, bool do_odds,
              bool do_regression, const std::string& regression_arg, bool do_parallel,
              const std::string& corr_pair, const std::string& importance_scale,
              const ClusterFlags& cluster_flags) {
  auto cfg = cli.to_run_config();
  cluster_flags.apply(cfg.cluster);
  if (!importance_scale.empty())
    cfg.inference.importance_scale = importance_scale == "neglog10"
                                         ? inference::ImportanceScale::NegLog10P
                                         : inference::ImportanceScale::OneMinusP;
  const bool all = !do_importance && !do_posthoc && !do_odds && !do_regression && !do_parallel &&
                   corr_pair.empty();

  // corpus is needed for seniority/age; matrix/assignments may come from files
  std::optional<Corpus> corpus;
  if (!cfg.input.empty()) {
    corpus = parse_corpus(cfg.input, cfg.format);
    if (cfg.eval_year) corpus->eval_year = *cfg.eval_year;
  }
  MatrixBundle bundle;
  if (!matrix_path.empty()) {
    bundle.rows = io::load_matrix_tsv(matrix_path);
  } else if (corpus) {
    IndicatorOptions opt;
    opt.g_cap_at_p = cfg.g_cap_at_p;
    opt.threads = cfg.threads;
    bundle.rows = indicator_matrix(*corpus, opt);
  } else {
    throw ComputeError("infer needs --input or --matrix");
  }
  if (!assignments_path.empty()) {
    bundle.assignments = align_assignments(bundle.rows, io::load_assignments_tsv(assignments_path));
  } else {
    std::vector<std::string> ids;
    for (const auto& r : bundle.rows) ids.push_back(r.researcher_id);
    std::vector<std::string> names(indicator_names().begin(), indicator_names().end());
    const auto model = twostep::fit(pipeline::matrix_from_rows(bundle.rows), ids, names,
                                    pipeline::twostep_options(cfg.cluster));
    bundle.assignments = model.row_assignments;
  }
  for (int a : bundle.assignments) bundle.k = std::max(bundle.k, a);

  std::filesystem::create_directories(cfg.out);
  if (all || do_importance) {
    const auto importance = inference::predictor_importance(bundle.rows, bundle.assignments,
                                                            cfg.inference.importance_scale);
    print_importance_table(importance);
    report::ReportInputs inputs;
    inputs.importance = &importance;
    report::emit_report(inputs, cfg.out);
  }
  if (all || do_posthoc) {
    double alpha = cfg.inference.posthoc_alpha;
    if (posthoc_arg.rfind("alpha=", 0) == 0) alpha = std::stod(posthoc_arg.substr(6));
    const auto posthoc = inference::tamhane_t2(bundle.rows, bundle.assignments, alpha);
    int significant = 0, skipped = 0;
    for (const auto& res : posthoc)
      for (const auto& p : res.pairs) {
        significant += p.significant ? 1 : 0;
        skipped += p.skipped ? 1 : 0;
      }
    std::printf("posthoc: %d significant pairs, %d skipped (alpha=%g, Sidak-adjusted)\n",
                significant, skipped, alpha);
    report::ReportInputs inputs;
    inputs.posthoc = &posthoc;
    report::emit_report(inputs, cfg.out);
  }
  if (all || do_odds) {
    if (!corpus) throw ComputeError("--odds needs --input (seniorities come from the corpus)");
    const auto profiles = pipeline::canonical_profiles(*corpus);
    std::vector<Seniority> seniorities;
    for (const auto* p : profiles) seniorities.push_back(p->seniority);
    if (profiles.size() != bundle.rows.size())
      throw ComputeError("corpus and matrix cover different researchers");
    const auto odds = inference::odds_ratios(seniorities, bundle.assignments);
    print_odds_table(odds);
    report::ReportInputs inputs;
    inputs.odds = &odds;
    report::emit_report(inputs, cfg.out);
  }
  if (all || do_regression || do_parallel) {
    if (!corpus) throw ComputeError("--regression needs --input");
    std::string spec = regression_arg.empty() ? "age+seniority" : regression_arg;
    const bool use_age = spec.find("age") != std::string::npos;
    const bool use_sen = spec.find("seniority") != std::string::npos;
    const auto profiles = pipeline::canonical_profiles(*corpus);
    const auto design =
        inference::age_seniority_design(profiles, corpus->eval_year, use_age, use_sen);
    inference::OrdinalOptions oopt;
    oopt.ci_level = cfg.inference.ci_level;
    const auto fit =
        inference::fit_proportional_odds(bundle.assignments, design.x, design.names, oopt);
    const auto pl = inference::parallel_lines_test(fit, bundle.assignments, design.x, oopt);
    print_regression(fit, &pl);
    report::ReportInputs inputs;
    inputs.regression = &fit;
    inputs.parallel_lines = &pl;
    report::emit_report(inputs, cfg.out);
  }
  if (all || !corr_pair.empty()) {
    const std::string pair = corr_pair.empty() ? cfg.inference.corr_diff : corr_pair;
    const auto sep = pair.find(':');
    if (sep == std::string::npos)
      throw ParseError("--corr-diff expects a pair like P:C, got \"" + pair + "\"");
    const Ind xi = indicator_from_name(pair.substr(0, sep));
    const Ind yi = indicator_from_name(pair.substr(sep + 1));
    std::vector<double> vx, vy, cl;
    for (std::size_t i = 0; i < bundle.rows.size(); ++i) {
      double a = bundle.rows[i][xi], b = bundle.rows[i][yi];
      if (cfg.inference.corr_log10) {
        a = std::log10(a + 1.0);
        b = std::log10(b + 1.0);
      }
      vx.push_back(a);
      vy.push_back(b);
      cl.push_back(bundle.assignments[i]);
    }
    const auto diff = inference::correlation_difference(vx, cl, vy, cl);
    std::printf("corr-diff %s: r1=%.3f (z=%.3f, n=%ld) r2=%.3f (z=%.3f, n=%ld) Z_obs=%.3f -> %s\n",
                pair.c_str(), diff.r1, diff.z1, diff.n1, diff.r2, diff.z2, diff.n2, diff.z_obs,
                diff.no_real_difference ? "no real difference" : "difference");
    nlohmann::json j = {{"pair", pair},           {"r1", diff.r1},
                        {"r2", diff.r2},          {"z1", diff.z1},
                        {"z2", diff.z2},          {"z_obs", diff.z_obs},
                        {"n1", diff.n1},          {"n2", diff.n2},
                        {"no_real_difference", diff.no_real_difference}};
    io::write_file(cfg.out + "/corr_diff.json", j.dump(2));
  }
  return pipeline::kExitOk;
}

/// Report straight from intermediate files: the matrix TSV (and optionally an
/// assignments TSV) stand in for the indicator and cluster stages. Artifacts
/// that need the corpus (odds, regression) are included only when --input is
/// also given.
int cmd_report_from_intermediates(const pipeline::RunConfig& cfg, const std::string& matrix_path,
                                  const std::string& assignments_path) {
  auto rows = io::load_matrix_tsv(matrix_path);
  std::vector<int> assignments;
  std::optional<twostep::ClusterModel> model;
  if (!assignments_path.empty()) {
    assignments = align_assignments(rows, io::load_assignments_tsv(assignments_path));
  } else {
    std::vector<std::string> ids;
    for (const auto& r : rows) ids.push_back(r.researcher_id);
    std::vector<std::string> names(indicator_names().begin(), indicator_names().end());
    model = twostep::fit(pipeline::matrix_from_rows(rows), ids, names,
                         pipeline::twostep_options(cfg.cluster));
    assignments = model->row_assignments;
  }
  int k = 0;
  for (int a : assignments) k = std::max(k, a);

  report::ReportInputs inputs;
  inputs.matrix = &rows;
  if (model) inputs.model = &*model;

  std::vector<inference::AnovaResult> importance;
  std::vector<inference::PosthocResult> posthoc;
  inference::OddsTable odds;
  std::optional<inference::OrdinalFit> regression;
  std::optional<inference::ParallelLinesTest> parallel;
  if (k >= 2) {
    importance = inference::predictor_importance(rows, assignments,
                                                 cfg.inference.importance_scale);
    posthoc = inference::tamhane_t2(rows, assignments, cfg.inference.posthoc_alpha);
    inputs.importance = &importance;
    inputs.posthoc = &posthoc;
  }
  std::optional<Corpus> corpus;
  if (!cfg.input.empty()) {
    corpus = parse_corpus(cfg.input, cfg.format);
    if (cfg.eval_year) corpus->eval_year = *cfg.eval_year;
    const auto profiles = pipeline::canonical_profiles(*corpus);
    if (profiles.size() == rows.size() && k >= 2) {
      std::vector<Seniority> seniorities;
      for (const auto* p : profiles) seniorities.push_back(p->seniority);
      odds = inference::odds_ratios(seniorities, assignments);
      inputs.odds = &odds;
      if (k >= 3) {
        const auto design = inference::age_seniority_design(profiles, corpus->eval_year,
                                                            cfg.inference.regression_age,
                                                            cfg.inference.regression_seniority);
        inference::OrdinalOptions oopt;
        oopt.ci_level = cfg.inference.ci_level;
        regression = inference::fit_proportional_odds(assignments, design.x, design.names, oopt);
        parallel = inference::parallel_lines_test(*regression, assignments, design.x, oopt);
        inputs.regression = &*regression;
        inputs.parallel_lines = &*parallel;
      }
    }
  }

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
    profile = report::cluster_profile_table(rows, assignments);
    inputs.profile = &profile;
    for (const auto& [x, y] : cfg.report.projections)
      projections.push_back(report::rank_projection(rows, assignments, x, y));
    if (!projections.empty()) inputs.projections = &projections;
    ph = report::ph_ratio_analysis(rows, cfg.report.ph_from, cfg.report.ph_to);
    inputs.ph_analysis = &*ph;
  }

  report::ReportOptions ropt;
  ropt.svg = cfg.report.svg;
  const auto files = report::emit_report(inputs, cfg.out, ropt);
  if (!model) {
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < rows.size(); ++i) by_id[rows[i].researcher_id] = assignments[i];
    io::write_file(cfg.out + "/assignments.tsv", io::assignments_to_tsv(by_id));
  }
  if (!cfg.quiet)
    std::printf("wrote %zu report files to %s\n", files.size() + (model ? 0 : 1),
                cfg.out.c_str());
  return pipeline::kExitOk;
}

int cmd_synth(const Cli& cli, const std::string& spec_path, double scale,
              const std::string& output) {
  const auto cfg = cli.to_run_config();
  synth::SynthSpec spec = synth::default_synth_spec();
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw IoError("cannot open " + spec_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(spec_path + ": " + e.what());
    }
    spec.groups.clear();
    if (j.contains("eval_year")) spec.eval_year = j["eval_year"].get<int>();
    if (j.contains("baselines"))
      for (auto& [name, v] : j["baselines"].items()) spec.baselines[name] = v.get<double>();
    for (const auto& jg : j.at("groups")) {
      synth::GroupSpec g;
      g.discipline = parse_discipline(jg.at("discipline").get<std::string>());
      g.seniority = parse_seniority(jg.at("seniority").get<std::string>());
      g.count = jg.at("count").get<int>();
      g.pub_median = jg.at("pub_median").get<double>();
      g.pub_min = jg.value("pub_min", 1);
      g.pub_max = jg.value("pub_max", 1000);
      g.cit_median = jg.at("cit_median").get<double>();
      g.cit_min = jg.value("cit_min", 0);
      g.cit_max = jg.value("cit_max", 100000);
      g.age_min = jg.value("age_min", 1);
      g.age_max = jg.value("age_max", 30);
      g.authors_mean = jg.value("authors_mean", 3.0);
      spec.groups.push_back(g);
    }
  }
  spec.seed = cfg.seed;
  if (scale != 1.0)
    for (auto& g : spec.groups) g.count = static_cast<int>(std::lround(g.count * scale));

  const Corpus corpus = synth_corpus(spec);
  std::string path = output;
  if (path.empty()) {
    std::filesystem::create_directories(cfg.out);
    path = cfg.out + "/synthetic_corpus.json";
  }
  save_corpus(corpus, path);
  if (!cfg.quiet) {
    std::size_t pubs = 0;
    for (const auto& r : corpus.researchers) pubs += r.publications.size();
    std::printf("wrote %s: %zu researchers, %zu publications (seed %llu)\n", path.c_str(),
                corpus.researchers.size(), pubs,
                static_cast<unsigned long long>(spec.seed));
  }
  return pipeline::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"author-level bibliometric indicators, two-step clustering and inference"};
  app.require_subcommand(1);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check corpus invariants");
  Cli validate_cli;
  validate_cli.attach(validate_cmd);

  // indicators
  auto* ind_cmd = app.add_subcommand("indicators", "compute the indicator matrix");
  Cli ind_cli;
  ind_cli.attach(ind_cmd);
  std::string ind_columns, ind_format = "tsv", ind_output;
  bool ind_gcap = false;
  ind_cmd->add_option("--indicators", ind_columns, "comma list of columns (default: all 44)");
  ind_cmd->add_option("--output-format", ind_format, "tsv (default) or json");
  ind_cmd->add_option("--output", ind_output, "write to file instead of stdout");
  ind_cmd->add_flag("--g-cap-at-p", ind_gcap, "cap the g-index at P instead of zero-padding");

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "two-step cluster analysis");
  Cli cluster_cli;
  cluster_cli.attach(cluster_cmd);
  ClusterFlags cluster_flags;
  cluster_flags.attach(cluster_cmd);
  std::string cluster_matrix;
  cluster_cmd->add_option("--matrix", cluster_matrix, "indicator matrix TSV (skip recomputation)");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "cluster-membership statistics");
  Cli infer_cli;
  infer_cli.attach(infer_cmd);
  ClusterFlags infer_cluster_flags;
  infer_cluster_flags.attach(infer_cmd);
  std::string infer_matrix, infer_assignments, infer_posthoc, infer_regression, infer_corr,
      infer_scale;
  bool infer_importance = false, infer_odds = false, infer_parallel = false;
  infer_cmd->add_option("--matrix", infer_matrix, "indicator matrix TSV");
  infer_cmd->add_option("--assignments", infer_assignments, "assignments TSV from `cluster`");
  infer_cmd->add_flag("--importance", infer_importance, "predictor importance (one-way F tests)");
  auto* posthoc_opt =
      infer_cmd->add_option("--posthoc", infer_posthoc, "Tamhane T2 post hoc, e.g. alpha=0.001")
          ->expected(0, 1);
  infer_cmd->add_flag("--odds", infer_odds, "seniority x cluster odds ratios");
  auto* regression_opt = infer_cmd
                             ->add_option("--regression", infer_regression,
                                          "proportional-odds regression, e.g. age+seniority")
                             ->expected(0, 1);
  infer_cmd->add_flag("--parallel-lines", infer_parallel, "test the proportional-odds assumption");
  infer_cmd->add_option("--corr-diff", infer_corr, "Fisher-z comparison of two indicators, e.g. P:C");
  infer_cmd->add_option("--importance-scale", infer_scale, "one_minus_p (default) or neglog10");

  // report
  auto* report_cmd = app.add_subcommand("report", "emit the full report file set");
  Cli report_cli;
  report_cli.attach(report_cmd);
  ClusterFlags report_cluster_flags;
  report_cluster_flags.attach(report_cmd);
  bool report_svg = false;
  std::string report_quartiles, report_matrix, report_assignments;
  report_cmd->add_flag("--svg", report_svg, "also render SVG boxplots/projections");
  report_cmd->add_option("--quartile-method", report_quartiles, "type6 (default) or type7");
  report_cmd->add_option("--matrix", report_matrix, "indicator matrix TSV (skip recomputation)");
  report_cmd->add_option("--assignments", report_assignments, "assignments TSV from `cluster`");

  // run
  auto* run_cmd = app.add_subcommand("run", "full pipeline: validate through report");
  Cli run_cli;
  run_cli.attach(run_cmd);
  ClusterFlags run_cluster_flags;
  run_cluster_flags.attach(run_cmd);
  bool run_svg = false, run_gcap = false;
  std::string run_quartiles, run_discipline;
  run_cmd->add_flag("--svg", run_svg, "also render SVG boxplots/projections");
  run_cmd->add_option("--quartile-method", run_quartiles, "type6 (default) or type7");
  run_cmd->add_flag("--g-cap-at-p", run_gcap, "cap the g-index at P instead of zero-padding");
  run_cmd->add_option("--discipline", run_discipline, "restrict the run to one discipline");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a deterministic synthetic corpus");
  Cli synth_cli;
  synth_cli.attach(synth_cmd);
  std::string synth_spec, synth_output;
  double synth_scale = 1.0;
  synth_cmd->add_option("--spec", synth_spec, "group spec JSON (default: built-in profile)");
  synth_cmd->add_option("--scale", synth_scale, "multiply all group sizes");
  synth_cmd->add_option("--output", synth_output, "output corpus path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) return cmd_validate(validate_cli);
    if (ind_cmd->parsed())
      return cmd_indicators(ind_cli, ind_columns, ind_format, ind_output, ind_gcap);
    if (cluster_cmd->parsed()) return cmd_cluster(cluster_cli, cluster_flags, cluster_matrix);
    if (infer_cmd->parsed())
      return cmd_infer(infer_cli, infer_matrix, infer_assignments, infer_importance,
                       posthoc_opt->count() > 0, infer_posthoc, infer_odds,
                       regression_opt->count() > 0, infer_regression, infer_parallel, infer_corr,
                       infer_scale, infer_cluster_flags);
    if (report_cmd->parsed() || run_cmd->parsed()) {
      const bool is_run = run_cmd->parsed();
      auto cfg = is_run ? run_cli.to_run_config() : report_cli.to_run_config();
      (is_run ? run_cluster_flags : report_cluster_flags).apply(cfg.cluster);
      const bool svg = is_run ? run_svg : report_svg;
      const std::string quartiles = is_run ? run_quartiles : report_quartiles;
      if (svg) cfg.report.svg = true;
      if (!quartiles.empty())
        cfg.report.quartile_method = quartiles == "type7" ? stats::QuantileMethod::kType7
                                                          : stats::QuantileMethod::kType6;
      if (!is_run && !report_matrix.empty())
        return cmd_report_from_intermediates(cfg, report_matrix, report_assignments);
      if (is_run) cfg.g_cap_at_p = cfg.g_cap_at_p || run_gcap;
      if (is_run && !run_discipline.empty()) {
        // filter to one discipline through a temp corpus file
        Corpus corpus = parse_corpus(cfg.input, cfg.format);
        const Discipline want = parse_discipline(run_discipline);
        Corpus filtered;
        filtered.eval_year = corpus.eval_year;
        filtered.baselines = corpus.baselines;
        for (auto& r : corpus.researchers)
          if (r.discipline == want) filtered.researchers.push_back(std::move(r));
        std::filesystem::create_directories(cfg.out);
        const std::string tmp = cfg.out + "/corpus_" + run_discipline + ".json";
        save_corpus(filtered, tmp);
        cfg.input = tmp;
        cfg.format = CorpusFormat::Json;
      }
      return pipeline::run_pipeline(cfg).exit_code;
    }
    if (synth_cmd->parsed()) return cmd_synth(synth_cli, synth_spec, synth_scale, synth_output);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return pipeline::exit_code_for(e);
  }
  return pipeline::kExitOk;
}
