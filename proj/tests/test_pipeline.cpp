#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scimetric/pipeline.hpp"
#include "scimetric/synth.hpp"

using namespace scimetric;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("scimetric_pipeline_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SCIMETRIC_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string small_synth_corpus(const std::string& dir, std::uint64_t seed = 11) {
  synth::SynthSpec spec = synth::default_synth_spec();
  for (auto& g : spec.groups) g.count = std::max(1, g.count / 10);
  spec.seed = seed;
  const Corpus corpus = synth_corpus(spec);
  const std::string path = dir + "/synth.json";
  save_corpus(corpus, path);
  return path;
}

}  // namespace

TEST_CASE("pipeline: d1 with k = 1 completes on the degenerate path") {
  const auto dir = temp_dir("d1_k1");
  pipeline::RunConfig cfg;
  cfg.input = std::string(FIXTURES_DIR) + "/d1.json";
  cfg.out = dir + "/out";
  cfg.cluster.k = 1;
  cfg.quiet = true;
  std::ostringstream log;
  const auto result = pipeline::run_pipeline(cfg, log);
  REQUIRE(result.exit_code == pipeline::kExitOk);
  REQUIRE(fs::exists(cfg.out + "/indicators.tsv"));
  REQUIRE(fs::exists(cfg.out + "/clusters.json"));
  const auto clusters = nlohmann::json::parse(slurp(cfg.out + "/clusters.json"));
  REQUIRE(clusters["k"] == 1);
  REQUIRE_FALSE(clusters["warnings"].empty());  // single researcher: degenerate model
}

TEST_CASE("pipeline: missing input exits with the I/O code") {
  pipeline::RunConfig cfg;
  cfg.input = "/nonexistent/corpus.json";
  cfg.out = temp_dir("missing") + "/out";
  cfg.quiet = true;
  std::ostringstream log;
  const auto result = pipeline::run_pipeline(cfg, log);
  REQUIRE(result.exit_code == pipeline::kExitIo);
  REQUIRE(result.failed_stage == "validate");
  REQUIRE_THAT(result.message, Catch::Matchers::ContainsSubstring("corpus.json"));
}

TEST_CASE("pipeline: invalid corpus exits with the validation code") {
  const auto dir = temp_dir("invalid");
  {
    std::ofstream out(dir + "/bad.json");
    out << R"({"eval_year": 2020, "researchers": [{"id": "X", "discipline": "Philosophy",
      "seniority": "PhD", "publications": [{"id": "px", "year": 2019, "n_authors": 0,
      "inter_institutional": 0, "internal_coverage": 0.5, "citations": []}]}]})";
  }
  pipeline::RunConfig cfg;
  cfg.input = dir + "/bad.json";
  cfg.out = dir + "/out";
  cfg.quiet = true;
  std::ostringstream log;
  const auto result = pipeline::run_pipeline(cfg, log);
  REQUIRE(result.exit_code == pipeline::kExitValidation);
}

TEST_CASE("pipeline: full run on a synthetic corpus emits the report set") {
  const auto dir = temp_dir("synth_run");
  const auto corpus_path = small_synth_corpus(dir);
  pipeline::RunConfig cfg;
  cfg.input = corpus_path;
  cfg.out = dir + "/out";
  cfg.quiet = true;
  std::ostringstream log;
  const auto result = pipeline::run_pipeline(cfg, log);
  REQUIRE(result.exit_code == pipeline::kExitOk);
  for (const char* name : {"indicators.tsv", "clusters.json", "assignments.tsv",
                           "profile_table.tsv", "importance.tsv", "posthoc.json", "odds.tsv",
                           "boxplots.json", "ph_ratio.json"})
    REQUIRE(fs::exists(cfg.out + "/" + std::string(name)));

  // the importance table covers all 44 indicators with values in [0,1]
  std::istringstream imp(slurp(cfg.out + "/importance.tsv"));
  std::string line;
  std::getline(imp, line);  // header
  int rows = 0;
  while (std::getline(imp, line)) {
    if (line.empty()) continue;
    ++rows;
    const auto fields = io::split_tsv_row(line);
    const double importance = std::stod(fields.back());
    REQUIRE(importance >= 0.0);
    REQUIRE(importance <= 1.0);
  }
  REQUIRE(rows == kIndicatorCount);
}

TEST_CASE("pipeline: identical config and seed give byte-identical output directories") {
  const auto dir = temp_dir("determinism");
  const auto corpus_path = small_synth_corpus(dir);
  for (const char* run : {"a", "b"}) {
    pipeline::RunConfig cfg;
    cfg.input = corpus_path;
    cfg.out = dir + "/" + run;
    cfg.report.svg = true;
    cfg.quiet = true;
    std::ostringstream log;
    REQUIRE(pipeline::run_pipeline(cfg, log).exit_code == 0);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir + "/a")) {
    const auto name = entry.path().filename().string();
    REQUIRE(slurp(dir + "/a/" + name) == slurp(dir + "/b/" + name));
    ++compared;
  }
  REQUIRE(compared >= 9);
}

TEST_CASE("pipeline: researcher order in the file does not change the output") {
  const auto dir = temp_dir("permutation");
  synth::SynthSpec spec = synth::default_synth_spec();
  for (auto& g : spec.groups) g.count = std::max(1, g.count / 20);
  spec.seed = 5;
  Corpus corpus = synth_corpus(spec);
  save_corpus(corpus, dir + "/fwd.json");
  std::reverse(corpus.researchers.begin(), corpus.researchers.end());
  save_corpus(corpus, dir + "/rev.json");

  for (const char* which : {"fwd", "rev"}) {
    pipeline::RunConfig cfg;
    cfg.input = dir + "/" + which + ".json";
    cfg.out = dir + "/out_" + which;
    cfg.quiet = true;
    std::ostringstream log;
    REQUIRE(pipeline::run_pipeline(cfg, log).exit_code == 0);
  }
  for (const auto& entry : fs::directory_iterator(dir + "/out_fwd")) {
    const auto name = entry.path().filename().string();
    REQUIRE(slurp(dir + "/out_fwd/" + name) == slurp(dir + "/out_rev/" + name));
  }
}

TEST_CASE("pipeline: config file keys are applied") {
  const auto dir = temp_dir("config");
  {
    std::ofstream out(dir + "/config.json");
    out << R"({"input": "in.json", "out": "somewhere", "seed": 7, "eval_year": 2010,
               "cluster": {"k": 3, "log10": true, "tree_branching": 4},
               "inference": {"posthoc_alpha": 0.01, "importance_scale": "neglog10"},
               "report": {"quartile_method": "type7", "svg": true}})";
  }
  const auto cfg = pipeline::load_config(dir + "/config.json");
  REQUIRE(cfg.input == "in.json");
  REQUIRE(cfg.out == "somewhere");
  REQUIRE(cfg.seed == 7);
  REQUIRE(cfg.eval_year == 2010);
  REQUIRE(cfg.cluster.k == 3);
  REQUIRE(cfg.cluster.log10);
  REQUIRE(cfg.cluster.tree.branching == 4);
  REQUIRE(cfg.inference.posthoc_alpha == 0.01);
  REQUIRE(cfg.inference.importance_scale == inference::ImportanceScale::NegLog10P);
  REQUIRE(cfg.report.quartile_method == stats::QuantileMethod::kType7);
  REQUIRE(cfg.report.svg);
}

TEST_CASE("cli: run, validate and synth behave end to end") {
  const auto dir = temp_dir("cli");
  const std::string d1 = std::string(FIXTURES_DIR) + "/d1.json";

  REQUIRE(run_cli("run --input " + d1 + " --k 1 --out " + dir + "/run_out --quiet") == 0);
  REQUIRE(fs::exists(dir + "/run_out/indicators.tsv"));

  REQUIRE(run_cli("run --input /definitely/not/here.json --out " + dir + "/x --quiet") == 3);

  REQUIRE(run_cli("validate --input " + d1 + " --quiet") == 0);

  {
    std::ofstream out(dir + "/bad.json");
    out << R"({"eval_year": 2020, "researchers": [{"id": "X", "discipline": "Philosophy",
      "seniority": "PhD", "publications": [{"id": "px", "year": 2019, "n_authors": 0,
      "inter_institutional": 0, "internal_coverage": 0.5, "citations": []}]}]})";
  }
  REQUIRE(run_cli("validate --input " + dir + "/bad.json --quiet") == 1);

  REQUIRE(run_cli("synth --seed 4 --scale 0.05 --output " + dir + "/s1.json --quiet") == 0);
  REQUIRE(run_cli("synth --seed 4 --scale 0.05 --output " + dir + "/s2.json --quiet") == 0);
  REQUIRE(slurp(dir + "/s1.json") == slurp(dir + "/s2.json"));
  REQUIRE(run_cli("validate --input " + dir + "/s1.json --quiet") == 0);
}

TEST_CASE("cli: subcommands chain through intermediate files") {
  const auto dir = temp_dir("chain");
  const auto corpus_path = small_synth_corpus(dir, 23);

  REQUIRE(run_cli("indicators --input " + corpus_path + " --output " + dir + "/m.tsv --quiet") ==
          0);
  REQUIRE(run_cli("cluster --matrix " + dir + "/m.tsv --out " + dir + "/c --quiet") == 0);
  REQUIRE(fs::exists(dir + "/c/assignments.tsv"));
  REQUIRE(fs::exists(dir + "/c/clusters.json"));
  REQUIRE(run_cli("infer --input " + corpus_path + " --matrix " + dir + "/m.tsv --assignments " +
                  dir + "/c/assignments.tsv --importance --out " + dir + "/i --quiet") == 0);
  REQUIRE(fs::exists(dir + "/i/importance.tsv"));

  // the chained run matches the direct library path
  pipeline::RunConfig cfg;
  cfg.input = corpus_path;
  cfg.out = dir + "/direct";
  cfg.quiet = true;
  std::ostringstream log;
  REQUIRE(pipeline::run_pipeline(cfg, log).exit_code == 0);
  REQUIRE(slurp(dir + "/c/assignments.tsv") == slurp(dir + "/direct/assignments.tsv"));

  // report consumes the intermediates and reproduces the same tables
  REQUIRE(run_cli("report --matrix " + dir + "/m.tsv --assignments " + dir +
                  "/c/assignments.tsv --input " + corpus_path + " --out " + dir + "/r --quiet") ==
          0);
  REQUIRE(slurp(dir + "/r/profile_table.tsv") == slurp(dir + "/direct/profile_table.tsv"));
  REQUIRE(slurp(dir + "/r/importance.tsv") == slurp(dir + "/direct/importance.tsv"));
  REQUIRE(slurp(dir + "/r/odds.tsv") == slurp(dir + "/direct/odds.tsv"));
}

TEST_CASE("cli: flags override config-file keys, bare analysis flags work") {
  const auto dir = temp_dir("flagswin");
  const auto corpus_path = small_synth_corpus(dir, 31);
  {
    std::ofstream out(dir + "/config.json");
    out << R"({"input": ")" << corpus_path << R"(", "out": ")" << dir << R"(/from_config",
               "cluster": {"k": 2}})";
  }
  // --out on the command line beats the config's out
  REQUIRE(run_cli("run --config " + dir + "/config.json --out " + dir + "/from_flag --quiet") ==
          0);
  REQUIRE(fs::exists(dir + "/from_flag/indicators.tsv"));
  REQUIRE_FALSE(fs::exists(dir + "/from_config"));
  const auto clusters = nlohmann::json::parse(slurp(dir + "/from_flag/clusters.json"));
  REQUIRE(clusters["k"] == 2);  // config key still applies where no flag was given

  // value-less --posthoc and --regression select those analyses
  REQUIRE(run_cli("infer --input " + corpus_path + " --posthoc --out " + dir + "/ph --quiet") ==
          0);
  REQUIRE(fs::exists(dir + "/ph/posthoc.json"));
  REQUIRE_FALSE(fs::exists(dir + "/ph/importance.tsv"));
  REQUIRE(run_cli("infer --input " + corpus_path + " --k 3 --regression --out " + dir +
                  "/rg --quiet") == 0);
  REQUIRE(fs::exists(dir + "/rg/regression.json"));
}

TEST_CASE("cli: indicators supports column selection and JSON output") {
  const auto dir = temp_dir("columns");
  const std::string d1 = std::string(FIXTURES_DIR) + "/d1.json";

  REQUIRE(run_cli("indicators --input " + d1 + " --indicators h,g,P --output " + dir +
                  "/sel.tsv --quiet") == 0);
  std::istringstream tsv(slurp(dir + "/sel.tsv"));
  std::string header;
  std::getline(tsv, header);
  REQUIRE(io::split_tsv_row(header) ==
          std::vector<std::string>{"researcher_id", "academic_age", "h", "g", "P"});
  std::string row;
  std::getline(tsv, row);
  REQUIRE(io::split_tsv_row(row) == std::vector<std::string>{"R1", "5", "4", "5", "5"});

  REQUIRE(run_cli("indicators --input " + d1 + " --output-format json --output " + dir +
                  "/all.json --quiet") == 0);
  const auto parsed = nlohmann::json::parse(slurp(dir + "/all.json"));
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 1);
  REQUIRE(parsed[0]["researcher_id"] == "R1");
  REQUIRE(parsed[0]["h"] == 4.0);
  REQUIRE(parsed[0]["mcs"] == 5.4);

  // --eval-year override shifts the age-based indicators
  REQUIRE(run_cli("indicators --input " + d1 + " --eval-year 2018 --indicators h --output " +
                  dir + "/shift.tsv --quiet") == 0);
  std::istringstream shifted(slurp(dir + "/shift.tsv"));
  std::getline(shifted, header);
  std::getline(shifted, row);
  REQUIRE(io::split_tsv_row(row)[1] == "10");  // academic age 2018 - 2008

  // unknown indicator name fails with the computation exit code
  REQUIRE(run_cli("indicators --input " + d1 + " --indicators bogus --quiet") == 2);
}

TEST_CASE("synthetic corpus: the largest-group medians sit on their targets") {
  synth::SynthSpec spec = synth::default_synth_spec();
  spec.seed = 42;
  const Corpus corpus = synth_corpus(spec);
  std::vector<double> pubs, cits;
  for (const auto& r : corpus.researchers) {
    if (r.discipline.kind != DisciplineKind::Astronomy || r.seniority != Seniority::Professor)
      continue;
    pubs.push_back(static_cast<double>(r.publications.size()));
    double total = 0;
    for (const auto& p : r.publications) total += p.citation_count();
    cits.push_back(total);
  }
  REQUIRE(pubs.size() == 37);
  const double pub_median = stats::median(pubs);
  const double cit_median = stats::median(cits);
  REQUIRE(std::fabs(pub_median - 90.0) <= 0.15 * 90.0);
  REQUIRE(std::fabs(cit_median - 1889.0) <= 0.15 * 1889.0);
}
