#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scimetric/errors.hpp"
#include "scimetric/indicators.hpp"
#include "scimetric/inference.hpp"
#include "scimetric/io.hpp"
#include "scimetric/stats.hpp"
#include "scimetric/twostep.hpp"

namespace scimetric::report {

// --- boxplot summaries ----------------------------------------------------------

struct BoxplotSummary {
  std::string name;
  double q1 = 0, median = 0, q3 = 0;
  double lower_whisker = 0, upper_whisker = 0;
  double min = 0, max = 0;
  std::vector<std::string> outlier_ids;
};

/// Five-number boxplot with Tukey fences; whiskers are the fences clamped to
/// the observed extremes, outliers everything beyond the fences.
inline BoxplotSummary boxplot_summary(std::span<const double> values,
                                      stats::QuantileMethod method = stats::QuantileMethod::kType6,
                                      std::span<const std::string> ids = {}) {
  if (values.empty()) throw ComputeError("boxplot_summary: empty vector");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  BoxplotSummary s;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = stats::quantile_sorted(sorted, 0.25, method);
  s.median = stats::quantile_sorted(sorted, 0.50, method);
  s.q3 = stats::quantile_sorted(sorted, 0.75, method);
  const double iqr = s.q3 - s.q1;
  const double upper_fence = s.q3 + 1.5 * iqr;
  const double lower_fence = s.q1 - 1.5 * iqr;
  s.upper_whisker = std::min(s.max, upper_fence);
  s.lower_whisker = std::max(s.min, lower_fence);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > upper_fence || values[i] < lower_fence)
      s.outlier_ids.push_back(i < ids.size() ? ids[i] : std::to_string(i));
  }
  return s;
}

// --- cluster profile table ---------------------------------------------------------

struct ProfileTable {
  int k = 0;
  std::vector<int> sizes;                                   // per cluster
  std::vector<std::array<double, kIndicatorCount>> means;   // per cluster, canonical order
};

/// Mean of every indicator within each cluster (cluster order 1..k).
inline ProfileTable cluster_profile_table(const std::vector<IndicatorVector>& rows,
                                          const std::vector<int>& assignments) {
  if (rows.size() != assignments.size())
    throw ComputeError("cluster_profile_table: row/assignment mismatch");
  ProfileTable t;
  for (int a : assignments) t.k = std::max(t.k, a);
  t.sizes.assign(t.k, 0);
  t.means.assign(t.k, {});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int c = assignments[i] - 1;
    ++t.sizes[c];
    for (int j = 0; j < kIndicatorCount; ++j) t.means[c][j] += rows[i].values[j];
  }
  for (int c = 0; c < t.k; ++c)
    if (t.sizes[c] > 0)
      for (int j = 0; j < kIndicatorCount; ++j) t.means[c][j] /= t.sizes[c];
  return t;
}

// --- rank projections ----------------------------------------------------------------

struct RankPoint {
  std::string researcher_id;
  double x_value = 0, y_value = 0;
  double x_rank = 0, y_rank = 0;  // 1 = best, average ranks on ties
  int cluster = 0;
  std::optional<double> p_to_h;  // undefined when h = 0
};

struct RankProjection {
  std::string x_name, y_name;
  std::vector<RankPoint> points;
};

inline RankProjection rank_projection(const std::vector<IndicatorVector>& rows,
                                      const std::vector<int>& assignments,
                                      const std::string& x_name, const std::string& y_name) {
  if (rows.size() != assignments.size())
    throw ComputeError("rank_projection: row/assignment mismatch");
  const Ind xi = indicator_from_name(x_name);
  const Ind yi = indicator_from_name(y_name);
  std::vector<double> xs(rows.size()), ys(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    xs[i] = rows[i][xi];
    ys[i] = rows[i][yi];
  }
  const auto xr = stats::rank_descending(xs);
  const auto yr = stats::rank_descending(ys);
  RankProjection proj;
  proj.x_name = x_name;
  proj.y_name = y_name;
  proj.points.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    RankPoint pt;
    pt.researcher_id = rows[i].researcher_id;
    pt.x_value = xs[i];
    pt.y_value = ys[i];
    pt.x_rank = xr[i];
    pt.y_rank = yr[i];
    pt.cluster = assignments[i];
    if (rows[i][Ind::H] > 0.0) pt.p_to_h = rows[i][Ind::P] / rows[i][Ind::H];
    proj.points.push_back(std::move(pt));
  }
  return proj;
}

// --- P:h ratio rank-movement analysis ------------------------------------------------------

enum class RankDirection { Gain, Fall, Unchanged };

inline const char* to_string(RankDirection d) {
  switch (d) {
    case RankDirection::Gain: return "gain";
    case RankDirection::Fall: return "fall";
    case RankDirection::Unchanged: return "unchanged";
  }
  return "unchanged";
}

struct PhRatioEntry {
  std::string researcher_id;
  std::optional<double> p_to_h;  // undefined for h = 0
  double rank_from = 0, rank_to = 0, rank_delta = 0;
  RankDirection direction = RankDirection::Unchanged;
};

struct PhRatioAnalysis {
  std::string from_name, to_name;
  std::vector<PhRatioEntry> entries;
  // cross-tab rows: ratio >= 3, ratio < 3, undefined; columns: gain, fall, unchanged
  std::array<std::array<int, 3>, 3> crosstab{};
};

/// How researchers move between two rankings, stratified by P:h >= 3.
/// Lower rank number is better, so a negative delta is a gain.
inline PhRatioAnalysis ph_ratio_analysis(const std::vector<IndicatorVector>& rows,
                                         const std::string& rank_from,
                                         const std::string& rank_to) {
  const Ind fi = indicator_from_name(rank_from);
  const Ind ti = indicator_from_name(rank_to);
  std::vector<double> from_vals(rows.size()), to_vals(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    from_vals[i] = rows[i][fi];
    to_vals[i] = rows[i][ti];
  }
  const auto fr = stats::rank_descending(from_vals);
  const auto tr = stats::rank_descending(to_vals);

  PhRatioAnalysis out;
  out.from_name = rank_from;
  out.to_name = rank_to;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    PhRatioEntry e;
    e.researcher_id = rows[i].researcher_id;
    if (rows[i][Ind::H] > 0.0) e.p_to_h = rows[i][Ind::P] / rows[i][Ind::H];
    e.rank_from = fr[i];
    e.rank_to = tr[i];
    e.rank_delta = e.rank_to - e.rank_from;
    if (e.rank_delta < -0.5)
      e.direction = RankDirection::Gain;
    else if (e.rank_delta > 0.5)
      e.direction = RankDirection::Fall;
    const int row = e.p_to_h ? (*e.p_to_h >= 3.0 ? 0 : 1) : 2;
    ++out.crosstab[row][static_cast<int>(e.direction)];
    out.entries.push_back(std::move(e));
  }
  return out;
}

// --- SVG rendering --------------------------------------------------------------------------

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline const char* cluster_color(int cluster) {
  static const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                  "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};
  return palette[(cluster - 1) % 8];
}

}  // namespace detail

/// 800x600 scatter of the two rank axes, points colored by cluster.
inline std::string projection_svg(const RankProjection& proj) {
  const double w = 800, h = 600, margin = 60;
  double n = 1;
  for (const auto& p : proj.points) n = std::max({n, p.x_rank, p.y_rank});
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  svg << "<line x1=\"60\" y1=\"540\" x2=\"740\" y2=\"540\" stroke=\"black\"/>\n";
  svg << "<line x1=\"60\" y1=\"60\" x2=\"60\" y2=\"540\" stroke=\"black\"/>\n";
  svg << "<text x=\"400\" y=\"580\" text-anchor=\"middle\" font-size=\"14\">" << proj.x_name
      << " rank</text>\n";
  svg << "<text x=\"20\" y=\"300\" text-anchor=\"middle\" font-size=\"14\" "
         "transform=\"rotate(-90 20 300)\">"
      << proj.y_name << " rank</text>\n";
  for (const auto& p : proj.points) {
    const double px = margin + (p.x_rank - 1.0) / std::max(n - 1.0, 1.0) * (w - 2 * margin);
    const double py = margin + (p.y_rank - 1.0) / std::max(n - 1.0, 1.0) * (h - 2 * margin);
    svg << "<circle cx=\"" << detail::fmt2(px) << "\" cy=\"" << detail::fmt2(py)
        << "\" r=\"3\" fill=\"" << detail::cluster_color(p.cluster) << "\" fill-opacity=\"0.8\">"
        << "<title>" << p.researcher_id << "</title></circle>\n";
  }
  svg << "</svg>";
  return svg.str();
}

/// 800x600 strip of boxplot glyphs, one per summary, on a shared log scale.
inline std::string boxplots_svg(const std::vector<BoxplotSummary>& summaries) {
  const double w = 800, h = 600, top = 40, bottom = 80;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  if (!summaries.empty()) {
    double vmax = 1.0;
    for (const auto& s : summaries) vmax = std::max(vmax, std::log10(s.max + 1.0));
    const double band = w / summaries.size();
    auto ypos = [&](double v) {
      return h - bottom - std::log10(std::max(v, 0.0) + 1.0) / vmax * (h - top - bottom);
    };
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      const auto& s = summaries[i];
      const double cx = band * (i + 0.5);
      const double bw = std::min(band * 0.6, 14.0);
      svg << "<line x1=\"" << detail::fmt2(cx) << "\" y1=\"" << detail::fmt2(ypos(s.lower_whisker))
          << "\" x2=\"" << detail::fmt2(cx) << "\" y2=\"" << detail::fmt2(ypos(s.upper_whisker))
          << "\" stroke=\"black\"/>\n";
      svg << "<rect x=\"" << detail::fmt2(cx - bw / 2) << "\" y=\"" << detail::fmt2(ypos(s.q3))
          << "\" width=\"" << detail::fmt2(bw) << "\" height=\""
          << detail::fmt2(std::max(ypos(s.q1) - ypos(s.q3), 0.5))
          << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
      svg << "<line x1=\"" << detail::fmt2(cx - bw / 2) << "\" y1=\""
          << detail::fmt2(ypos(s.median)) << "\" x2=\"" << detail::fmt2(cx + bw / 2) << "\" y2=\""
          << detail::fmt2(ypos(s.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << detail::fmt2(cx) << "\" y=\"" << detail::fmt2(h - bottom + 12)
          << "\" text-anchor=\"end\" font-size=\"9\" transform=\"rotate(-60 " << detail::fmt2(cx)
          << " " << detail::fmt2(h - bottom + 12) << ")\">" << s.name << "</text>\n";
    }
  }
  svg << "</svg>";
  return svg.str();
}

// --- report emission ----------------------------------------------------------------------------

struct ReportInputs {
  const std::vector<IndicatorVector>* matrix = nullptr;
  const twostep::ClusterModel* model = nullptr;
  const ProfileTable* profile = nullptr;
  const std::vector<inference::AnovaResult>* importance = nullptr;
  const std::vector<inference::PosthocResult>* posthoc = nullptr;
  const inference::OddsTable* odds = nullptr;
  const inference::OrdinalFit* regression = nullptr;
  const inference::ParallelLinesTest* parallel_lines = nullptr;
  const std::vector<BoxplotSummary>* boxplots = nullptr;
  const std::vector<RankProjection>* projections = nullptr;
  const PhRatioAnalysis* ph_analysis = nullptr;
  std::vector<std::string> notes;  // degenerate-path warnings worth keeping
};

struct ReportOptions {
  bool svg = false;
};

inline nlohmann::json cluster_model_json(const twostep::ClusterModel& m) {
  nlohmann::json j;
  j["k"] = m.k;
  j["silhouette"] = m.silhouette;
  j["fit_grade"] = twostep::to_string(m.fit_grade);
  j["variables"] = m.variables;
  j["warnings"] = m.warnings;
  j["bic_trail"] = nlohmann::json::array();
  for (const auto& e : m.bic_trail)
    j["bic_trail"].push_back({{"J", e.j},
                              {"bic", e.bic},
                              {"bic_change_ratio", e.bic_change_ratio},
                              {"dist_ratio", e.dist_ratio}});
  j["assignments"] = nlohmann::json::object();
  for (const auto& [id, cl] : m.assignments) j["assignments"][id] = cl;
  j["clusters"] = nlohmann::json::array();
  for (std::size_t c = 0; c < m.features.size(); ++c) {
    const auto& f = m.features[c];
    nlohmann::json jc;
    jc["cluster"] = static_cast<int>(c + 1);
    jc["size"] = f.n;
    nlohmann::json means = nlohmann::json::object(), sds = nlohmann::json::object();
    for (std::size_t v = 0; v < m.variables.size() && v < f.sum.size(); ++v) {
      means[m.variables[v]] = f.mean(v);
      sds[m.variables[v]] = std::sqrt(f.within_variance(v));
    }
    jc["mean"] = means;
    jc["sd"] = sds;
    j["clusters"].push_back(std::move(jc));
  }
  return j;
}

inline nlohmann::json regression_json(const inference::OrdinalFit& fit,
                                      const inference::ParallelLinesTest* pl) {
  nlohmann::json j;
  j["n"] = fit.n;
  j["outcome_levels"] = fit.k;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  if (!fit.diagnostic.empty()) j["diagnostic"] = fit.diagnostic;
  j["log_likelihood"] = {{"model", fit.ll_model}, {"null", fit.ll_null}};
  j["pseudo_r2"] = {{"mcfadden", fit.mcfadden},
                    {"cox_snell", fit.cox_snell},
                    {"nagelkerke", fit.nagelkerke}};
  j["thresholds"] = fit.thresholds;
  j["threshold_se"] = fit.threshold_se;
  j["coefficients"] = nlohmann::json::array();
  for (const auto& c : fit.coefficients)
    j["coefficients"].push_back({{"name", c.name},
                                 {"beta", c.beta},
                                 {"se", c.se},
                                 {"wald_chi2", c.wald_chi2},
                                 {"p", c.p},
                                 {"odds_ratio", c.odds_ratio},
                                 {"ci_low", c.ci_low},
                                 {"ci_high", c.ci_high}});
  if (pl) {
    j["parallel_lines"] = {{"lr", pl->lr},
                           {"df", pl->df},
                           {"p", pl->p},
                           {"inconclusive", pl->inconclusive}};
    if (!pl->note.empty()) j["parallel_lines"]["note"] = pl->note;
  }
  return j;
}

/// Writes the deterministic report file set; returns the emitted file names.
/// Only artifacts that are present produce files.
inline std::vector<std::string> emit_report(const ReportInputs& in, const std::string& out_dir,
                                            const ReportOptions& opt = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    io::write_file(out_dir + "/" + name, content);
    written.push_back(name);
  };

  if (in.matrix) emit("indicators.tsv", io::matrix_to_tsv(*in.matrix, io::all_indicator_columns()));

  if (in.model) {
    nlohmann::json j = cluster_model_json(*in.model);
    for (const auto& note : in.notes) j["warnings"].push_back(note);
    emit("clusters.json", j.dump(2));
    emit("assignments.tsv", io::assignments_to_tsv(in.model->assignments));
  }

  if (in.profile) {
    std::ostringstream t;
    t << "cluster\tsize";
    for (const auto& n : indicator_names()) t << '\t' << n;
    t << '\n';
    for (int c = 0; c < in.profile->k; ++c) {
      t << (c + 1) << '\t' << in.profile->sizes[c];
      for (int j = 0; j < kIndicatorCount; ++j)
        t << '\t' << stats::format_number(in.profile->means[c][j]);
      t << '\n';
    }
    emit("profile_table.tsv", t.str());
  }

  if (in.importance) {
    std::ostringstream t;
    t << "indicator\tF\tdf_between\tdf_within\tp\timportance\n";
    for (const auto& r : *in.importance)
      t << r.indicator << '\t' << stats::format_number(r.F) << '\t'
        << stats::format_number(r.df_between) << '\t' << stats::format_number(r.df_within) << '\t'
        << stats::format_number(r.p) << '\t' << stats::format_number(r.importance) << '\n';
    emit("importance.tsv", t.str());
  }

  if (in.posthoc) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& res : *in.posthoc) {
      nlohmann::json ji;
      ji["indicator"] = res.indicator;
      ji["sidak_alpha"] = res.sidak_alpha;
      ji["pairs"] = nlohmann::json::array();
      for (const auto& p : res.pairs) {
        nlohmann::json jp = {{"cluster_a", p.cluster_a}, {"cluster_b", p.cluster_b}};
        if (p.skipped) {
          jp["skipped"] = true;
          jp["note"] = p.note;
        } else {
          jp["mean_diff"] = p.mean_diff;
          jp["t"] = p.t;
          jp["df"] = p.df;
          jp["p"] = p.p;
          jp["significant"] = p.significant;
        }
        ji["pairs"].push_back(std::move(jp));
      }
      j.push_back(std::move(ji));
    }
    emit("posthoc.json", j.dump(2));
  }

  if (in.odds) {
    std::ostringstream t;
    t << "seniority\tcluster\ta\tb\tc\td\tpct_within_seniority\todds_ratio\n";
    for (const auto& cell : in.odds->cells) {
      t << to_string(cell.seniority) << '\t' << cell.cluster << '\t' << cell.a << '\t' << cell.b
        << '\t' << cell.c << '\t' << cell.d << '\t'
        << stats::format_number(cell.pct_within_seniority) << '\t'
        << (cell.odds_ratio ? stats::format_number(*cell.odds_ratio) : "-") << '\n';
    }
    emit("odds.tsv", t.str());
  }

  if (in.regression) emit("regression.json", regression_json(*in.regression, in.parallel_lines).dump(2));

  if (in.boxplots) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : *in.boxplots)
      j.push_back({{"indicator", s.name},
                   {"q1", s.q1},
                   {"median", s.median},
                   {"q3", s.q3},
                   {"lower_whisker", s.lower_whisker},
                   {"upper_whisker", s.upper_whisker},
                   {"min", s.min},
                   {"max", s.max},
                   {"outliers", s.outlier_ids}});
    emit("boxplots.json", j.dump(2));
    if (opt.svg) emit("boxplots.svg", boxplots_svg(*in.boxplots));
  }

  if (in.ph_analysis) {
    nlohmann::json j;
    j["rank_from"] = in.ph_analysis->from_name;
    j["rank_to"] = in.ph_analysis->to_name;
    nlohmann::json tab;
    const char* strata[] = {"ratio_ge_3", "ratio_lt_3", "ratio_undefined"};
    for (int r = 0; r < 3; ++r)
      tab[strata[r]] = {{"gain", in.ph_analysis->crosstab[r][0]},
                        {"fall", in.ph_analysis->crosstab[r][1]},
                        {"unchanged", in.ph_analysis->crosstab[r][2]}};
    j["crosstab"] = tab;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : in.ph_analysis->entries) {
      nlohmann::json je = {{"researcher_id", e.researcher_id},
                           {"rank_from", e.rank_from},
                           {"rank_to", e.rank_to},
                           {"rank_delta", e.rank_delta},
                           {"direction", to_string(e.direction)}};
      if (e.p_to_h) je["p_to_h"] = *e.p_to_h;
      entries.push_back(std::move(je));
    }
    j["researchers"] = entries;
    emit("ph_ratio.json", j.dump(2));
  }

  if (opt.svg && in.projections)
    for (const auto& proj : *in.projections)
      emit("projection_" + proj.x_name + "_" + proj.y_name + ".svg", projection_svg(proj));

  return written;
}

}  // namespace scimetric::report
