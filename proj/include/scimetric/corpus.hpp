#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scimetric/errors.hpp"

namespace scimetric {

// --- domain types -----------------------------------------------------------

enum class DisciplineKind { Astronomy, EnvironmentalScience, Philosophy, PublicHealth, Other };

struct Discipline {
  DisciplineKind kind = DisciplineKind::Other;
  std::string other_name;  // only meaningful when kind == Other

  bool operator==(const Discipline&) const = default;
};

/// Ordered academic seniorities, junior to senior.
enum class Seniority { PhD = 1, PostDoc, AssistantProf, AssociateProf, Professor };

struct CitationEvent {
  int year = 0;
  bool is_self = false;

  bool operator==(const CitationEvent&) const = default;
};

struct PublicationRecord {
  std::string id;
  int year = 0;
  int n_authors = 1;
  int inter_institutional = 0;  // {0,1}
  double internal_coverage = 0.0;
  std::vector<CitationEvent> citations;
  std::optional<std::string> journal_id;
  std::optional<double> journal_mcs;
  std::optional<double> journal_mnjs;
  std::optional<double> paper_ncs;
  std::optional<double> top_prop;

  bool operator==(const PublicationRecord&) const = default;

  int citation_count() const { return static_cast<int>(citations.size()); }
};

struct ResearcherProfile {
  std::string id;
  Discipline discipline;
  Seniority seniority = Seniority::PhD;
  std::vector<PublicationRecord> publications;
  std::optional<double> benchmark_cpp;  // expected citations per paper in the specialty

  bool operator==(const ResearcherProfile&) const = default;
};

struct Corpus {
  int eval_year = 0;
  std::vector<ResearcherProfile> researchers;
  std::map<std::string, double> baselines;  // discipline name -> default benchmark_cpp

  bool operator==(const Corpus&) const = default;
};

// --- name tables -------------------------------------------------------------

inline std::string to_string(const Discipline& d) {
  switch (d.kind) {
    case DisciplineKind::Astronomy: return "Astronomy";
    case DisciplineKind::EnvironmentalScience: return "EnvironmentalScience";
    case DisciplineKind::Philosophy: return "Philosophy";
    case DisciplineKind::PublicHealth: return "PublicHealth";
    case DisciplineKind::Other: return "Other:" + d.other_name;
  }
  return "Other:";
}

inline Discipline parse_discipline(const std::string& s) {
  if (s == "Astronomy") return {DisciplineKind::Astronomy, {}};
  if (s == "EnvironmentalScience") return {DisciplineKind::EnvironmentalScience, {}};
  if (s == "Philosophy") return {DisciplineKind::Philosophy, {}};
  if (s == "PublicHealth") return {DisciplineKind::PublicHealth, {}};
  if (s.rfind("Other:", 0) == 0) return {DisciplineKind::Other, s.substr(6)};
  throw ParseError("unknown discipline \"" + s +
                   "\"; allowed: Astronomy, EnvironmentalScience, Philosophy, PublicHealth, "
                   "Other:<name>");
}

inline std::string to_string(Seniority s) {
  switch (s) {
    case Seniority::PhD: return "PhD";
    case Seniority::PostDoc: return "PostDoc";
    case Seniority::AssistantProf: return "AssistantProf";
    case Seniority::AssociateProf: return "AssociateProf";
    case Seniority::Professor: return "Professor";
  }
  return "PhD";
}

inline Seniority parse_seniority(const std::string& s) {
  if (s == "PhD") return Seniority::PhD;
  if (s == "PostDoc") return Seniority::PostDoc;
  if (s == "AssistantProf") return Seniority::AssistantProf;
  if (s == "AssociateProf") return Seniority::AssociateProf;
  if (s == "Professor") return Seniority::Professor;
  throw ParseError("unknown seniority \"" + s +
                   "\"; allowed: PhD, PostDoc, AssistantProf, AssociateProf, Professor");
}

inline const std::vector<Seniority>& all_seniorities() {
  static const std::vector<Seniority> v = {Seniority::PhD, Seniority::PostDoc,
                                           Seniority::AssistantProf, Seniority::AssociateProf,
                                           Seniority::Professor};
  return v;
}

// --- academic age -------------------------------------------------------------

/// Years since the researcher's first indexed publication: eval_year - min(year).
inline int academic_age(const ResearcherProfile& r, int eval_year) {
  if (r.publications.empty()) throw ComputeError("no publications for researcher " + r.id);
  int first = r.publications.front().year;
  for (const auto& p : r.publications) first = std::min(first, p.year);
  return eval_year - first;
}

// --- validation ----------------------------------------------------------------

struct Violation {
  std::string researcher_id;
  std::string publication_id;  // empty for researcher-level rules
  std::string rule;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks every corpus invariant; returns all violations sorted by
/// (researcher id, publication id, rule). Nothing is thrown.
inline ValidationReport validate(const Corpus& c) {
  ValidationReport report;
  auto add = [&](const std::string& rid, const std::string& pid, const std::string& rule) {
    report.violations.push_back({rid, pid, rule});
  };

  std::map<std::string, int> researcher_ids;
  std::map<std::string, int> publication_ids;
  for (const auto& r : c.researchers) {
    if (++researcher_ids[r.id] > 1) add(r.id, "", "researcher id: duplicate");
    if (r.benchmark_cpp && !(*r.benchmark_cpp > 0.0 && std::isfinite(*r.benchmark_cpp)))
      add(r.id, "", "benchmark_cpp: must be a positive finite number");
    for (const auto& p : r.publications) {
      if (++publication_ids[p.id] > 1) add(r.id, p.id, "publication id: duplicate");
      if (p.n_authors < 1) add(r.id, p.id, "n_authors: must be >= 1");
      if (p.inter_institutional != 0 && p.inter_institutional != 1)
        add(r.id, p.id, "inter_institutional: must be 0 or 1");
      if (!(p.internal_coverage >= 0.0 && p.internal_coverage <= 1.0))
        add(r.id, p.id, "internal_coverage: must be in [0,1]");
      if (p.top_prop && !(*p.top_prop >= 0.0 && *p.top_prop <= 1.0))
        add(r.id, p.id, "top_prop: must be in [0,1]");
      auto check_nonneg = [&](const std::optional<double>& v, const char* field) {
        if (v && !(std::isfinite(*v) && *v >= 0.0))
          add(r.id, p.id, std::string(field) + ": must be finite and >= 0");
      };
      check_nonneg(p.journal_mcs, "journal_mcs");
      check_nonneg(p.journal_mnjs, "journal_mnjs");
      check_nonneg(p.paper_ncs, "paper_ncs");
      if (p.year > c.eval_year) add(r.id, p.id, "year: publication after eval_year");
      for (const auto& e : p.citations)
        if (e.year < p.year) {
          add(r.id, p.id, "citation year precedes publication year");
          break;
        }
    }
  }
  for (const auto& [name, b] : c.baselines)
    if (!(b > 0.0 && std::isfinite(b))) add("", "", "baseline " + name + ": must be positive");

  std::sort(report.violations.begin(), report.violations.end(),
            [](const Violation& a, const Violation& b) {
              return std::tie(a.researcher_id, a.publication_id, a.rule) <
                     std::tie(b.researcher_id, b.publication_id, b.rule);
            });
  return report;
}

// --- JSON serialization ----------------------------------------------------------

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field \"" + key + "\"");
  return *it;
}

template <typename T>
T field_as(const nlohmann::json& obj, const char* key, const std::string& where) {
  try {
    return require_field(obj, key, where).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": field \"" + key + "\": " + e.what());
  }
}

inline std::optional<double> optional_number(const nlohmann::json& obj, const char* key,
                                             const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(where + ": field \"" + key + "\" must be a number");
  return it->get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const Corpus& c) {
  nlohmann::json root;
  root["eval_year"] = c.eval_year;
  root["baselines"] = nlohmann::json::object();
  for (const auto& [name, b] : c.baselines) root["baselines"][name] = b;
  root["researchers"] = nlohmann::json::array();
  for (const auto& r : c.researchers) {
    nlohmann::json jr;
    jr["id"] = r.id;
    jr["discipline"] = to_string(r.discipline);
    jr["seniority"] = to_string(r.seniority);
    if (r.benchmark_cpp) jr["benchmark_cpp"] = *r.benchmark_cpp;
    jr["publications"] = nlohmann::json::array();
    for (const auto& p : r.publications) {
      nlohmann::json jp;
      jp["id"] = p.id;
      jp["year"] = p.year;
      jp["n_authors"] = p.n_authors;
      jp["inter_institutional"] = p.inter_institutional;
      jp["internal_coverage"] = p.internal_coverage;
      if (p.journal_id) jp["journal_id"] = *p.journal_id;
      if (p.journal_mcs) jp["journal_mcs"] = *p.journal_mcs;
      if (p.journal_mnjs) jp["journal_mnjs"] = *p.journal_mnjs;
      if (p.paper_ncs) jp["paper_ncs"] = *p.paper_ncs;
      if (p.top_prop) jp["top_prop"] = *p.top_prop;
      jp["citations"] = nlohmann::json::array();
      for (const auto& e : p.citations)
        jp["citations"].push_back({{"year", e.year}, {"is_self", e.is_self}});
      jr["publications"].push_back(std::move(jp));
    }
    root["researchers"].push_back(std::move(jr));
  }
  return root;
}

inline Corpus corpus_from_json(const nlohmann::json& root) {
  Corpus c;
  c.eval_year = detail::field_as<int>(root, "eval_year", "corpus");
  if (auto it = root.find("baselines"); it != root.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("corpus: \"baselines\" must be an object");
    for (auto& [name, v] : it->items()) {
      parse_discipline(name);  // reject unknown discipline keys early
      if (!v.is_number()) throw ParseError("corpus: baseline \"" + name + "\" must be a number");
      c.baselines[name] = v.get<double>();
    }
  }
  const auto& jresearchers = detail::require_field(root, "researchers", "corpus");
  if (!jresearchers.is_array()) throw ParseError("corpus: \"researchers\" must be an array");
  for (std::size_t i = 0; i < jresearchers.size(); ++i) {
    const auto& jr = jresearchers[i];
    const std::string where_r = "researcher[" + std::to_string(i) + "]";
    ResearcherProfile r;
    r.id = detail::field_as<std::string>(jr, "id", where_r);
    r.discipline = parse_discipline(detail::field_as<std::string>(jr, "discipline", where_r));
    r.seniority = parse_seniority(detail::field_as<std::string>(jr, "seniority", where_r));
    r.benchmark_cpp = detail::optional_number(jr, "benchmark_cpp", where_r);
    const auto& jpubs = detail::require_field(jr, "publications", where_r);
    if (!jpubs.is_array()) throw ParseError(where_r + ": \"publications\" must be an array");
    for (std::size_t j = 0; j < jpubs.size(); ++j) {
      const auto& jp = jpubs[j];
      const std::string where_p = "researcher " + r.id + " publication[" + std::to_string(j) + "]";
      PublicationRecord p;
      p.id = detail::field_as<std::string>(jp, "id", where_p);
      p.year = detail::field_as<int>(jp, "year", where_p);
      p.n_authors = detail::field_as<int>(jp, "n_authors", where_p);
      p.inter_institutional = detail::field_as<int>(jp, "inter_institutional", where_p);
      p.internal_coverage = detail::field_as<double>(jp, "internal_coverage", where_p);
      if (auto it = jp.find("journal_id"); it != jp.end() && !it->is_null())
        p.journal_id = it->get<std::string>();
      p.journal_mcs = detail::optional_number(jp, "journal_mcs", where_p);
      p.journal_mnjs = detail::optional_number(jp, "journal_mnjs", where_p);
      p.paper_ncs = detail::optional_number(jp, "paper_ncs", where_p);
      p.top_prop = detail::optional_number(jp, "top_prop", where_p);
      if (auto it = jp.find("citations"); it != jp.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError(where_p + ": \"citations\" must be an array");
        for (const auto& je : *it) {
          CitationEvent e;
          e.year = detail::field_as<int>(je, "year", where_p + " citation");
          e.is_self = detail::field_as<bool>(je, "is_self", where_p + " citation");
          p.citations.push_back(e);
        }
      }
      r.publications.push_back(std::move(p));
    }
    c.researchers.push_back(std::move(r));
  }
  return c;
}

// --- CSV bundle -------------------------------------------------------------------

namespace detail {

/// RFC-4180-ish row splitter; handles quoted fields and "" escapes.
inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name, const std::string& file) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ParseError(file + ": missing required column \"" + name + "\"");
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file (header row required)");
  t.header = split_csv_row(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto row = split_csv_row(line);
    if (row.size() != t.header.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields, got " +
                       std::to_string(row.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline int parse_int_field(const std::string& s, const std::string& locus) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw ParseError(locus + ": not an integer: \"" + s + "\"");
  }
}

inline double parse_double_field(const std::string& s, const std::string& locus) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw ParseError(locus + ": not a number: \"" + s + "\"");
  }
}

}  // namespace detail

/// Reads the three-file bundle researchers.csv / publications.csv / citations.csv
/// from a directory. eval_year defaults to the latest publication or citation
/// year (override it afterwards if needed); publication ids must be unique
/// since citations.csv joins on them.
inline Corpus parse_corpus_csv_bundle(const std::string& dir) {
  using namespace detail;
  CsvTable rt = read_csv(dir + "/researchers.csv");
  CsvTable pt = read_csv(dir + "/publications.csv");
  CsvTable ct = read_csv(dir + "/citations.csv");

  Corpus c;
  const int r_id = rt.column("id", "researchers.csv");
  const int r_disc = rt.column("discipline", "researchers.csv");
  const int r_sen = rt.column("seniority", "researchers.csv");
  const int r_bench = rt.column("benchmark_cpp", "researchers.csv");
  std::map<std::string, std::size_t> researcher_index;
  for (std::size_t i = 0; i < rt.rows.size(); ++i) {
    const auto& row = rt.rows[i];
    const std::string locus = "researchers.csv row " + std::to_string(i + 2);
    ResearcherProfile r;
    r.id = row[r_id];
    r.discipline = parse_discipline(row[r_disc]);
    r.seniority = parse_seniority(row[r_sen]);
    if (!row[r_bench].empty()) r.benchmark_cpp = parse_double_field(row[r_bench], locus);
    researcher_index.emplace(r.id, c.researchers.size());
    c.researchers.push_back(std::move(r));
  }

  const int p_rid = pt.column("researcher_id", "publications.csv");
  const int p_id = pt.column("id", "publications.csv");
  const int p_year = pt.column("year", "publications.csv");
  const int p_nauth = pt.column("n_authors", "publications.csv");
  const int p_inter = pt.column("inter_institutional", "publications.csv");
  const int p_cover = pt.column("internal_coverage", "publications.csv");
  const int p_jid = pt.column("journal_id", "publications.csv");
  const int p_jmcs = pt.column("journal_mcs", "publications.csv");
  const int p_jmnjs = pt.column("journal_mnjs", "publications.csv");
  const int p_ncs = pt.column("paper_ncs", "publications.csv");
  const int p_top = pt.column("top_prop", "publications.csv");
  std::map<std::string, std::pair<std::size_t, std::size_t>> pub_index;  // pub id -> (r, p)
  for (std::size_t i = 0; i < pt.rows.size(); ++i) {
    const auto& row = pt.rows[i];
    const std::string locus = "publications.csv row " + std::to_string(i + 2);
    auto rit = researcher_index.find(row[p_rid]);
    if (rit == researcher_index.end())
      throw ParseError(locus + ": unknown researcher_id \"" + row[p_rid] + "\"");
    PublicationRecord p;
    p.id = row[p_id];
    p.year = parse_int_field(row[p_year], locus);
    p.n_authors = parse_int_field(row[p_nauth], locus);
    p.inter_institutional = parse_int_field(row[p_inter], locus);
    p.internal_coverage = parse_double_field(row[p_cover], locus);
    if (!row[p_jid].empty()) p.journal_id = row[p_jid];
    if (!row[p_jmcs].empty()) p.journal_mcs = parse_double_field(row[p_jmcs], locus);
    if (!row[p_jmnjs].empty()) p.journal_mnjs = parse_double_field(row[p_jmnjs], locus);
    if (!row[p_ncs].empty()) p.paper_ncs = parse_double_field(row[p_ncs], locus);
    if (!row[p_top].empty()) p.top_prop = parse_double_field(row[p_top], locus);
    auto& researcher = c.researchers[rit->second];
    if (!pub_index.emplace(p.id, std::make_pair(rit->second, researcher.publications.size()))
             .second)
      throw ParseError(locus + ": duplicate publication id \"" + p.id + "\"");
    researcher.publications.push_back(std::move(p));
  }

  const int c_pid = ct.column("publication_id", "citations.csv");
  const int c_year = ct.column("year", "citations.csv");
  const int c_self = ct.column("is_self", "citations.csv");
  for (std::size_t i = 0; i < ct.rows.size(); ++i) {
    const auto& row = ct.rows[i];
    const std::string locus = "citations.csv row " + std::to_string(i + 2);
    auto pit = pub_index.find(row[c_pid]);
    if (pit == pub_index.end())
      throw ParseError(locus + ": unknown publication_id \"" + row[c_pid] + "\"");
    CitationEvent e;
    e.year = parse_int_field(row[c_year], locus);
    const std::string& flag = row[c_self];
    if (flag == "0" || flag == "false") {
      e.is_self = false;
    } else if (flag == "1" || flag == "true") {
      e.is_self = true;
    } else {
      throw ParseError(locus + ": is_self must be 0/1/true/false, got \"" + flag + "\"");
    }
    c.researchers[pit->second.first].publications[pit->second.second].citations.push_back(e);
  }

  int max_year = 0;
  for (const auto& r : c.researchers)
    for (const auto& p : r.publications) {
      max_year = std::max(max_year, p.year);
      for (const auto& e : p.citations) max_year = std::max(max_year, e.year);
    }
  c.eval_year = max_year;
  return c;
}

enum class CorpusFormat { Json, CsvBundle };

/// Parses and validates; throws ParseError on malformed input, ValidationError
/// when any invariant fails (message names the first offender).
inline Corpus parse_corpus(const std::string& path, CorpusFormat format = CorpusFormat::Json) {
  Corpus c;
  if (format == CorpusFormat::Json) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json root;
    try {
      root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + ": " + e.what());
    }
    c = corpus_from_json(root);
  } else {
    c = parse_corpus_csv_bundle(path);
  }
  ValidationReport report = validate(c);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    std::ostringstream msg;
    msg << path << ": invalid corpus (" << report.violations.size() << " violation";
    if (report.violations.size() > 1) msg << "s";
    msg << "); first: researcher \"" << v.researcher_id << "\"";
    if (!v.publication_id.empty()) msg << " publication \"" << v.publication_id << "\"";
    msg << ": " << v.rule;
    throw ValidationError(msg.str());
  }
  return c;
}

inline void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(c).dump(2) << "\n";
}

}  // namespace scimetric
