#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "scimetric/corpus.hpp"
#include "scimetric/errors.hpp"

namespace scimetric {

// --- indicator identities ----------------------------------------------------

/// The 44 author-level indicators in canonical column order.
enum class Ind : int {
  P, Fp, App, MeanPpCollab, MeanPpIntCollab,
  C, Csc, Sc, PctSc, Nnc, PctNc, CPP, SIG, Cless5, PI, Cage,
  Fc, FracCPP, SumPpTopNCits,
  H, AWCR, AWCRpa, G, H2, POPh, MQuot, MgQuot, Q2, AW, E, M, A, AR, Hg,
  Hnorm, MillersH, SumPpTopProp, NprodP, TGtCa,
  Mcs, Mncs, MeanMjsMcs, MaxMjsMcs, MeanMnjs,
};

inline constexpr int kIndicatorCount = 44;

inline const std::array<std::string, kIndicatorCount>& indicator_names() {
  static const std::array<std::string, kIndicatorCount> names = {
      "P", "Fp", "App", "mean_pp_collab", "mean_pp_int_collab",
      "C", "Csc", "sc", "pct_sc", "nnc", "pct_nc", "CPP", "SIG", "Cless5", "PI", "Cage",
      "Fc", "FracCPP", "sum_pp_top_n_cits",
      "h", "AWCR", "AWCRpa", "g", "h2", "POPh", "m_quot", "mg_quot", "Q2", "AW", "e", "m", "A",
      "AR", "hg", "hnorm", "millers_h", "sum_pp_top_prop", "NprodP", "T_gt_ca",
      "mcs", "mncs", "mean_mjs_mcs", "max_mjs_mcs", "mean_mnjs"};
  return names;
}

inline const std::string& indicator_name(Ind i) {
  return indicator_names()[static_cast<int>(i)];
}

inline Ind indicator_from_name(const std::string& name) {
  const auto& names = indicator_names();
  for (int i = 0; i < kIndicatorCount; ++i)
    if (names[i] == name) return static_cast<Ind>(i);
  std::string allowed;
  for (int i = 0; i < kIndicatorCount; ++i) {
    if (i) allowed += ", ";
    allowed += names[i];
  }
  throw ComputeError("unknown indicator \"" + name + "\"; valid names: " + allowed);
}

/// One researcher's indicator values in canonical order, plus row metadata.
/// `degenerate` marks indicators whose defining ratio had a zero denominator
/// (the value is reported as 0).
struct IndicatorVector {
  std::string researcher_id;
  int academic_age = 0;
  std::array<double, kIndicatorCount> values{};
  std::array<bool, kIndicatorCount> degenerate{};

  double& operator[](Ind i) { return values[static_cast<int>(i)]; }
  double operator[](Ind i) const { return values[static_cast<int>(i)]; }
  bool is_degenerate(Ind i) const { return degenerate[static_cast<int>(i)]; }
};

// --- production ---------------------------------------------------------------

struct ProductionIndicators {
  double P = 0, Fp = 0, App = 0, mean_pp_collab = 0, mean_pp_int_collab = 0;
};

/// P, fractional publications (author count capped at 10), authors per paper,
/// and the two collaboration shares.
inline ProductionIndicators production_indicators(const ResearcherProfile& r) {
  if (r.publications.empty()) throw ComputeError("no publications for researcher " + r.id);
  ProductionIndicators out;
  out.P = static_cast<double>(r.publications.size());
  for (const auto& p : r.publications) {
    out.Fp += 1.0 / std::min(p.n_authors, 10);
    out.App += p.n_authors;
    out.mean_pp_collab += p.inter_institutional;
    out.mean_pp_int_collab += p.internal_coverage;
  }
  out.App /= out.P;
  out.mean_pp_collab /= out.P;
  out.mean_pp_int_collab /= out.P;
  return out;
}

// --- raw citation counts -------------------------------------------------------

struct CitationCountIndicators {
  double C = 0, Csc = 0, sc = 0, pct_sc = 0, nnc = 0, pct_nc = 0, CPP = 0, SIG = 0, Cless5 = 0,
         PI = 0, Cage = 0;
  bool zero_citations = false;  // C == 0: pct_sc, Cage, PI reported as 0
};

inline CitationCountIndicators citation_counts(const ResearcherProfile& r) {
  if (r.publications.empty()) throw ComputeError("no publications for researcher " + r.id);
  CitationCountIndicators out;
  double age_sum = 0.0;
  for (const auto& p : r.publications) {
    const double c = p.citation_count();
    out.C += c;
    if (c == 0.0) out.nnc += 1.0;
    out.SIG = std::max(out.SIG, c);
    for (const auto& e : p.citations) {
      const int age = e.year - p.year;  // publication year counts as age 0
      if (e.is_self) out.sc += 1.0;
      if (age < 5) out.Cless5 += 1.0;
      age_sum += age;
    }
  }
  const double P = static_cast<double>(r.publications.size());
  out.Csc = out.C - out.sc;
  out.CPP = out.C / P;
  out.pct_nc = 100.0 * out.nnc / P;
  if (out.C > 0.0) {
    out.pct_sc = 100.0 * out.sc / out.C;
    out.Cage = age_sum / out.C;
    out.PI = 100.0 * out.Cless5 / out.C;
  } else {
    out.zero_citations = true;
  }
  return out;
}

// --- fractional citations --------------------------------------------------------

struct FractionalCitations {
  double Fc = 0, FracCPP = 0;
};

/// Author-share citation credit: each m-authored paper with c citations
/// contributes c/m (no author cap, unlike Fp).
inline FractionalCitations fractional_citations(const ResearcherProfile& r) {
  if (r.publications.empty()) throw ComputeError("no publications for researcher " + r.id);
  FractionalCitations out;
  double fp = 0.0;
  for (const auto& p : r.publications) {
    out.Fc += static_cast<double>(p.citation_count()) / p.n_authors;
    fp += 1.0 / std::min(p.n_authors, 10);
  }
  out.FracCPP = out.Fc / fp;
  return out;
}

// --- h-core and the h family ------------------------------------------------------

struct HCore {
  int h = 0;
  std::vector<int> core_citations;   // descending citation counts of the h core papers
  std::vector<int> core_paper_ages;  // aligned paper ages (eval_year - year)
};

/// Hirsch core: h = max rank r whose r-th most cited paper has >= r citations.
/// Ties at the boundary keep the h highest counts; among equal counts older
/// papers are preferred so the core is deterministic.
inline HCore h_core(const std::vector<int>& citation_counts_per_paper,
                    const std::vector<int>& paper_ages) {
  if (citation_counts_per_paper.empty()) throw ComputeError("h_core: empty publication list");
  if (citation_counts_per_paper.size() != paper_ages.size())
    throw ComputeError("h_core: counts and ages are not aligned");
  const std::size_t n = citation_counts_per_paper.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (citation_counts_per_paper[a] != citation_counts_per_paper[b])
      return citation_counts_per_paper[a] > citation_counts_per_paper[b];
    return paper_ages[a] > paper_ages[b];
  });
  HCore core;
  for (std::size_t r = 0; r < n; ++r) {
    if (citation_counts_per_paper[order[r]] >= static_cast<int>(r + 1))
      core.h = static_cast<int>(r + 1);
    else
      break;
  }
  core.core_citations.reserve(core.h);
  core.core_paper_ages.reserve(core.h);
  for (int r = 0; r < core.h; ++r) {
    core.core_citations.push_back(citation_counts_per_paper[order[r]]);
    core.core_paper_ages.push_back(paper_ages[order[r]]);
  }
  return core;
}

struct HFamilyIndicators {
  double g = 0, h2 = 0, e = 0, A = 0, m = 0, Q2 = 0, hg = 0, AR = 0, hnorm = 0, millers_h = 0,
         m_quot = 0, mg_quot = 0;
  bool empty_core = false;  // h == 0: e, A, m, Q2, AR reported as 0
};

/// Indicators built from the h core and the full citation list.
/// g uses Egghe's zero-padding so it may exceed P; pass cap_g_at_p to revert.
inline HFamilyIndicators h_family(const HCore& core, const std::vector<int>& all_counts,
                                  int P, double C, int academic_age, bool cap_g_at_p = false) {
  HFamilyIndicators out;
  std::vector<int> sorted = all_counts;
  std::sort(sorted.begin(), sorted.end(), std::greater<int>());

  // g-index: largest rank whose cumulative citations reach rank^2. Padding
  // with zero-citation ranks lets the cumulative sum keep counting; g is
  // bounded by sqrt(C) so the scan stops there.
  double cumulative = 0.0;
  const int limit = cap_g_at_p ? static_cast<int>(sorted.size())
                               : std::max<int>(static_cast<int>(sorted.size()),
                                               static_cast<int>(std::floor(std::sqrt(
                                                   std::max(C, 0.0)))) + 1);
  for (int rank = 1; rank <= limit; ++rank) {
    cumulative += (rank <= static_cast<int>(sorted.size())) ? sorted[rank - 1] : 0;
    if (cumulative >= static_cast<double>(rank) * rank) out.g = rank;
  }

  out.h2 = std::cbrt(C);
  out.millers_h = std::sqrt(C / 2.0);
  out.hnorm = static_cast<double>(core.h) / P;
  const double age_floor = std::max(academic_age, 1);
  out.m_quot = core.h / age_floor;
  out.mg_quot = out.g / age_floor;
  out.hg = std::sqrt(static_cast<double>(core.h) * out.g);

  if (core.h == 0) {
    out.empty_core = true;
    return out;
  }
  double core_sum = 0.0, ar_sum = 0.0;
  std::vector<double> core_vals;
  core_vals.reserve(core.core_citations.size());
  for (std::size_t i = 0; i < core.core_citations.size(); ++i) {
    core_sum += core.core_citations[i];
    ar_sum += core.core_citations[i] / static_cast<double>(std::max(core.core_paper_ages[i], 1));
    core_vals.push_back(core.core_citations[i]);
  }
  out.e = std::sqrt(std::max(core_sum - static_cast<double>(core.h) * core.h, 0.0));
  out.A = core_sum / core.h;
  std::sort(core_vals.begin(), core_vals.end());
  out.m = (core_vals.size() % 2 == 1)
              ? core_vals[core_vals.size() / 2]
              : 0.5 * (core_vals[core_vals.size() / 2 - 1] + core_vals[core_vals.size() / 2]);
  out.Q2 = std::sqrt(core.h * out.m);
  out.AR = std::sqrt(ar_sum);
  return out;
}

// --- age-weighted citation rates ----------------------------------------------------

struct AgeWeightedIndicators {
  double AWCR = 0, AWCRpa = 0, AW = 0;
};

/// Citations discounted by paper age (same-year papers count as age 1).
inline AgeWeightedIndicators age_weighted(const ResearcherProfile& r, int eval_year) {
  if (r.publications.empty()) throw ComputeError("no publications for researcher " + r.id);
  AgeWeightedIndicators out;
  for (const auto& p : r.publications) {
    const double age = std::max(eval_year - p.year, 1);
    out.AWCR += p.citation_count() / age;
    out.AWCRpa += p.citation_count() / (age * p.n_authors);
  }
  out.AW = std::sqrt(out.AWCR);
  return out;
}

// --- POP h -----------------------------------------------------------------------------

/// h-index over author-normalized citation counts c_i / n_i (real-valued ranks).
inline int poph(const ResearcherProfile& r) {
  if (r.publications.empty()) throw ComputeError("no publications for researcher " + r.id);
  std::vector<double> normalized;
  normalized.reserve(r.publications.size());
  for (const auto& p : r.publications)
    normalized.push_back(static_cast<double>(p.citation_count()) / p.n_authors);
  std::sort(normalized.begin(), normalized.end(), std::greater<double>());
  int h = 0;
  for (std::size_t i = 0; i < normalized.size(); ++i)
    if (normalized[i] >= static_cast<double>(i + 1)) h = static_cast<int>(i + 1);
  return h;
}

// --- field/journal normalized indicators ------------------------------------------------

struct NormalizedIndicators {
  double sum_pp_top_n_cits = 0, sum_pp_top_prop = 0, mcs = 0, mncs = 0, mean_mjs_mcs = 0,
         max_mjs_mcs = 0, mean_mnjs = 0, NprodP = 0, T_gt_ca = 0;
  bool no_ncs = false, no_journal_mcs = false, no_mnjs = false, no_productive = false;
};

/// Indicators that compare against field/journal expectations. Per-paper
/// normalized scores are optional inputs; papers missing a field are skipped
/// and the denominator shrinks. The productivity benchmark is the citations
/// per paper expected in the researcher's specialty.
inline NormalizedIndicators normalized_indicators(const ResearcherProfile& r,
                                                  std::optional<double> benchmark) {
  if (r.publications.empty()) throw ComputeError("no publications for researcher " + r.id);
  NormalizedIndicators out;
  double csc = 0.0;
  double ncs_sum = 0.0, mnjs_sum = 0.0;
  int ncs_n = 0, mnjs_n = 0, mcs_n = 0;
  std::map<std::string, std::pair<double, int>> journals;  // id -> (mcs sum, count)
  for (const auto& p : r.publications) {
    const double c = p.citation_count();
    if (c > 10.0) out.sum_pp_top_n_cits += 1.0;
    if (p.top_prop) out.sum_pp_top_prop += *p.top_prop;
    if (p.paper_ncs) {
      ncs_sum += *p.paper_ncs;
      ++ncs_n;
    }
    if (p.journal_mnjs) {
      mnjs_sum += *p.journal_mnjs;
      ++mnjs_n;
    }
    if (p.journal_mcs) {
      out.max_mjs_mcs = std::max(out.max_mjs_mcs, *p.journal_mcs);
      ++mcs_n;
      if (p.journal_id) {
        auto& slot = journals[*p.journal_id];
        slot.first += *p.journal_mcs;
        slot.second += 1;
      }
    }
    for (const auto& e : p.citations)
      if (!e.is_self) csc += 1.0;
  }
  out.mcs = csc / static_cast<double>(r.publications.size());
  if (ncs_n > 0)
    out.mncs = ncs_sum / ncs_n;
  else
    out.no_ncs = true;
  if (mnjs_n > 0)
    out.mean_mnjs = mnjs_sum / mnjs_n;
  else
    out.no_mnjs = true;
  if (!journals.empty()) {
    for (const auto& [id, slot] : journals) out.mean_mjs_mcs += slot.first / slot.second;
    out.mean_mjs_mcs /= static_cast<double>(journals.size());
  }
  if (mcs_n == 0) out.no_journal_mcs = true;

  if (!benchmark) throw ComputeError("missing benchmark for researcher " + r.id);
  const double b = *benchmark;
  double productive_sum = 0.0;
  for (const auto& p : r.publications) {
    const double c = p.citation_count();
    if (c > b) {
      out.NprodP += 1.0;
      productive_sum += c;
    }
  }
  if (out.NprodP > 0.0)
    out.T_gt_ca = (productive_sum / out.NprodP) / b;
  else
    out.no_productive = true;
  return out;
}

// --- vector assembly -----------------------------------------------------------------------

struct IndicatorOptions {
  bool g_cap_at_p = false;
  std::optional<int> eval_year;  // overrides the corpus eval_year
  int threads = 1;               // worker cap for indicator_matrix
};

inline std::optional<double> resolve_benchmark(const ResearcherProfile& r, const Corpus& c) {
  if (r.benchmark_cpp) return r.benchmark_cpp;
  auto it = c.baselines.find(to_string(r.discipline));
  if (it != c.baselines.end()) return it->second;
  return std::nullopt;
}

inline IndicatorVector indicator_vector(const ResearcherProfile& r, int eval_year,
                                        std::optional<double> benchmark,
                                        const IndicatorOptions& opt = {}) {
  IndicatorVector vec;
  vec.researcher_id = r.id;
  vec.academic_age = academic_age(r, eval_year);
  auto flag = [&](Ind i) { vec.degenerate[static_cast<int>(i)] = true; };

  const auto prod = production_indicators(r);
  vec[Ind::P] = prod.P;
  vec[Ind::Fp] = prod.Fp;
  vec[Ind::App] = prod.App;
  vec[Ind::MeanPpCollab] = prod.mean_pp_collab;
  vec[Ind::MeanPpIntCollab] = prod.mean_pp_int_collab;

  const auto cites = citation_counts(r);
  vec[Ind::C] = cites.C;
  vec[Ind::Csc] = cites.Csc;
  vec[Ind::Sc] = cites.sc;
  vec[Ind::PctSc] = cites.pct_sc;
  vec[Ind::Nnc] = cites.nnc;
  vec[Ind::PctNc] = cites.pct_nc;
  vec[Ind::CPP] = cites.CPP;
  vec[Ind::SIG] = cites.SIG;
  vec[Ind::Cless5] = cites.Cless5;
  vec[Ind::PI] = cites.PI;
  vec[Ind::Cage] = cites.Cage;
  if (cites.zero_citations) {
    flag(Ind::PctSc);
    flag(Ind::PI);
    flag(Ind::Cage);
  }

  const auto frac = fractional_citations(r);
  vec[Ind::Fc] = frac.Fc;
  vec[Ind::FracCPP] = frac.FracCPP;

  std::vector<int> counts, ages;
  counts.reserve(r.publications.size());
  ages.reserve(r.publications.size());
  for (const auto& p : r.publications) {
    counts.push_back(p.citation_count());
    ages.push_back(eval_year - p.year);
  }
  const HCore core = h_core(counts, ages);
  vec[Ind::H] = core.h;
  const auto fam = h_family(core, counts, static_cast<int>(r.publications.size()), cites.C,
                            vec.academic_age, opt.g_cap_at_p);
  vec[Ind::G] = fam.g;
  vec[Ind::H2] = fam.h2;
  vec[Ind::E] = fam.e;
  vec[Ind::A] = fam.A;
  vec[Ind::M] = fam.m;
  vec[Ind::Q2] = fam.Q2;
  vec[Ind::Hg] = fam.hg;
  vec[Ind::AR] = fam.AR;
  vec[Ind::Hnorm] = fam.hnorm;
  vec[Ind::MillersH] = fam.millers_h;
  vec[Ind::MQuot] = fam.m_quot;
  vec[Ind::MgQuot] = fam.mg_quot;
  if (fam.empty_core) flag(Ind::A);

  const auto aw = age_weighted(r, eval_year);
  vec[Ind::AWCR] = aw.AWCR;
  vec[Ind::AWCRpa] = aw.AWCRpa;
  vec[Ind::AW] = aw.AW;

  vec[Ind::POPh] = poph(r);

  const auto norm = normalized_indicators(r, benchmark);
  vec[Ind::SumPpTopNCits] = norm.sum_pp_top_n_cits;
  vec[Ind::SumPpTopProp] = norm.sum_pp_top_prop;
  vec[Ind::Mcs] = norm.mcs;
  vec[Ind::Mncs] = norm.mncs;
  vec[Ind::MeanMjsMcs] = norm.mean_mjs_mcs;
  vec[Ind::MaxMjsMcs] = norm.max_mjs_mcs;
  vec[Ind::MeanMnjs] = norm.mean_mnjs;
  vec[Ind::NprodP] = norm.NprodP;
  vec[Ind::TGtCa] = norm.T_gt_ca;
  if (norm.no_ncs) flag(Ind::Mncs);
  if (norm.no_journal_mcs) {
    flag(Ind::MeanMjsMcs);
    flag(Ind::MaxMjsMcs);
  }
  if (norm.no_mnjs) flag(Ind::MeanMnjs);
  if (norm.no_productive) flag(Ind::TGtCa);
  return vec;
}

/// One row per researcher in canonical id order, columns in canonical order.
/// Rows may be evaluated in parallel; ordering is fixed by the id sort.
inline std::vector<IndicatorVector> indicator_matrix(const Corpus& c,
                                                     const IndicatorOptions& opt = {}) {
  const int eval_year = opt.eval_year.value_or(c.eval_year);
  std::vector<const ResearcherProfile*> order;
  order.reserve(c.researchers.size());
  for (const auto& r : c.researchers) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const ResearcherProfile* a, const ResearcherProfile* b) { return a->id < b->id; });

  std::vector<IndicatorVector> rows(order.size());
  std::vector<std::string> failures(order.size());
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        rows[i] = indicator_vector(*order[i], eval_year, resolve_benchmark(*order[i], c), opt);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };

  const std::size_t n = order.size();
  const int want = std::max(opt.threads, 1);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t nthreads = std::min<std::size_t>({static_cast<std::size_t>(want), hw, n});
  if (nthreads <= 1 || n < 16) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
      const std::size_t begin = t * chunk;
      if (begin >= n) break;
      pool.emplace_back(worker, begin, std::min(begin + chunk, n));
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!failures[i].empty())
      throw ComputeError("indicator failure for researcher " + order[i]->id + ": " + failures[i]);
  return rows;
}

}  // namespace scimetric
