#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "scimetric/corpus.hpp"
#include "scimetric/errors.hpp"
#include "scimetric/stats.hpp"

namespace scimetric::synth {

// --- deterministic sampling helpers ------------------------------------------
// All transforms are explicit (inverse CDF / Box-Muller on raw 64-bit draws)
// so a seed reproduces the identical corpus on any platform.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next() {  // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform_open() {  // in (0,1), safe for logs and inverse CDFs
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  double normal() {
    const double u = uniform_open(), v = uniform_open();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
  }

  double exponential(double mean) { return -mean * std::log(uniform_open()); }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[next() % i]);
  }

 private:
  std::uint64_t state_;
};

// --- generator spec --------------------------------------------------------------

struct GroupSpec {
  Discipline discipline;
  Seniority seniority = Seniority::PhD;
  int count = 0;
  double pub_median = 1;
  int pub_min = 1, pub_max = 1;
  double cit_median = 0;
  int cit_min = 0, cit_max = 0;
  int age_min = 1, age_max = 10;       // academic age range in years
  double authors_mean = 3.0;           // mean authors per paper
  double pub_sigma = 0.45, cit_sigma = 0.8;  // log-normal spreads
};

struct SynthSpec {
  int eval_year = 2013;
  std::uint64_t seed = 42;
  std::vector<GroupSpec> groups;
  std::map<std::string, double> baselines;  // discipline -> benchmark cpp
};

/// Default 741-researcher profile: four disciplines, five seniorities, group
/// sizes and publication/citation medians and ranges shaped like a survey of
/// European researchers indexed in a citation database.
inline SynthSpec default_synth_spec() {
  SynthSpec spec;
  auto add = [&](DisciplineKind d, Seniority s, int count, double pmed, int plo, int phi,
                 double cmed, int clo, int chi, int alo, int ahi, double apf) {
    GroupSpec g;
    g.discipline = {d, {}};
    g.seniority = s;
    g.count = count;
    g.pub_median = pmed;
    g.pub_min = plo;
    g.pub_max = phi;
    g.cit_median = cmed;
    g.cit_min = clo;
    g.cit_max = chi;
    g.age_min = alo;
    g.age_max = ahi;
    g.authors_mean = apf;
    spec.groups.push_back(g);
  };
  using K = DisciplineKind;
  using S = Seniority;
  add(K::Astronomy, S::PhD, 15, 7, 2, 36, 150, 8, 529, 2, 6, 4.5);
  add(K::Astronomy, S::PostDoc, 48, 19.5, 3, 103, 201.5, 3, 3177, 3, 12, 4.5);
  add(K::Astronomy, S::AssistantProf, 26, 39.5, 10, 142, 702, 69, 4009, 6, 20, 4.8);
  add(K::Astronomy, S::AssociateProf, 66, 61.5, 7, 292, 1214, 19, 9083, 8, 30, 5.0);
  add(K::Astronomy, S::Professor, 37, 90, 34, 327, 1889, 177, 16481, 12, 34, 5.2);
  add(K::EnvironmentalScience, S::PhD, 3, 4, 3, 5, 34, 16, 60, 2, 6, 3.2);
  add(K::EnvironmentalScience, S::PostDoc, 17, 9, 2, 59, 41, 10, 642, 3, 12, 3.2);
  add(K::EnvironmentalScience, S::AssistantProf, 39, 18, 2, 46, 148, 0, 573, 6, 20, 3.3);
  add(K::EnvironmentalScience, S::AssociateProf, 85, 29, 1, 103, 326, 2, 2519, 8, 30, 3.4);
  add(K::EnvironmentalScience, S::Professor, 51, 51.5, 1, 425, 435, 6, 14141, 12, 35, 3.5);
  add(K::Philosophy, S::PhD, 8, 1, 1, 5, 1, 1, 33, 1, 6, 1.3);
  add(K::Philosophy, S::PostDoc, 22, 4, 1, 31, 8, 0, 235, 3, 12, 1.4);
  add(K::Philosophy, S::AssistantProf, 43, 6.5, 1, 106, 6.5, 0, 1829, 6, 20, 1.4);
  add(K::Philosophy, S::AssociateProf, 74, 7, 1, 45, 8, 0, 565, 8, 30, 1.5);
  add(K::Philosophy, S::Professor, 75, 18, 1, 140, 29, 0, 3495, 12, 33, 1.5);
  add(K::PublicHealth, S::PhD, 9, 8, 4, 27, 60, 7, 253, 1, 6, 4.0);
  add(K::PublicHealth, S::PostDoc, 14, 11, 1, 23, 80.5, 0, 353, 4, 12, 4.0);
  add(K::PublicHealth, S::AssistantProf, 30, 22, 3, 288, 167, 10, 3796, 6, 20, 4.2);
  add(K::PublicHealth, S::AssociateProf, 50, 43, 4, 221, 518, 4, 3649, 8, 30, 4.3);
  add(K::PublicHealth, S::Professor, 29, 76, 5, 661, 954, 13, 13520, 12, 28, 4.4);
  spec.baselines = {{"Astronomy", 26.0},
                    {"EnvironmentalScience", 15.2},
                    {"Philosophy", 5.5},
                    {"PublicHealth", 15.7}};
  return spec;
}

namespace detail {

/// Stratified log-normal sample: one draw per quantile stratum, shuffled.
/// Keeps the sample median glued to the target median.
inline std::vector<long> stratified_lognormal(Rng& rng, int n, double median, double sigma,
                                              long lo, long hi) {
  std::vector<long> out(n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const double mu = std::log(std::max(median, 0.5));
  for (int i = 0; i < n; ++i) {
    const double u = (order[i] + 0.5) / n;
    const double z = stats::normal_quantile(u);
    const long v = std::lround(std::exp(mu + sigma * z));
    out[i] = std::clamp(v, lo, hi);
  }
  return out;
}

inline std::string short_name(const Discipline& d) {
  switch (d.kind) {
    case DisciplineKind::Astronomy: return "AST";
    case DisciplineKind::EnvironmentalScience: return "ENV";
    case DisciplineKind::Philosophy: return "PHI";
    case DisciplineKind::PublicHealth: return "PUB";
    case DisciplineKind::Other: return "OTH";
  }
  return "OTH";
}

inline std::string short_name(Seniority s) {
  switch (s) {
    case Seniority::PhD: return "PHD";
    case Seniority::PostDoc: return "PDC";
    case Seniority::AssistantProf: return "ASS";
    case Seniority::AssociateProf: return "ASC";
    case Seniority::Professor: return "PRF";
  }
  return "UNK";
}

}  // namespace detail

/// Deterministic synthetic corpus: per (discipline, seniority) group the
/// publication and citation totals follow clipped log-normals whose medians
/// sit on the group targets; groups with count 0 are omitted.
inline Corpus synth_corpus(const SynthSpec& spec) {
  Rng rng(spec.seed);
  Corpus corpus;
  corpus.eval_year = spec.eval_year;
  corpus.baselines = spec.baselines;

  // per-discipline journal pools with stable scores
  std::map<std::string, std::vector<std::pair<std::string, std::pair<double, double>>>> pools;
  for (const auto& g : spec.groups) {
    const std::string dname = to_string(g.discipline);
    if (pools.count(dname)) continue;
    auto& pool = pools[dname];
    for (int j = 0; j < 20; ++j) {
      char id[32];
      std::snprintf(id, sizeof(id), "J-%s-%02d", detail::short_name(g.discipline).c_str(), j + 1);
      const double mcs = std::exp(std::log(5.0) + 0.6 * rng.normal());
      const double mnjs = std::exp(0.35 * rng.normal());
      pool.push_back({id, {mcs, mnjs}});
    }
  }

  int serial = 0;
  for (const auto& g : spec.groups) {
    if (g.count <= 0) continue;  // empty groups are omitted
    const auto pubs = detail::stratified_lognormal(rng, g.count, g.pub_median, g.pub_sigma,
                                                   std::min<long>(g.pub_min, 1), g.pub_max);
    const auto cits = detail::stratified_lognormal(
        rng, g.count, std::max(g.cit_median, 0.5), g.cit_sigma,
        std::min<long>(g.cit_min, static_cast<long>(g.cit_median)), g.cit_max);
    const auto& pool = pools.at(to_string(g.discipline));

    for (int i = 0; i < g.count; ++i) {
      ResearcherProfile r;
      char id[64];
      std::snprintf(id, sizeof(id), "%s-%s-%04d", detail::short_name(g.discipline).c_str(),
                    detail::short_name(g.seniority).c_str(), ++serial);
      r.id = id;
      r.discipline = g.discipline;
      r.seniority = g.seniority;

      const int n_pubs = static_cast<int>(std::max<long>(pubs[i], 1));
      const long total_cits = cits[i];
      const int age = rng.uniform_int(g.age_min, g.age_max);
      const int first_year = spec.eval_year - age;

      // paper years: the first paper pins the academic age, the rest spread
      std::vector<int> years(n_pubs);
      years[0] = first_year;
      for (int p = 1; p < n_pubs; ++p) years[p] = rng.uniform_int(first_year, spec.eval_year);

      // skewed citation split across papers (largest-remainder rounding)
      std::vector<double> weights(n_pubs);
      double wsum = 0.0;
      for (int p = 0; p < n_pubs; ++p) {
        weights[p] = std::pow(p + 1.0, -1.2) * (0.5 + rng.uniform());
        wsum += weights[p];
      }
      std::vector<long> alloc(n_pubs, 0);
      std::vector<std::pair<double, int>> remainders(n_pubs);
      long assigned = 0;
      for (int p = 0; p < n_pubs; ++p) {
        const double share = total_cits * weights[p] / wsum;
        alloc[p] = static_cast<long>(share);
        assigned += alloc[p];
        remainders[p] = {share - alloc[p], p};
      }
      std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (long rexc = total_cits - assigned, p = 0; rexc > 0; --rexc, ++p)
        ++alloc[remainders[p % n_pubs].second];

      for (int p = 0; p < n_pubs; ++p) {
        PublicationRecord pub;
        char pid[80];
        std::snprintf(pid, sizeof(pid), "%s-p%03d", r.id.c_str(), p + 1);
        pub.id = pid;
        pub.year = years[p];
        pub.n_authors =
            std::min(1 + static_cast<int>(rng.exponential(std::max(g.authors_mean - 1.0, 0.01))),
                     40);
        pub.inter_institutional = rng.bernoulli(0.6) ? 1 : 0;
        pub.internal_coverage = std::round((0.2 + 0.7 * rng.uniform()) * 1000.0) / 1000.0;
        const auto& journal = pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
        pub.journal_id = journal.first;
        pub.journal_mcs = std::round(journal.second.first * 100.0) / 100.0;
        pub.journal_mnjs = std::round(journal.second.second * 100.0) / 100.0;
        const double ncs = std::exp(0.7 * rng.normal());
        pub.paper_ncs = std::round(ncs * 1000.0) / 1000.0;
        pub.top_prop = ncs > 2.0 ? 1.0 : 0.0;
        for (long e = 0; e < alloc[p]; ++e) {
          CitationEvent ev;
          const int lag = static_cast<int>(rng.exponential(2.2));
          ev.year = std::min(pub.year + lag, spec.eval_year);
          ev.is_self = rng.bernoulli(0.18);
          pub.citations.push_back(ev);
        }
        r.publications.push_back(std::move(pub));
      }
      corpus.researchers.push_back(std::move(r));
    }
  }
  return corpus;
}

}  // namespace scimetric::synth
