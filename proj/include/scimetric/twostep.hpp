#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scimetric/errors.hpp"

namespace scimetric::twostep {

// --- cluster features --------------------------------------------------------

/// Sufficient statistics of a group of rows: per continuous variable the sum
/// and sum of squares, per categorical variable the level counts. Merging is
/// commutative and associative field-wise.
struct ClusterFeature {
  int n = 0;
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::vector<std::vector<int>> level_counts;

  static ClusterFeature singleton(const Eigen::RowVectorXd& row,
                                  const std::vector<int>& cat_row = {},
                                  const std::vector<int>& cat_levels = {}) {
    ClusterFeature f;
    f.n = 1;
    f.sum.resize(row.size());
    f.sum_sq.resize(row.size());
    for (Eigen::Index k = 0; k < row.size(); ++k) {
      f.sum[k] = row[k];
      f.sum_sq[k] = row[k] * row[k];
    }
    f.level_counts.resize(cat_levels.size());
    for (std::size_t k = 0; k < cat_levels.size(); ++k) {
      f.level_counts[k].assign(cat_levels[k], 0);
      f.level_counts[k].at(cat_row[k]) = 1;
    }
    return f;
  }

  void absorb(const ClusterFeature& o) {
    n += o.n;
    for (std::size_t k = 0; k < sum.size(); ++k) {
      sum[k] += o.sum[k];
      sum_sq[k] += o.sum_sq[k];
    }
    for (std::size_t k = 0; k < level_counts.size(); ++k)
      for (std::size_t l = 0; l < level_counts[k].size(); ++l)
        level_counts[k][l] += o.level_counts[k][l];
  }

  double mean(std::size_t k) const { return sum[k] / n; }

  /// Biased within-feature variance of continuous variable k.
  double within_variance(std::size_t k) const {
    const double m = mean(k);
    return std::max(sum_sq[k] / n - m * m, 0.0);
  }

  /// Within-feature entropy of categorical variable k.
  double entropy(std::size_t k) const {
    double e = 0.0;
    for (int c : level_counts[k]) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / n;
      e -= p * std::log(p);
    }
    return e;
  }
};

/// Dataset-level context for the log-likelihood distance: overall variance of
/// each continuous variable and the level counts of categorical ones.
struct FeatureSpace {
  std::vector<double> overall_variance;
  std::vector<int> cat_levels;

  std::size_t n_continuous() const { return overall_variance.size(); }
};

/// zeta(v) = -N_v * [ sum_k 1/2 ln(sigma_k^2 + sigma_vk^2) + sum_k E_vk ],
/// the log-likelihood "tightness" of a feature. Merging two features can only
/// lose tightness, which is what the distance below measures.
inline double zeta(const ClusterFeature& f, const FeatureSpace& space) {
  double acc = 0.0;
  for (std::size_t k = 0; k < space.n_continuous(); ++k)
    acc += 0.5 * std::log(space.overall_variance[k] + f.within_variance(k));
  for (std::size_t k = 0; k < space.cat_levels.size(); ++k) acc += f.entropy(k);
  return -static_cast<double>(f.n) * acc;
}

namespace detail {

/// zeta of the merge a+b without materializing the merged feature.
inline double zeta_merged(const ClusterFeature& a, const ClusterFeature& b,
                          const FeatureSpace& space) {
  const double n = a.n + b.n;
  double acc = 0.0;
  for (std::size_t k = 0; k < space.n_continuous(); ++k) {
    const double s = a.sum[k] + b.sum[k];
    const double ss = a.sum_sq[k] + b.sum_sq[k];
    const double m = s / n;
    const double var = std::max(ss / n - m * m, 0.0);
    acc += 0.5 * std::log(space.overall_variance[k] + var);
  }
  for (std::size_t k = 0; k < space.cat_levels.size(); ++k) {
    for (std::size_t l = 0; l < a.level_counts[k].size(); ++l) {
      const int c = a.level_counts[k][l] + b.level_counts[k][l];
      if (c == 0) continue;
      const double p = c / n;
      acc -= p * std::log(p);
    }
  }
  return -n * acc;
}

}  // namespace detail

/// Log-likelihood distance d(a,b) = zeta(a) + zeta(b) - zeta(a+b) >= 0:
/// the tightness lost by pooling the two features.
inline double log_likelihood_distance(const ClusterFeature& a, const ClusterFeature& b,
                                      const FeatureSpace& space) {
  const double d = zeta(a, space) + zeta(b, space) - detail::zeta_merged(a, b, space);
  return std::max(d, 0.0);
}

// --- CF-tree pre-clustering -----------------------------------------------------

struct CfTreeOptions {
  int branching = 8;         // max children of an internal node
  int leaf_capacity = 8;     // max entries per leaf
  double initial_threshold = 0.0;
  double threshold_growth = 2.0;  // multiplier applied on rebuild
  int max_leaf_entries = 512;     // global entry budget before a rebuild
};

struct Preclustering {
  std::vector<ClusterFeature> features;
  std::vector<int> row_to_feature;  // per input row, index into features
  double final_threshold = 0.0;
  int rebuilds = 0;
};

namespace detail {

class CfTree {
 public:
  CfTree(const FeatureSpace& space, const CfTreeOptions& opt)
      : space_(space), opt_(opt), threshold_(opt.initial_threshold) {}

  /// Inserts a feature; returns the id of the entry that now holds it.
  int insert(ClusterFeature f, int id) {
    if (!root_) {
      root_ = std::make_unique<Node>();
      root_->leaf = true;
      add_entry(*root_, std::move(f), id);
      return id;
    }
    auto [holder, split] = insert_into(*root_, std::move(f), id);
    if (split) {
      auto fresh = std::make_unique<Node>();
      fresh->leaf = false;
      fresh->features.push_back(std::move(split->first_feature));
      fresh->children.push_back(std::move(split->first_node));
      fresh->features.push_back(std::move(split->second_feature));
      fresh->children.push_back(std::move(split->second_node));
      // previous root was consumed by the split halves
      root_ = std::move(fresh);
    }
    if (entry_count_ > opt_.max_leaf_entries) rebuild();
    return resolve(holder);
  }

  /// Final leaf entries in deterministic tree order, plus the id -> entry map.
  void collect(std::vector<ClusterFeature>& features, std::map<int, int>& id_to_index) const {
    features.clear();
    id_to_index.clear();
    if (root_) collect_node(*root_, features, id_to_index);
  }

  int resolve(int id) const {
    auto it = merged_into_.find(id);
    while (it != merged_into_.end()) {
      id = it->second;
      it = merged_into_.find(id);
    }
    return id;
  }

  double threshold() const { return threshold_; }
  int rebuilds() const { return rebuilds_; }

 private:
  struct Node {
    bool leaf = true;
    std::vector<ClusterFeature> features;
    std::vector<int> entry_ids;                   // leaf only
    std::vector<std::unique_ptr<Node>> children;  // internal only
  };

  struct Split {
    ClusterFeature first_feature, second_feature;
    std::unique_ptr<Node> first_node, second_node;
  };

  struct InsertResult {
    int holder;
    std::optional<Split> split;
  };

  const FeatureSpace& space_;
  CfTreeOptions opt_;
  double threshold_;
  std::unique_ptr<Node> root_;
  int entry_count_ = 0;
  int rebuilds_ = 0;
  std::map<int, int> merged_into_;

  void add_entry(Node& leaf, ClusterFeature f, int id) {
    leaf.features.push_back(std::move(f));
    leaf.entry_ids.push_back(id);
    ++entry_count_;
  }

  InsertResult insert_into(Node& node, ClusterFeature f, int id) {
    if (node.leaf) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < node.features.size(); ++i) {
        const double d = log_likelihood_distance(node.features[i], f, space_);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(i);
        }
      }
      if (best >= 0 && best_d <= threshold_) {
        node.features[best].absorb(f);
        if (id != node.entry_ids[best]) merged_into_[id] = node.entry_ids[best];
        return {node.entry_ids[best], std::nullopt};
      }
      add_entry(node, std::move(f), id);
      if (static_cast<int>(node.features.size()) > opt_.leaf_capacity)
        return {id, split_node(node)};
      return {id, std::nullopt};
    }

    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.features.size(); ++i) {
      const double d = log_likelihood_distance(node.features[i], f, space_);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    ClusterFeature f_copy = f;  // parent summary update after recursion
    auto res = insert_into(*node.children[best], std::move(f), id);
    if (res.split) {
      Split s = std::move(*res.split);
      node.features[best] = std::move(s.first_feature);
      node.children[best] = std::move(s.first_node);
      node.features.insert(node.features.begin() + best + 1, std::move(s.second_feature));
      node.children.insert(node.children.begin() + best + 1, std::move(s.second_node));
      if (static_cast<int>(node.children.size()) > opt_.branching)
        return {res.holder, split_node(node)};
    } else {
      node.features[best].absorb(f_copy);
    }
    return {res.holder, std::nullopt};
  }

  /// Farthest-pair seeded binary split; entries go to the nearer seed.
  Split split_node(Node& node) {
    const std::size_t m = node.features.size();
    std::size_t seed_a = 0, seed_b = 1;
    double worst = -1.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const double d = log_likelihood_distance(node.features[i], node.features[j], space_);
        if (d > worst) {
          worst = d;
          seed_a = i;
          seed_b = j;
        }
      }
    Split s;
    s.first_node = std::make_unique<Node>();
    s.second_node = std::make_unique<Node>();
    s.first_node->leaf = s.second_node->leaf = node.leaf;
    bool first_init = false, second_init = false;
    const ClusterFeature seed_feature_a = node.features[seed_a];  // entries move out below
    const ClusterFeature seed_feature_b = node.features[seed_b];
    for (std::size_t i = 0; i < m; ++i) {
      const double da = log_likelihood_distance(node.features[i], seed_feature_a, space_);
      const double db = log_likelihood_distance(node.features[i], seed_feature_b, space_);
      const bool to_first = (i == seed_a) || (i != seed_b && da <= db);
      Node& dst = to_first ? *s.first_node : *s.second_node;
      ClusterFeature& summary = to_first ? s.first_feature : s.second_feature;
      bool& init = to_first ? first_init : second_init;
      if (!init) {
        summary = node.features[i];
        init = true;
      } else {
        summary.absorb(node.features[i]);
      }
      dst.features.push_back(std::move(node.features[i]));
      if (node.leaf)
        dst.entry_ids.push_back(node.entry_ids[i]);
      else
        dst.children.push_back(std::move(node.children[i]));
    }
    return s;
  }

  /// Reinserts all leaf entries into a fresh tree with a coarser threshold.
  void rebuild() {
    std::vector<ClusterFeature> entries;
    std::vector<int> ids;
    gather(*root_, entries, ids);

    double min_positive = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries.size(); ++i)
      for (std::size_t j = i + 1; j < entries.size(); ++j) {
        const double d = log_likelihood_distance(entries[i], entries[j], space_);
        if (d > 0.0) min_positive = std::min(min_positive, d);
      }
    double next = threshold_ * opt_.threshold_growth;
    if (std::isfinite(min_positive)) next = std::max(next, min_positive);
    if (next <= threshold_) next = std::max(threshold_ * 2.0, 1e-12);
    threshold_ = next;
    ++rebuilds_;

    root_.reset();
    entry_count_ = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!root_) {
        root_ = std::make_unique<Node>();
        root_->leaf = true;
        add_entry(*root_, std::move(entries[i]), ids[i]);
        continue;
      }
      auto [holder, split] = insert_into(*root_, std::move(entries[i]), ids[i]);
      (void)holder;
      if (split) {
        auto fresh = std::make_unique<Node>();
        fresh->leaf = false;
        fresh->features.push_back(std::move(split->first_feature));
        fresh->children.push_back(std::move(split->first_node));
        fresh->features.push_back(std::move(split->second_feature));
        fresh->children.push_back(std::move(split->second_node));
        root_ = std::move(fresh);
      }
    }
    if (entry_count_ > opt_.max_leaf_entries) rebuild();  // coarsen further
  }

  void gather(Node& node, std::vector<ClusterFeature>& out, std::vector<int>& ids) {
    if (node.leaf) {
      for (std::size_t i = 0; i < node.features.size(); ++i) {
        out.push_back(std::move(node.features[i]));
        ids.push_back(node.entry_ids[i]);
      }
      return;
    }
    for (auto& child : node.children) gather(*child, out, ids);
  }

  void collect_node(const Node& node, std::vector<ClusterFeature>& features,
                    std::map<int, int>& id_to_index) const {
    if (node.leaf) {
      for (std::size_t i = 0; i < node.features.size(); ++i) {
        id_to_index[node.entry_ids[i]] = static_cast<int>(features.size());
        features.push_back(node.features[i]);
      }
      return;
    }
    for (const auto& child : node.children) collect_node(*child, features, id_to_index);
  }
};

}  // namespace detail

/// Single sequential pass over the rows: each row joins its nearest leaf entry
/// when the distance stays under the threshold, otherwise opens a new entry.
/// Deterministic given the row order.
inline Preclustering precluster(const Eigen::MatrixXd& rows, const FeatureSpace& space,
                                const CfTreeOptions& opt = {}) {
  if (!rows.allFinite()) throw ComputeError("precluster: non-finite input");
  detail::CfTree tree(space, opt);
  const int n = static_cast<int>(rows.rows());
  std::vector<int> row_entry(n);
  for (int i = 0; i < n; ++i)
    row_entry[i] = tree.insert(ClusterFeature::singleton(rows.row(i)), i);

  Preclustering out;
  std::map<int, int> id_to_index;
  tree.collect(out.features, id_to_index);
  out.row_to_feature.resize(n);
  for (int i = 0; i < n; ++i) out.row_to_feature[i] = id_to_index.at(tree.resolve(row_entry[i]));
  out.final_threshold = tree.threshold();
  out.rebuilds = tree.rebuilds();
  return out;
}

// --- agglomeration ----------------------------------------------------------------

struct Solution {
  int j = 0;
  std::vector<int> feature_to_cluster;      // 0-based cluster per input feature
  std::vector<ClusterFeature> clusters;     // pooled feature per cluster
  double bic = 0.0;
  double d_min = 0.0;  // smallest inter-cluster distance in this solution
};

struct Agglomeration {
  std::vector<Solution> solutions;     // for J = j_min..j_max (ascending)
  std::vector<double> merge_heights;   // heights[t]: distance of the merge leaving F-1-t clusters
  int n_rows = 0;
  int m_per_cluster = 0;  // parameters per cluster in the BIC penalty
};

/// Repeatedly merges the closest pair under the log-likelihood distance,
/// recording a full solution for every J in [j_min, j_max]. Ties go to the
/// lexicographically smallest cluster-index pair.
inline Agglomeration agglomerate(const std::vector<ClusterFeature>& features,
                                 const FeatureSpace& space, int j_min, int j_max) {
  const int f = static_cast<int>(features.size());
  if (f == 0) throw ComputeError("agglomerate: no features");
  j_min = std::max(j_min, 1);
  j_max = std::min(j_max, f);
  if (j_min > j_max) throw ComputeError("agglomerate: fewer features than j_min");

  Agglomeration out;
  out.m_per_cluster = static_cast<int>(2 * space.n_continuous());
  for (int l : space.cat_levels) out.m_per_cluster += l - 1;
  for (const auto& feat : features) out.n_rows += feat.n;
  const double log_n = std::log(std::max(out.n_rows, 2));

  std::vector<ClusterFeature> work = features;
  std::vector<bool> active(f, true);
  std::vector<double> zetas(f);
  for (int i = 0; i < f; ++i) zetas[i] = zeta(work[i], space);
  double zeta_sum = std::accumulate(zetas.begin(), zetas.end(), 0.0);

  // distance matrix with cached per-cluster nearest neighbours
  std::vector<std::vector<double>> dist(f);
  for (int i = 0; i < f; ++i) dist[i].assign(f, 0.0);
  for (int i = 0; i < f; ++i)
    for (int j = i + 1; j < f; ++j)
      dist[i][j] = dist[j][i] = log_likelihood_distance(work[i], work[j], space);
  std::vector<int> nn(f, -1);
  std::vector<double> nn_d(f, std::numeric_limits<double>::infinity());
  auto refresh_nn = [&](int i) {
    nn[i] = -1;
    nn_d[i] = std::numeric_limits<double>::infinity();
    for (int j = 0; j < f; ++j) {
      if (j == i || !active[j]) continue;
      if (dist[i][j] < nn_d[i]) {
        nn_d[i] = dist[i][j];
        nn[i] = j;
      }
    }
  };
  for (int i = 0; i < f; ++i) refresh_nn(i);

  auto snapshot = [&](int j_now) {
    Solution s;
    s.j = j_now;
    s.feature_to_cluster.assign(f, -1);
    std::vector<int> cluster_of(f, -1);
    int next = 0;
    for (int i = 0; i < f; ++i) {
      if (!active[i]) continue;
      cluster_of[i] = next++;
      s.clusters.push_back(work[i]);
    }
    s.bic = -2.0 * zeta_sum + static_cast<double>(j_now) * out.m_per_cluster * log_n;
    return std::pair(std::move(s), std::move(cluster_of));
  };

  // parent chain so dissolved clusters can be mapped to their survivor
  std::vector<int> absorbed_by(f, -1);
  auto root_of = [&](int i) {
    while (absorbed_by[i] >= 0) i = absorbed_by[i];
    return i;
  };

  auto record_solution = [&](int j_now) {
    if (j_now < j_min || j_now > j_max) return;
    auto [s, cluster_of] = snapshot(j_now);
    for (int i = 0; i < f; ++i) s.feature_to_cluster[i] = cluster_of[root_of(i)];
    out.solutions.push_back(std::move(s));
  };

  record_solution(f);
  int remaining = f;
  while (remaining > 1) {
    int best_a = -1, best_b = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < f; ++i) {
      if (!active[i] || nn[i] < 0) continue;
      const int a = std::min(i, nn[i]);
      const int b = std::max(i, nn[i]);
      if (nn_d[i] < best_d ||
          (nn_d[i] == best_d && std::pair(a, b) < std::pair(best_a, best_b))) {
        best_d = nn_d[i];
        best_a = a;
        best_b = b;
      }
    }

    out.merge_heights.push_back(best_d);
    zeta_sum -= zetas[best_a] + zetas[best_b];
    work[best_a].absorb(work[best_b]);
    zetas[best_a] = zeta(work[best_a], space);
    zeta_sum += zetas[best_a];
    active[best_b] = false;
    absorbed_by[best_b] = best_a;
    --remaining;

    for (int j = 0; j < f; ++j) {
      if (!active[j] || j == best_a) continue;
      const double d = log_likelihood_distance(work[best_a], work[j], space);
      dist[best_a][j] = dist[j][best_a] = d;
    }
    refresh_nn(best_a);
    for (int j = 0; j < f; ++j) {
      if (!active[j] || j == best_a) continue;
      if (nn[j] == best_a || nn[j] == best_b)
        refresh_nn(j);
      else if (dist[j][best_a] < nn_d[j]) {
        nn_d[j] = dist[j][best_a];
        nn[j] = best_a;
      }
    }

    record_solution(remaining);
  }

  // d_min of the J-cluster solution is the height of the merge J -> J-1,
  // which is merge number f - J (1-based) in the recorded sequence.
  std::sort(out.solutions.begin(), out.solutions.end(),
            [](const Solution& a, const Solution& b) { return a.j < b.j; });
  for (auto& s : out.solutions) {
    const int t = f - s.j;  // merges already applied when this solution existed
    s.d_min = (t < static_cast<int>(out.merge_heights.size())) ? out.merge_heights[t] : 0.0;
  }
  return out;
}

// --- cluster-count selection ----------------------------------------------------------

struct BicEntry {
  int j = 0;
  double bic = 0.0;
  double bic_change_ratio = 0.0;  // improvement relative to the first improvement
  double dist_ratio = 0.0;        // d_min(J) / d_min(J+1)
};

struct SelectKOptions {
  double bic_improvement_cutoff = 0.04;
  double distance_ratio_margin = 1.15;
};

struct KSelection {
  int k = 1;
  std::vector<BicEntry> trail;
  std::vector<std::string> warnings;
};

/// Two-pass heuristic over the BIC trail: the first pass finds where BIC
/// improvements fade below the cutoff; the second compares jumps in the
/// minimum inter-cluster distance among the remaining candidates.
inline KSelection select_k(const Agglomeration& agg, const SelectKOptions& opt = {}) {
  KSelection out;
  const auto& sol = agg.solutions;
  if (sol.empty()) throw ComputeError("select_k: no solutions");
  if (sol.front().j != 1) throw ComputeError("select_k: trail must start at J = 1");
  const int j_max = sol.back().j;

  out.trail.reserve(sol.size());
  for (const auto& s : sol) {
    BicEntry e;
    e.j = s.j;
    e.bic = s.bic;
    out.trail.push_back(e);
  }
  for (std::size_t i = 0; i + 1 < sol.size(); ++i)
    if (sol[i + 1].d_min > 0.0) out.trail[i].dist_ratio = sol[i].d_min / sol[i + 1].d_min;

  if (j_max == 1) {
    out.k = 1;
    return out;
  }

  const double first_change = sol[1].bic - sol[0].bic;
  if (!(first_change < 0.0)) {
    out.k = 1;
    out.warnings.push_back(first_change == 0.0 ? "degenerate BIC trail; k = 1"
                                               : "no BIC improvement beyond one cluster");
    for (auto& e : out.trail) e.bic_change_ratio = 0.0;
    out.trail[0].bic_change_ratio = 1.0;
    return out;
  }

  bool all_equal = true;
  for (const auto& s : sol) all_equal = all_equal && (s.bic == sol[0].bic);
  if (all_equal) {
    out.k = 1;
    out.warnings.push_back("degenerate BIC trail; k = 1");
    return out;
  }

  // first pass: smallest J whose relative improvement drops under the cutoff
  // (the loop keeps running so the full trail is reported)
  int j_init = j_max;
  for (int j = 1; j < j_max; ++j) {
    const double change = sol[j].bic - sol[j - 1].bic;  // J = j -> j+1
    const double ratio = change / first_change;
    out.trail[j - 1].bic_change_ratio = ratio;
    if (ratio < opt.bic_improvement_cutoff && j_init == j_max) j_init = j;
  }
  if (j_init <= 1) {
    out.k = 1;
    return out;
  }

  // second pass: compare the two largest distance-jump ratios among J = 2..j_init
  int best_j = -1, second_j = -1;
  double best_r = -1.0, second_r = -1.0;
  for (int j = 2; j <= std::min(j_init, j_max - 1); ++j) {
    const double r = out.trail[j - 1].dist_ratio;
    if (r > best_r) {
      second_r = best_r;
      second_j = best_j;
      best_r = r;
      best_j = j;
    } else if (r > second_r) {
      second_r = r;
      second_j = j;
    }
  }
  if (best_j < 0) {
    out.k = std::min(2, j_max);
    return out;
  }
  if (second_j < 0 || best_r > opt.distance_ratio_margin * second_r)
    out.k = best_j;
  else
    out.k = std::max(best_j, second_j);
  return out;
}

// --- full fit ---------------------------------------------------------------------------

enum class FitGrade { Poor, Fair, Good };

inline const char* to_string(FitGrade g) {
  switch (g) {
    case FitGrade::Poor: return "poor";
    case FitGrade::Fair: return "fair";
    case FitGrade::Good: return "good";
  }
  return "poor";
}

struct ClusterModel {
  int k = 1;
  std::map<std::string, int> assignments;  // researcher id -> cluster 1..k
  std::vector<int> row_assignments;        // per input row, cluster 1..k
  std::vector<ClusterFeature> features;    // pooled per cluster, clustering space
  std::vector<BicEntry> bic_trail;
  double silhouette = 0.0;
  FitGrade fit_grade = FitGrade::Poor;
  std::vector<std::string> variables;  // names of the variables actually used
  std::vector<std::string> warnings;
};

struct TwoStepOptions {
  std::optional<int> fixed_k;          // nullopt = auto selection
  bool standardize = true;
  bool log10_transform = false;
  std::vector<std::string> variables;  // empty = all columns
  CfTreeOptions tree;
  SelectKOptions selection;
  int j_max = 15;
};

/// Mean silhouette width over all rows (Euclidean distance, pairwise).
/// Rows in singleton clusters score 0; a single-cluster model scores 0.
inline double mean_silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k) {
  const int n = static_cast<int>(x.rows());
  if (k <= 1 || n <= 1) return 0.0;
  std::vector<int> sizes(k, 0);
  for (int l : labels) ++sizes[l - 1];
  Eigen::MatrixXd cluster_dist = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = (x.row(i) - x.row(j)).norm();
      cluster_dist(i, labels[j] - 1) += d;
      cluster_dist(j, labels[i] - 1) += d;
    }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int li = labels[i] - 1;
    if (sizes[li] <= 1) continue;  // singleton: contributes 0
    const double a = cluster_dist(i, li) / (sizes[li] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == li || sizes[c] == 0) continue;
      b = std::min(b, cluster_dist(i, c) / sizes[c]);
    }
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    total += (denom > 0.0) ? (b - a) / denom : 0.0;
  }
  return total / n;
}

/// Two-step fit: transform/standardize, CF-tree pre-clustering, agglomerative
/// merging, cluster-count selection, silhouette grading.
inline ClusterModel fit(const Eigen::MatrixXd& matrix, const std::vector<std::string>& row_ids,
                        const std::vector<std::string>& column_names,
                        const TwoStepOptions& opt = {}) {
  const int n = static_cast<int>(matrix.rows());
  if (n != static_cast<int>(row_ids.size())) throw ComputeError("fit: row ids do not match rows");
  if (matrix.cols() != static_cast<Eigen::Index>(column_names.size()))
    throw ComputeError("fit: column names do not match columns");

  ClusterModel model;

  // column subset
  std::vector<int> cols;
  if (opt.variables.empty()) {
    cols.resize(matrix.cols());
    std::iota(cols.begin(), cols.end(), 0);
  } else {
    for (const auto& name : opt.variables) {
      auto it = std::find(column_names.begin(), column_names.end(), name);
      if (it == column_names.end()) throw ComputeError("fit: unknown variable \"" + name + "\"");
      cols.push_back(static_cast<int>(it - column_names.begin()));
    }
  }

  if (n < 2) {
    model.warnings.push_back("fewer than 2 rows; trivial single-cluster model");
    model.k = 1;
    model.row_assignments.assign(n, 1);
    for (int i = 0; i < n; ++i) model.assignments[row_ids[i]] = 1;
    for (int c : cols) model.variables.push_back(column_names[c]);
    return model;
  }

  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) x.col(j) = matrix.col(cols[j]);
  if (!x.allFinite()) throw ComputeError("fit: non-finite values in clustering variables");
  if (opt.log10_transform)
    x = (x.array() + 1.0).log10().matrix();

  // drop constant columns (no information, zero overall variance)
  std::vector<int> keep;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double m = x.col(j).mean();
    const double var = (x.col(j).array() - m).square().sum() / n;
    if (var > 0.0)
      keep.push_back(static_cast<int>(j));
    else
      model.warnings.push_back("dropped constant variable \"" + column_names[cols[j]] + "\"");
  }
  if (keep.empty()) throw ComputeError("no clusterable variation: all variables constant");

  Eigen::MatrixXd used(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    used.col(j) = x.col(keep[j]);
    model.variables.push_back(column_names[cols[keep[j]]]);
  }
  if (opt.standardize) {
    for (Eigen::Index j = 0; j < used.cols(); ++j) {
      const double m = used.col(j).mean();
      const double sd = std::sqrt((used.col(j).array() - m).square().sum() / n);
      used.col(j) = (used.col(j).array() - m) / sd;
    }
  }

  FeatureSpace space;
  space.overall_variance.resize(used.cols());
  for (Eigen::Index j = 0; j < used.cols(); ++j) {
    const double m = used.col(j).mean();
    space.overall_variance[j] = (used.col(j).array() - m).square().sum() / n;
  }

  Preclustering pre = precluster(used, space, opt.tree);
  const int f = static_cast<int>(pre.features.size());

  int j_max = std::min(opt.j_max, f);
  if (opt.fixed_k) {
    if (*opt.fixed_k < 1) throw ComputeError("fit: k must be >= 1");
    if (*opt.fixed_k > f)
      throw ComputeError("fit: k = " + std::to_string(*opt.fixed_k) + " exceeds the " +
                         std::to_string(f) + " pre-clusters available");
    j_max = std::max(j_max, *opt.fixed_k);
  }
  Agglomeration agg = agglomerate(pre.features, space, 1, j_max);

  KSelection sel;
  if (opt.fixed_k) {
    sel.k = *opt.fixed_k;
    KSelection auto_sel = select_k(agg, opt.selection);  // trail still reported
    sel.trail = std::move(auto_sel.trail);
  } else {
    sel = select_k(agg, opt.selection);
  }
  model.k = sel.k;
  model.bic_trail = std::move(sel.trail);
  for (auto& w : sel.warnings) model.warnings.push_back(std::move(w));

  const Solution* chosen = nullptr;
  for (const auto& s : agg.solutions)
    if (s.j == model.k) chosen = &s;
  if (!chosen) throw ComputeError("fit: no solution recorded for k");

  // number clusters 1..k by ascending mean score in the clustering space, so
  // cluster 1 holds the lowest-scoring rows and cluster k the highest; ties
  // fall back to first appearance in row order
  std::vector<int> first_row(model.k, n);
  for (int i = 0; i < n; ++i) {
    const int raw = chosen->feature_to_cluster[pre.row_to_feature[i]];
    first_row[raw] = std::min(first_row[raw], i);
  }
  std::vector<double> score(model.k, 0.0);
  for (int c = 0; c < model.k; ++c) {
    const auto& feat = chosen->clusters[c];
    for (std::size_t v = 0; v < feat.sum.size(); ++v) score[c] += feat.mean(v);
    if (!feat.sum.empty()) score[c] /= static_cast<double>(feat.sum.size());
  }
  std::vector<int> order(model.k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (score[a] != score[b]) return score[a] < score[b];
    return first_row[a] < first_row[b];
  });
  std::vector<int> relabel(model.k, 0);
  for (int rank = 0; rank < model.k; ++rank) relabel[order[rank]] = rank + 1;

  model.row_assignments.resize(n);
  for (int i = 0; i < n; ++i)
    model.row_assignments[i] = relabel[chosen->feature_to_cluster[pre.row_to_feature[i]]];
  for (int i = 0; i < n; ++i) model.assignments[row_ids[i]] = model.row_assignments[i];
  model.features.resize(model.k);
  for (int c = 0; c < model.k; ++c) model.features[relabel[c] - 1] = chosen->clusters[c];

  model.silhouette = mean_silhouette(used, model.row_assignments, model.k);
  model.fit_grade = model.silhouette < 0.2
                        ? FitGrade::Poor
                        : (model.silhouette <= 0.5 ? FitGrade::Fair : FitGrade::Good);
  return model;
}

}  // namespace scimetric::twostep
