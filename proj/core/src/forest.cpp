#include "phishkey/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "phishkey/error.hpp"
#include "phishkey/parallel.hpp"
#include "phishkey/random.hpp"

namespace phishkey {

double gini_impurity(double phishing, double legitimate) {
  const double n = phishing + legitimate;
  if (n <= 0.0) return 0.0;
  const double p = phishing / n;
  const double q = legitimate / n;
  return 1.0 - p * p - q * q;
}

const TreeNode& DecisionTree::leaf_for(const BowVector& x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    const auto value = static_cast<float>(x.count(static_cast<std::size_t>(node.feature)));
    i = static_cast<std::size_t>(value <= node.threshold ? node.left : node.right);
  }
  return nodes_[i];
}

double DecisionTree::predict_proba(const BowVector& x) const {
  const TreeNode& leaf = leaf_for(x);
  return static_cast<double>(leaf.phishing) /
         (static_cast<double>(leaf.phishing) + static_cast<double>(leaf.legitimate));
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  // Children always follow their parent in the table.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes_[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
    }
  }
  return deepest;
}

ForestModel::ForestModel(std::vector<DecisionTree> trees, std::size_t n_features)
    : trees_(std::move(trees)), n_features_(n_features) {
  if (trees_.empty()) throw ModelError("forest has no trees");
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const auto& nodes = trees_[t].nodes();
    const std::string where = "tree " + std::to_string(t);
    if (nodes.empty()) throw ModelError(where + " has no nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& n = nodes[i];
      if (n.is_leaf()) {
        if (!(n.phishing >= 0.0f) || !(n.legitimate >= 0.0f) || !(n.phishing + n.legitimate > 0.0f)) {
          throw ModelError(where + ": leaf " + std::to_string(i) + " has invalid class counts");
        }
        continue;
      }
      const auto n_nodes = static_cast<std::int64_t>(nodes.size());
      const auto idx = static_cast<std::int64_t>(i);
      if (n.left <= idx || n.right <= idx || n.left >= n_nodes || n.right >= n_nodes) {
        throw ModelError(where + ": node " + std::to_string(i) + " has invalid child links");
      }
      if (static_cast<std::size_t>(n.feature) >= n_features_) {
        throw ModelError(where + ": node " + std::to_string(i) + " splits on out-of-range feature");
      }
      if (!std::isfinite(n.threshold)) {
        throw ModelError(where + ": node " + std::to_string(i) + " has non-finite threshold");
      }
    }
  }
}

double ForestModel::predict_proba(const BowVector& x) const {
  if (x.dim != n_features_) {
    throw ModelError("feature dimension mismatch: forest expects " + std::to_string(n_features_) +
                     ", got " + std::to_string(x.dim));
  }
  double sum = 0.0;
  for (const DecisionTree& tree : trees_) sum += tree.predict_proba(x);
  return sum / static_cast<double>(trees_.size());
}

namespace {

struct Entry {
  std::uint32_t value;
  std::uint32_t sample;
};

struct Split {
  std::int32_t feature = -1;
  float threshold = 0.0f;
  double impurity = 0.0;  // weighted child impurity, n_L * g_L + n_R * g_R
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const BowVector> rows, std::span<const Label> labels,
              const ForestParams& params, std::size_t n_features, std::uint64_t seed)
      : rows_(rows),
        labels_(labels),
        params_(params),
        n_features_(n_features),
        rng_(seed),
        buckets_(n_features),
        value_of_(rows.size(), 0) {
    switch (params.feature_rule) {
      case FeatureRule::Sqrt:
        mtry_ = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features)));
        break;
      case FeatureRule::Log2:
        mtry_ = static_cast<std::size_t>(std::log2(static_cast<double>(std::max<std::size_t>(n_features, 1))));
        break;
      case FeatureRule::All:
        mtry_ = n_features;
        break;
    }
    mtry_ = std::max<std::size_t>(mtry_, 1);
  }

  DecisionTree build() {
    std::vector<double> weight(rows_.size(), 0.0);
    if (params_.bootstrap) {
      for (std::size_t i = 0; i < rows_.size(); ++i) weight[rng_.uniform_index(rows_.size())] += 1.0;
    } else {
      std::fill(weight.begin(), weight.end(), 1.0);
    }
    weight_ = std::move(weight);

    std::vector<std::uint32_t> root;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (weight_[i] > 0.0) root.push_back(static_cast<std::uint32_t>(i));
    }

    struct Pending {
      std::size_t node;
      std::vector<std::uint32_t> samples;
      std::size_t depth;
    };
    std::vector<Pending> stack;
    nodes_.emplace_back();
    stack.push_back({0, std::move(root), 0});
    while (!stack.empty()) {
      Pending item = std::move(stack.back());
      stack.pop_back();
      auto [left, right] = grow(item.node, item.samples, item.depth);
      if (left.empty()) continue;
      const auto left_id = nodes_.size();
      nodes_.emplace_back();
      const auto right_id = nodes_.size();
      nodes_.emplace_back();
      nodes_[item.node].left = static_cast<std::int32_t>(left_id);
      nodes_[item.node].right = static_cast<std::int32_t>(right_id);
      // Right pushed first so the left subtree is expanded next.
      stack.push_back({right_id, std::move(right), item.depth + 1});
      stack.push_back({left_id, std::move(left), item.depth + 1});
    }
    return DecisionTree(std::move(nodes_));
  }

 private:
  using Partition = std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>;

  // Turns `node` into a leaf or a split. Returns the child partitions (empty
  // for a leaf).
  Partition grow(std::size_t node, const std::vector<std::uint32_t>& samples, std::size_t depth) {
    double wp = 0.0;
    double wl = 0.0;
    for (auto s : samples) (labels_[s] == Label::Phishing ? wp : wl) += weight_[s];
    nodes_[node].phishing = static_cast<float>(wp);
    nodes_[node].legitimate = static_cast<float>(wl);

    const double total = wp + wl;
    const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (wp == 0.0 || wl == 0.0 || depth_capped ||
        total < 2.0 * static_cast<double>(params_.min_leaf)) {
      return {};
    }

    const Split best = find_split(samples, wp, wl);
    if (best.feature < 0 || !(best.impurity < total * gini_impurity(wp, wl) - 1e-12)) {
      return {};
    }

    TreeNode& n = nodes_[node];
    n.feature = best.feature;
    n.threshold = best.threshold;
    n.phishing = 0.0f;
    n.legitimate = 0.0f;

    for (const Entry& e : gather_feature(samples, static_cast<std::uint32_t>(best.feature))) {
      value_of_[e.sample] = e.value;
    }
    Partition parts;
    for (auto s : samples) {
      (static_cast<float>(value_of_[s]) <= best.threshold ? parts.first : parts.second).push_back(s);
    }
    for (auto s : samples) value_of_[s] = 0;
    return parts;
  }

  // Nonzero values of one feature among `samples`.
  std::vector<Entry> gather_feature(const std::vector<std::uint32_t>& samples, std::uint32_t feature) {
    std::vector<Entry> out;
    for (auto s : samples) {
      if (auto c = rows_[s].count(feature); c > 0) out.push_back({c, s});
    }
    return out;
  }

  Split find_split(const std::vector<std::uint32_t>& samples, double wp, double wl) {
    // Bucket the node's nonzeros by feature; features absent from every
    // sample are constant and can never split.
    touched_.clear();
    for (auto s : samples) {
      for (const auto& [f, c] : rows_[s].entries) {
        if (buckets_[f].empty()) touched_.push_back(f);
        buckets_[f].push_back({c, s});
      }
    }

    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    const double total = wp + wl;
    const auto min_leaf = static_cast<double>(params_.min_leaf);

    // Visit candidates in random order (partial Fisher-Yates) until mtry
    // non-constant features have been scored.
    for (std::size_t i = 0; i < touched_.size() && evaluated < mtry_; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.uniform_index(touched_.size() - i));
      std::swap(touched_[i], touched_[j]);
      const std::uint32_t f = touched_[i];
      auto& entries = buckets_[f];
      std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.value != b.value ? a.value < b.value : a.sample < b.sample;
      });

      double nz_p = 0.0;
      double nz_l = 0.0;
      for (const Entry& e : entries) (labels_[e.sample] == Label::Phishing ? nz_p : nz_l) += weight_[e.sample];
      double left_p = wp - nz_p;  // zeros go left of every threshold
      double left_l = wl - nz_l;
      const bool has_zeros = left_p + left_l > 0.0;
      const bool constant = entries.front().value == entries.back().value && !has_zeros;
      if (constant) continue;
      ++evaluated;

      std::uint32_t prev = 0;
      bool have_prev = has_zeros;
      std::size_t k = 0;
      while (k < entries.size()) {
        const std::uint32_t v = entries[k].value;
        if (have_prev) {
          const double nl = left_p + left_l;
          const double nr = total - nl;
          if (nl >= min_leaf && nr >= min_leaf) {
            const double impurity =
                nl * gini_impurity(left_p, left_l) + nr * gini_impurity(wp - left_p, wl - left_l);
            if (impurity < best.impurity) {
              best.impurity = impurity;
              best.feature = static_cast<std::int32_t>(f);
              best.threshold = static_cast<float>((static_cast<double>(prev) + v) / 2.0);
            }
          }
        }
        while (k < entries.size() && entries[k].value == v) {
          (labels_[entries[k].sample] == Label::Phishing ? left_p : left_l) += weight_[entries[k].sample];
          ++k;
        }
        prev = v;
        have_prev = true;
      }
    }

    for (auto f : touched_) buckets_[f].clear();
    return best;
  }

  std::span<const BowVector> rows_;
  std::span<const Label> labels_;
  const ForestParams& params_;
  std::size_t n_features_;
  std::size_t mtry_ = 1;
  Rng rng_;
  std::vector<double> weight_;
  std::vector<std::vector<Entry>> buckets_;
  std::vector<std::uint32_t> touched_;
  std::vector<std::uint32_t> value_of_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

ForestModel train_forest(std::span<const BowVector> rows, std::span<const Label> labels,
                         const ForestParams& params) {
  if (rows.size() != labels.size()) throw DataError("forest: rows/labels size mismatch");
  if (rows.size() < 2) throw DataError("forest: need at least two training samples");
  if (params.n_trees == 0) throw ConfigError("forest: n_trees must be positive");
  if (params.min_leaf == 0) throw ConfigError("forest: min_leaf must be positive");
  const bool has_phishing = std::find(labels.begin(), labels.end(), Label::Phishing) != labels.end();
  const bool has_legitimate = std::find(labels.begin(), labels.end(), Label::Legitimate) != labels.end();
  if (!has_phishing || !has_legitimate) {
    throw DataError("forest: training set contains a single class");
  }
  const std::size_t n_features = rows.front().dim;
  for (const BowVector& r : rows) {
    if (r.dim != n_features) throw DataError("forest: rows have inconsistent feature dimensions");
  }
  if (n_features == 0) throw DataError("forest: zero-dimensional features");

  std::vector<DecisionTree> trees(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    TreeBuilder builder(rows, labels, params, n_features, Rng::derive(params.seed, t));
    trees[t] = builder.build();
  });
  return ForestModel(std::move(trees), n_features);
}

}  // namespace phishkey
