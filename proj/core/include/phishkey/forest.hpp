#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "phishkey/cape.hpp"
#include "phishkey/corpus.hpp"

namespace phishkey {

enum class FeatureRule { Sqrt, Log2, All };

struct ForestParams {
  std::size_t n_trees = 100;
  /// 0 = grow until pure or min_leaf stops the split.
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  FeatureRule feature_rule = FeatureRule::Sqrt;
  bool bootstrap = true;
  std::uint64_t seed = 1;
  /// Worker threads for tree building; 0 = hardware concurrency. Each tree
  /// has its own seeded stream, so results do not depend on this value.
  std::size_t threads = 0;
};

/// One row of a flat node table. Internal nodes send x[feature] <= threshold
/// left. Leaves have feature == -1 and carry bootstrap-weighted class counts.
struct TreeNode {
  std::int32_t feature = -1;
  float threshold = 0.0f;
  std::int32_t left = -1;
  std::int32_t right = -1;
  float phishing = 0.0f;
  float legitimate = 0.0f;

  bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& leaf_for(const BowVector& x) const;

  /// Phishing fraction of the leaf reached by x.
  double predict_proba(const BowVector& x) const;
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

class ForestModel {
 public:
  ForestModel() = default;
  /// Validates node tables (child links point forward, leaves have positive
  /// mass, features in range); throws ModelError otherwise.
  ForestModel(std::vector<DecisionTree> trees, std::size_t n_features);

  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }

  /// Mean of per-tree leaf phishing fractions. Throws ModelError if x.dim
  /// differs from n_features().
  double predict_proba(const BowVector& x) const;
  Label predict(const BowVector& x) const {
    return predict_proba(x) >= 0.5 ? Label::Phishing : Label::Legitimate;
  }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t n_features_ = 0;
};

/// Gini impurity of a two-class node with the given (weighted) counts.
double gini_impurity(double phishing, double legitimate);

/// Bootstrap-sampled, Gini-split random forest. Throws DataError when fewer
/// than two samples or a single class is given.
ForestModel train_forest(std::span<const BowVector> rows, std::span<const Label> labels,
                         const ForestParams& params);

}  // namespace phishkey
