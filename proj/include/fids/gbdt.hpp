#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fids/dataio.hpp"

namespace fids::gbdt {

struct GbdtParams {
  int depth = 3;
  int iterations = 50;
  double learning_rate = 0.5;
  double l2_leaf_reg = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_string() const;
  bool operator==(const GbdtParams&) const = default;
};

/// Binary regression tree stored in pre-order: a node's left child directly
/// follows it.
class RegressionTree {
 public:
  struct Node {
    bool leaf = true;
    std::uint32_t feature = 0;
    double threshold = 0.0;  // go left iff value <= threshold
    double value = 0.0;
    std::uint32_t right = 0;  // index of the right child for internal nodes

    bool operator==(const Node&) const = default;
  };

  RegressionTree() : nodes_{Node{}} {}
  explicit RegressionTree(std::vector<Node> preorder);

  static RegressionTree constant(double value);

  double predict(std::span<const double> x) const;
  std::size_t height() const;
  std::size_t leaf_count() const;
  std::uint32_t max_feature() const;
  void scale_leaves(double factor);
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<Node> nodes_;
};

/// Multiclass softmax ensemble. trees holds rounds x n_classes trees, tree for
/// (round r, class k) at r * n_classes + k; params.iterations equals rounds().
struct GbdtModel {
  GbdtParams params;
  std::uint32_t n_classes = 0;
  std::uint32_t n_features = 0;
  std::vector<double> base_scores;
  std::vector<RegressionTree> trees;

  std::size_t rounds() const { return n_classes == 0 ? 0 : trees.size() / n_classes; }
  const RegressionTree& tree(std::size_t round, std::size_t cls) const { return trees[round * n_classes + cls]; }

  /// Throws DataError when the shape invariants do not hold.
  void validate() const;
  /// Raw class margins: base scores plus every tree's output.
  std::vector<double> margins(std::span<const double> x) const;

  bool operator==(const GbdtModel&) const = default;
};

struct FitDiagnostics {
  // Training log-loss before any tree (index 0) and after each round.
  std::vector<double> train_logloss;
  // Number of classes present in the training data; 1 means the model
  // degenerates to a constant predictor.
  std::size_t classes_present = 0;
  std::vector<std::string> warnings;
};

/// Softmax gradient boosting with level-wise exact-greedy regression trees.
///
/// For every round and class a tree is fitted to y_onehot - p using
/// variance-reduction splits; leaves hold
/// learning_rate * sum(y - p) / (sum(p (1 - p)) + l2_leaf_reg).
/// If a round would raise the training log-loss its leaves are halved until
/// it does not, so the training loss never increases.
GbdtModel fit(const Dataset& train, const GbdtParams& params, FitDiagnostics* diagnostics = nullptr);

/// Margins with every class shifted so the largest is 0, then exponentiated
/// and normalised.
std::vector<double> softmax(std::span<const double> margins);
std::vector<double> predict_proba(const GbdtModel& model, std::span<const double> x);
/// Argmax of predict_proba; ties go to the lowest class id.
ClassId predict(const GbdtModel& model, std::span<const double> x);
ClassId argmax(std::span<const double> values);

/// Mean -ln p(true class) with p clamped to [1e-15, 1 - 1e-15].
double logloss(const GbdtModel& model, const Dataset& data);
/// Log-loss after 0, 1, ..., rounds() rounds.
std::vector<double> staged_logloss(const GbdtModel& model, const Dataset& data);

/// Keeps the first `rounds` boosting rounds.
GbdtModel truncate(const GbdtModel& model, std::size_t rounds);

struct GridSpec {
  std::vector<int> depths{3, 4, 5, 6, 7};
  std::vector<int> iterations{50, 100, 150, 200};
  std::vector<double> learning_rates{0.1, 0.25, 0.5, 0.75, 1.0};

  void validate() const;
  std::size_t combinations() const { return depths.size() * iterations.size() * learning_rates.size(); }
};

struct GridEntry {
  GbdtParams params;
  double validation_accuracy = 0.0;
};

struct GridSearchResult {
  GbdtParams best;
  GbdtModel model;  // best params refitted on the whole training set
  std::vector<GridEntry> report;
};

/// Exhaustive search scored by accuracy on a stratified held-out slice of
/// train. Ties prefer lower depth, then fewer iterations, then lower learning
/// rate.
GridSearchResult grid_search(const Dataset& train, const GridSpec& grid, double validation_fraction = 0.25,
                             std::uint64_t seed = 0, double l2_leaf_reg = 3.0);

}  // namespace fids::gbdt
