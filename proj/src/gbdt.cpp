#include "fids/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "fids/error.hpp"

namespace fids::gbdt {

namespace {

constexpr double kProbFloor = 1e-15;
constexpr double kMinPrior = 1e-15;
constexpr double kMinGain = 1e-10;
constexpr int kMaxHalvings = 60;

using SortedOrders = std::vector<std::vector<std::uint32_t>>;

SortedOrders presort(const Dataset& data) {
  SortedOrders orders(data.n_features());
  for (std::size_t f = 0; f < data.n_features(); ++f) {
    auto& order = orders[f];
    order.resize(data.rows());
    std::iota(order.begin(), order.end(), 0U);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return data.at(a, f) < data.at(b, f); });
  }
  return orders;
}

// Softmax of one row written into `out`; returns nothing, out sums to 1.
void softmax_into(std::span<const double> margins, std::span<double> out) {
  const double top = *std::max_element(margins.begin(), margins.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < margins.size(); ++k) {
    out[k] = std::exp(margins[k] - top);
    sum += out[k];
  }
  for (double& p : out) p /= sum;
}

double row_loss(std::span<const double> margins, ClassId truth, std::span<double> scratch) {
  softmax_into(margins, scratch);
  const double p = std::clamp(scratch[truth], kProbFloor, 1.0 - kProbFloor);
  return -std::log(p);
}

double mean_loss(const std::vector<double>& margins, const std::vector<ClassId>& labels, std::size_t k) {
  if (labels.empty()) return 0.0;
  std::vector<double> scratch(k);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sum += row_loss(std::span(margins).subspan(i * k, k), labels[i], scratch);
  }
  return sum / static_cast<double>(labels.size());
}

struct SplitCandidate {
  double gain = kMinGain;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  bool found = false;
};

struct BuildNode {
  double sum_residual = 0.0;
  double sum_hessian = 0.0;
  std::size_t count = 0;
  bool leaf = true;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double value = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
};

// Level-wise growth over presorted feature orders: one pass per feature per level.
class TreeGrower {
 public:
  TreeGrower(const Dataset& data, const SortedOrders& orders)
      : data_(data), orders_(orders), node_of_(data.rows()) {}

  RegressionTree grow(std::span<const double> residual, std::span<const double> hessian, int max_depth,
                      double l2, double learning_rate) {
    nodes_.assign(1, BuildNode{});
    for (std::size_t i = 0; i < data_.rows(); ++i) {
      node_of_[i] = 0;
      nodes_[0].sum_residual += residual[i];
      nodes_[0].sum_hessian += hessian[i];
      ++nodes_[0].count;
    }
    std::vector<std::size_t> frontier{0};

    for (int level = 0; level < max_depth && !frontier.empty(); ++level) {
      const auto best = find_splits(frontier, residual);
      std::vector<std::size_t> next;
      std::vector<std::int64_t> child_slot(frontier.size() * 2, -1);
      for (std::size_t p = 0; p < frontier.size(); ++p) {
        if (!best[p].found) continue;
        auto& node = nodes_[frontier[p]];
        node.leaf = false;
        node.feature = best[p].feature;
        node.threshold = best[p].threshold;
        node.left = nodes_.size();
        node.right = nodes_.size() + 1;
        child_slot[2 * p] = static_cast<std::int64_t>(next.size());
        next.push_back(node.left);
        child_slot[2 * p + 1] = static_cast<std::int64_t>(next.size());
        next.push_back(node.right);
        nodes_.emplace_back();
        nodes_.emplace_back();
      }
      for (std::size_t i = 0; i < data_.rows(); ++i) {
        const auto p = node_of_[i];
        if (p < 0) continue;
        const auto& node = nodes_[frontier[static_cast<std::size_t>(p)]];
        if (node.leaf) {
          node_of_[i] = -1;
          continue;
        }
        const bool go_left = data_.at(i, node.feature) <= node.threshold;
        const auto slot = child_slot[2 * static_cast<std::size_t>(p) + (go_left ? 0 : 1)];
        node_of_[i] = static_cast<std::int32_t>(slot);
        auto& child = nodes_[next[static_cast<std::size_t>(slot)]];
        child.sum_residual += residual[i];
        child.sum_hessian += hessian[i];
        ++child.count;
      }
      frontier = std::move(next);
    }

    for (auto& node : nodes_) {
      if (node.leaf) node.value = learning_rate * node.sum_residual / (node.sum_hessian + l2);
    }
    std::vector<RegressionTree::Node> preorder;
    preorder.reserve(nodes_.size());
    emit(0, preorder);
    return RegressionTree(std::move(preorder));
  }

 private:
  std::vector<SplitCandidate> find_splits(const std::vector<std::size_t>& frontier,
                                          std::span<const double> residual) {
    const std::size_t width = frontier.size();
    std::vector<SplitCandidate> best(width);
    std::vector<double> left_sum(width);
    std::vector<std::size_t> left_count(width);
    std::vector<double> last(width);
    for (std::size_t f = 0; f < data_.n_features(); ++f) {
      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      std::fill(left_count.begin(), left_count.end(), 0);
      for (std::uint32_t row : orders_[f]) {
        const auto p = node_of_[row];
        if (p < 0) continue;
        const auto slot = static_cast<std::size_t>(p);
        const double value = data_.at(row, f);
        if (left_count[slot] > 0 && value > last[slot]) {
          const auto& node = nodes_[frontier[slot]];
          const double nl = static_cast<double>(left_count[slot]);
          const double nr = static_cast<double>(node.count - left_count[slot]);
          const double sl = left_sum[slot];
          const double sr = node.sum_residual - sl;
          const double gain = sl * sl / nl + sr * sr / nr -
                              node.sum_residual * node.sum_residual / static_cast<double>(node.count);
          if (gain > best[slot].gain) {
            double threshold = last[slot] + (value - last[slot]) / 2.0;
            if (!(threshold < value)) threshold = last[slot];
            best[slot] = {gain, static_cast<std::uint32_t>(f), threshold, true};
          }
        }
        left_sum[slot] += residual[row];
        ++left_count[slot];
        last[slot] = value;
      }
    }
    return best;
  }

  void emit(std::size_t index, std::vector<RegressionTree::Node>& out) const {
    const auto& node = nodes_[index];
    const std::size_t at = out.size();
    if (node.leaf) {
      out.push_back({.leaf = true, .value = node.value});
      return;
    }
    out.push_back({.leaf = false, .feature = node.feature, .threshold = node.threshold});
    emit(node.left, out);
    out[at].right = static_cast<std::uint32_t>(out.size());
    emit(node.right, out);
  }

  const Dataset& data_;
  const SortedOrders& orders_;
  std::vector<std::int32_t> node_of_;
  std::vector<BuildNode> nodes_;
};

}  // namespace

void GbdtParams::validate() const {
  if (depth < 1) throw ConfigError("depth must be at least 1");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must lie in (0, 1]");
  if (!(l2_leaf_reg >= 0.0) || !std::isfinite(l2_leaf_reg)) throw ConfigError("l2_leaf_reg must be >= 0");
}

std::string GbdtParams::to_string() const {
  std::ostringstream out;
  out << "depth=" << depth << " iterations=" << iterations << " learning_rate=" << learning_rate;
  return out.str();
}

RegressionTree::RegressionTree(std::vector<Node> preorder) : nodes_(std::move(preorder)) {
  if (nodes_.empty()) throw DataError("regression tree needs at least one node");
}

RegressionTree RegressionTree::constant(double value) {
  RegressionTree tree;
  tree.nodes_.front().value = value;
  return tree;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].leaf) {
    i = x[nodes_[i].feature] <= nodes_[i].threshold ? i + 1 : nodes_[i].right;
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::height() const {
  // Pre-order walk with an explicit depth stack.
  std::size_t best = 0;
  std::vector<std::size_t> depth_stack{0};
  for (const auto& node : nodes_) {
    const std::size_t depth = depth_stack.back();
    depth_stack.pop_back();
    best = std::max(best, depth);
    if (!node.leaf) {
      depth_stack.push_back(depth + 1);
      depth_stack.push_back(depth + 1);
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
}

std::uint32_t RegressionTree::max_feature() const {
  std::uint32_t top = 0;
  for (const auto& node : nodes_) {
    if (!node.leaf) top = std::max(top, node.feature);
  }
  return top;
}

void RegressionTree::scale_leaves(double factor) {
  for (auto& node : nodes_) {
    if (node.leaf) node.value *= factor;
  }
}

void GbdtModel::validate() const {
  if (n_classes < 1) throw DataError("model has no classes");
  if (n_features < 1) throw DataError("model has no features");
  if (base_scores.size() != n_classes) throw DataError("model base scores do not match class count");
  if (trees.size() % n_classes != 0) throw DataError("model tree count is not a multiple of class count");
  if (static_cast<std::size_t>(params.iterations) != rounds()) {
    throw DataError("model iteration count does not match its trees");
  }
  for (double b : base_scores) {
    if (!std::isfinite(b)) throw DataError("model base score is not finite");
  }
  for (const auto& tree : trees) {
    for (const auto& node : tree.nodes()) {
      if (!node.leaf && (node.feature >= n_features || !std::isfinite(node.threshold))) {
        throw DataError("model tree has an invalid split");
      }
      if (node.leaf && !std::isfinite(node.value)) throw DataError("model tree has a non-finite leaf");
    }
  }
}

std::vector<double> GbdtModel::margins(std::span<const double> x) const {
  if (x.size() != n_features) {
    throw DataError("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                    std::to_string(n_features));
  }
  std::vector<double> out = base_scores;
  for (std::size_t r = 0; r < rounds(); ++r) {
    for (std::size_t k = 0; k < n_classes; ++k) out[k] += tree(r, k).predict(x);
  }
  return out;
}

GbdtModel fit(const Dataset& train, const GbdtParams& params, FitDiagnostics* diagnostics) {
  params.validate();
  if (train.empty()) throw DataError("cannot fit on an empty dataset");
  const std::size_t n = train.rows();
  const std::size_t k = train.n_classes();
  if (k < 1) throw DataError("label map is empty");

  FitDiagnostics diag;
  GbdtModel model;
  model.params = params;
  model.n_classes = static_cast<std::uint32_t>(k);
  model.n_features = static_cast<std::uint32_t>(train.n_features());

  std::vector<std::size_t> counts(k, 0);
  for (ClassId c : train.labels()) ++counts[c];
  for (std::size_t c = 0; c < k; ++c) {
    const double prior = static_cast<double>(counts[c]) / static_cast<double>(n);
    model.base_scores.push_back(std::log(std::max(prior, kMinPrior)));
    if (counts[c] > 0) ++diag.classes_present;
  }
  if (diag.classes_present < 2) {
    diag.warnings.push_back("training data holds a single class; the model predicts it everywhere");
  }

  std::vector<double> margins(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(model.base_scores.begin(), model.base_scores.end(), margins.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  double loss = mean_loss(margins, train.labels(), k);
  diag.train_logloss.push_back(loss);

  const auto orders = presort(train);
  TreeGrower grower(train, orders);
  std::vector<double> prob(n * k);
  std::vector<double> residual(n);
  std::vector<double> hessian(n);
  std::vector<double> output(n * k);
  std::vector<double> candidate(n * k);
  model.trees.reserve(static_cast<std::size_t>(params.iterations) * k);

  for (int round = 0; round < params.iterations; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      softmax_into(std::span(margins).subspan(i * k, k), std::span(prob).subspan(i * k, k));
    }
    std::vector<RegressionTree> round_trees;
    round_trees.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = prob[i * k + c];
        residual[i] = (train.label(i) == c ? 1.0 : 0.0) - p;
        hessian[i] = p * (1.0 - p);
      }
      round_trees.push_back(grower.grow(residual, hessian, params.depth, params.l2_leaf_reg, params.learning_rate));
      for (std::size_t i = 0; i < n; ++i) output[i * k + c] = round_trees.back().predict(train.row(i));
    }

    // Step halving keeps the training loss monotone. Scaling by a power of two
    // is exact, so margins recomputed from the stored trees match bit for bit.
    double scale = 1.0;
    double next_loss = loss;
    int halvings = 0;
    for (;; ++halvings) {
      for (std::size_t j = 0; j < n * k; ++j) candidate[j] = margins[j] + output[j] * scale;
      next_loss = mean_loss(candidate, train.labels(), k);
      if (next_loss <= loss) break;
      if (halvings == kMaxHalvings) {
        scale = 0.0;
        candidate = margins;
        next_loss = loss;
        break;
      }
      scale *= 0.5;
    }
    if (scale != 1.0) {
      for (auto& tree : round_trees) tree.scale_leaves(scale);
      diag.warnings.push_back("round " + std::to_string(round + 1) + " step scaled by " + std::to_string(scale));
    }
    margins.swap(candidate);
    loss = next_loss;
    diag.train_logloss.push_back(loss);
    for (auto& tree : round_trees) model.trees.push_back(std::move(tree));
  }

  if (diagnostics) *diagnostics = std::move(diag);
  return model;
}

std::vector<double> softmax(std::span<const double> margins) {
  std::vector<double> out(margins.size());
  softmax_into(margins, out);
  return out;
}

std::vector<double> predict_proba(const GbdtModel& model, std::span<const double> x) {
  return softmax(model.margins(x));
}

ClassId argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<ClassId>(best);
}

ClassId predict(const GbdtModel& model, std::span<const double> x) { return argmax(predict_proba(model, x)); }

std::vector<double> staged_logloss(const GbdtModel& model, const Dataset& data) {
  if (data.empty()) throw DataError("log-loss needs at least one row");
  if (data.n_features() != model.n_features || data.n_classes() != model.n_classes) {
    throw DataError("dataset shape does not match model");
  }
  const std::size_t k = model.n_classes;
  std::vector<double> margins(data.rows() * k);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    std::copy(model.base_scores.begin(), model.base_scores.end(), margins.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  std::vector<double> losses{mean_loss(margins, data.labels(), k)};
  for (std::size_t r = 0; r < model.rounds(); ++r) {
    for (std::size_t i = 0; i < data.rows(); ++i) {
      for (std::size_t c = 0; c < k; ++c) margins[i * k + c] += model.tree(r, c).predict(data.row(i));
    }
    losses.push_back(mean_loss(margins, data.labels(), k));
  }
  return losses;
}

double logloss(const GbdtModel& model, const Dataset& data) {
  if (data.empty()) throw DataError("log-loss needs at least one row");
  if (data.n_classes() != model.n_classes) throw DataError("dataset classes do not match model");
  std::vector<double> scratch(model.n_classes);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) sum += row_loss(model.margins(data.row(i)), data.label(i), scratch);
  return sum / static_cast<double>(data.rows());
}

GbdtModel truncate(const GbdtModel& model, std::size_t rounds) {
  if (rounds > model.rounds()) throw DataError("cannot truncate beyond the model's rounds");
  GbdtModel out = model;
  out.trees.resize(rounds * model.n_classes);
  out.params.iterations = static_cast<int>(rounds);
  return out;
}

void GridSpec::validate() const {
  if (depths.empty() || iterations.empty() || learning_rates.empty()) throw ConfigError("grid has an empty axis");
  for (int d : depths) {
    if (d < 1) throw ConfigError("grid depth must be at least 1");
  }
  for (int it : iterations) {
    if (it < 1) throw ConfigError("grid iterations must be at least 1");
  }
  for (double lr : learning_rates) {
    if (!(lr > 0.0 && lr <= 1.0)) throw ConfigError("grid learning rate must lie in (0, 1]");
  }
}

GridSearchResult grid_search(const Dataset& train, const GridSpec& grid, double validation_fraction,
                             std::uint64_t seed, double l2_leaf_reg) {
  grid.validate();
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in (0, 1)");
  }
  const std::set<int> depths(grid.depths.begin(), grid.depths.end());
  const std::set<int> iterations(grid.iterations.begin(), grid.iterations.end());
  const std::set<double> rates(grid.learning_rates.begin(), grid.learning_rates.end());
  const int max_iterations = *iterations.rbegin();

  const auto split = train_test_split(train, 1.0 - validation_fraction, seed);
  const Dataset& fit_part = split.train;
  const Dataset& holdout = split.test;
  const std::size_t k = train.n_classes();

  // Boosting is prefix-stable, so one fit at the largest iteration count
  // scores every shorter count of the same (depth, learning_rate).
  std::vector<GridEntry> report;
  for (int depth : depths) {
    std::vector<std::vector<GridEntry>> by_rate;
    for (double rate : rates) {
      GbdtParams params{depth, max_iterations, rate, l2_leaf_reg, seed};
      const auto model = fit(fit_part, params);
      std::vector<double> margins(holdout.rows() * k);
      for (std::size_t i = 0; i < holdout.rows(); ++i) {
        std::copy(model.base_scores.begin(), model.base_scores.end(), margins.begin() + static_cast<std::ptrdiff_t>(i * k));
      }
      std::vector<GridEntry> entries;
      for (int r = 1; r <= max_iterations; ++r) {
        for (std::size_t i = 0; i < holdout.rows(); ++i) {
          for (std::size_t c = 0; c < k; ++c) {
            margins[i * k + c] += model.tree(static_cast<std::size_t>(r - 1), c).predict(holdout.row(i));
          }
        }
        if (!iterations.contains(r)) continue;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < holdout.rows(); ++i) {
          if (argmax(std::span(margins).subspan(i * k, k)) == holdout.label(i)) ++correct;
        }
        GbdtParams scored = params;
        scored.iterations = r;
        const double acc = holdout.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(holdout.rows());
        entries.push_back({scored, acc});
      }
      by_rate.push_back(std::move(entries));
    }
    // Reorder to (iterations, learning_rate) within this depth.
    for (std::size_t it = 0; it < iterations.size(); ++it) {
      for (auto& entries : by_rate) report.push_back(entries[it]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < report.size(); ++i) {
    if (report[i].validation_accuracy > report[best].validation_accuracy) best = i;
  }
  GridSearchResult result{report[best].params, {}, std::move(report)};
  result.model = fit(train, result.best);
  return result;
}

}  // namespace fids::gbdt
