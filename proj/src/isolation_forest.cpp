#include "fids/isolation_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fids/error.hpp"
#include "fids/rng.hpp"

namespace fids::preprocess {

namespace {

constexpr double kEulerGamma = 0.5772156649;

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::size_t max_height, Rng& rng)
      : data_(data), max_height_(max_height), rng_(rng) {}

  std::vector<IsolationTree::Node> build(std::vector<std::size_t> rows) {
    grow(rows, 0, rows.size(), 0);
    return std::move(nodes_);
  }

 private:
  // Builds the subtree over rows[begin, end) and returns its node index.
  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t begin, std::size_t end, std::size_t height) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({.size = static_cast<std::uint32_t>(end - begin)});
    if (end - begin <= 1 || height >= max_height_) return index;

    lo_.assign(data_.n_features(), 0.0);
    hi_.assign(data_.n_features(), 0.0);
    for (std::size_t f = 0; f < data_.n_features(); ++f) {
      const auto [mn, mx] = std::minmax_element(rows.begin() + begin, rows.begin() + end,
                                                [&](std::size_t a, std::size_t b) {
                                                  return data_.at(a, f) < data_.at(b, f);
                                                });
      lo_[f] = data_.at(*mn, f);
      hi_[f] = data_.at(*mx, f);
    }
    std::vector<std::uint32_t> candidates;
    for (std::size_t f = 0; f < data_.n_features(); ++f) {
      if (lo_[f] < hi_[f]) candidates.push_back(static_cast<std::uint32_t>(f));
    }
    if (candidates.empty()) return index;

    const std::uint32_t feature = candidates[rng_.index(candidates.size())];
    const double lo = lo_[feature];
    const double hi = hi_[feature];
    double split = lo + rng_.uniform01() * (hi - lo);
    while (!(split > lo && split < hi)) split = lo + rng_.uniform01() * (hi - lo);

    const auto middle = std::stable_partition(rows.begin() + begin, rows.begin() + end,
                                              [&](std::size_t r) { return data_.at(r, feature) < split; });
    const auto mid = static_cast<std::size_t>(middle - rows.begin());
    const auto left = grow(rows, begin, mid, height + 1);
    const auto right = grow(rows, mid, end, height + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = feature;
    node.split = split;
    node.left = left;
    node.right = right;
    return index;
  }

  const Dataset& data_;
  std::size_t max_height_;
  Rng& rng_;
  std::vector<IsolationTree::Node> nodes_;
  std::vector<double> lo_, hi_;
};

}  // namespace

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  const double harmonic = std::log(m) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

std::size_t height_limit(std::size_t subsample_size) {
  std::size_t h = 0;
  while ((std::size_t{1} << h) < subsample_size) ++h;
  return h;
}

double IsolationTree::path_length(std::span<const double> x) const {
  std::size_t depth = 0;
  const Node* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[static_cast<std::size_t>(x[node->feature] < node->split ? node->left : node->right)];
    ++depth;
  }
  return static_cast<double>(depth) + average_path_length(node->size);
}

std::size_t IsolationTree::height() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, depth[i]);
    if (!nodes_[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
    }
  }
  return best;
}

IsolationForest::IsolationForest(std::vector<IsolationTree> trees, std::size_t subsample_size,
                                 std::size_t n_features)
    : trees_(std::move(trees)),
      subsample_size_(subsample_size),
      n_features_(n_features),
      normalizer_(average_path_length(subsample_size)) {}

double IsolationForest::mean_path_length(std::span<const double> x) const {
  if (x.size() != n_features_) throw DataError("feature vector width does not match forest");
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.path_length(x);
  return sum / static_cast<double>(trees_.size());
}

IsolationForest fit_isolation_forest(const Dataset& data, std::size_t n_trees, std::size_t subsample_size,
                                     std::uint64_t seed) {
  if (data.rows() < 2) throw DataError("isolation forest needs at least 2 rows");
  if (n_trees < 1) throw ConfigError("isolation forest needs at least 1 tree");
  if (subsample_size < 2) throw ConfigError("isolation forest subsample size must be at least 2");
  const std::size_t psi = std::min(subsample_size, data.rows());
  const std::size_t max_height = height_limit(psi);

  std::vector<IsolationTree> trees;
  trees.reserve(n_trees);
  std::vector<std::size_t> all(data.rows());
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng(mix_seed(seed, t));
    std::iota(all.begin(), all.end(), 0);
    // Partial Fisher-Yates: the first psi slots become the sample.
    for (std::size_t i = 0; i < psi; ++i) std::swap(all[i], all[i + rng.index(all.size() - i)]);
    std::vector<std::size_t> sample(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi));
    trees.emplace_back(TreeBuilder(data, max_height, rng).build(std::move(sample)));
  }
  return IsolationForest(std::move(trees), psi, data.n_features());
}

double score_from_path_length(double mean_path_length, std::size_t subsample_size) {
  return std::exp2(-mean_path_length / average_path_length(subsample_size));
}

double anomaly_score(const IsolationForest& forest, std::span<const double> x) {
  return score_from_path_length(forest.mean_path_length(x), forest.subsample_size());
}

std::string OutlierReport::to_key_values() const {
  std::ostringstream out;
  for (std::size_t c = 0; c < removed_per_class.size(); ++c) {
    out << "class_" << c << "_removed=" << removed_per_class[c] << '\n';
  }
  return out.str();
}

Dataset remove_outliers(const Dataset& data, double contamination, std::size_t n_trees,
                        std::size_t subsample_size, std::uint64_t seed, OutlierReport* report) {
  if (!(contamination >= 0.0 && contamination < 1.0)) {
    throw ConfigError("contamination must lie in [0, 1)");
  }
  std::vector<bool> drop(data.rows(), false);
  OutlierReport local;
  local.removed_per_class.assign(data.n_classes(), 0);

  const auto by_class = data.rows_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& rows = by_class[c];
    const auto n_remove =
        static_cast<std::size_t>(std::floor(contamination * static_cast<double>(rows.size()) + 1e-9));
    if (n_remove == 0 || rows.size() < 2) continue;

    const Dataset members = data.subset(rows);
    const auto forest = fit_isolation_forest(members, n_trees, subsample_size, mix_seed(seed, c));
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      scored.emplace_back(anomaly_score(forest, members.row(i)), rows[i]);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < n_remove; ++i) drop[scored[i].second] = true;
    local.removed_per_class[c] = n_remove;
  }

  std::vector<std::size_t> keep;
  keep.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (!drop[i]) keep.push_back(i);
  }
  if (report) *report = std::move(local);
  return data.subset(keep);
}

}  // namespace fids::preprocess
