#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fids/dataio.hpp"

namespace fids::preprocess {

/// Average unsuccessful-search path length of a binary search tree on n points:
/// c(n) = 2 H(n-1) - 2 (n-1) / n, with c(2) = 1 and c(n <= 1) = 0.
double average_path_length(std::size_t n);

/// Smallest h with 2^h >= n.
std::size_t height_limit(std::size_t subsample_size);

class IsolationTree {
 public:
  struct Node {
    std::uint32_t feature = 0;
    double split = 0.0;  // go left iff value < split
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t size = 0;  // training rows reaching a leaf

    bool is_leaf() const noexcept { return left < 0; }
    bool operator==(const Node&) const = default;
  };

  explicit IsolationTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  /// Leaf depth plus c(leaf size).
  double path_length(std::span<const double> x) const;
  std::size_t height() const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  bool operator==(const IsolationTree&) const = default;

 private:
  std::vector<Node> nodes_;
};

class IsolationForest {
 public:
  IsolationForest(std::vector<IsolationTree> trees, std::size_t subsample_size, std::size_t n_features);

  std::size_t n_trees() const noexcept { return trees_.size(); }
  std::size_t subsample_size() const noexcept { return subsample_size_; }
  std::size_t n_features() const noexcept { return n_features_; }
  double normalizer() const noexcept { return normalizer_; }
  const std::vector<IsolationTree>& trees() const noexcept { return trees_; }

  double mean_path_length(std::span<const double> x) const;

  bool operator==(const IsolationForest&) const = default;

 private:
  std::vector<IsolationTree> trees_;
  std::size_t subsample_size_;
  std::size_t n_features_;
  double normalizer_;
};

/// Builds n_trees trees, each on its own subsample drawn without replacement.
/// subsample_size is clamped to the row count; tree t draws from a stream
/// derived from (seed, t).
IsolationForest fit_isolation_forest(const Dataset& data, std::size_t n_trees = 100,
                                     std::size_t subsample_size = 256, std::uint64_t seed = 0);

/// s(x) = 2^(-E[h(x)] / c(psi)); values near 1 are anomalies, 0.5 is typical.
double anomaly_score(const IsolationForest& forest, std::span<const double> x);
double score_from_path_length(double mean_path_length, std::size_t subsample_size);

struct OutlierReport {
  std::vector<std::size_t> removed_per_class;

  /// One `class_<id>_removed=<n>` line per class.
  std::string to_key_values() const;
};

/// Fits one forest per class and drops the floor(contamination * count)
/// highest-scoring rows of each class (ties: lower row index first).
Dataset remove_outliers(const Dataset& data, double contamination, std::size_t n_trees = 100,
                        std::size_t subsample_size = 256, std::uint64_t seed = 0,
                        OutlierReport* report = nullptr);

}  // namespace fids::preprocess
