#pragma once

#include <cstddef>
#include <cstdint>
#include <map>

#include "fids/dataio.hpp"

namespace fids::preprocess {

struct SmoteConfig {
  // class id -> desired row count after resampling
  std::map<ClassId, std::size_t> targets;
  std::size_t k_neighbors = 5;
  std::uint64_t seed = 0;
};

/// Synthetic minority oversampling.
///
/// Keeps every input row untouched and appends (target - count) synthetic rows
/// per targeted class. Each synthetic row is x + u * (n - x) for a random row x
/// of the class, one of its k nearest same-class neighbours n (Euclidean, ties
/// by lower row index) and u uniform in [0, 1]. k is clamped to count - 1.
Dataset smote_resample(const Dataset& data, const SmoteConfig& cfg);

}  // namespace fids::preprocess
