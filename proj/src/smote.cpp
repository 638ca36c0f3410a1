#include "fids/smote.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fids/error.hpp"
#include "fids/rng.hpp"

namespace fids::preprocess {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

// Lazily computed k-nearest-neighbour lists within one class.
class ClassNeighbours {
 public:
  ClassNeighbours(const Dataset& data, const std::vector<std::size_t>& rows, std::size_t k)
      : data_(data), rows_(rows), k_(k), cache_(rows.size()) {}

  const std::vector<std::size_t>& of(std::size_t local) {
    auto& slot = cache_[local];
    if (slot) return *slot;
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(rows_.size() - 1);
    const auto x = data_.row(rows_[local]);
    for (std::size_t j = 0; j < rows_.size(); ++j) {
      if (j == local) continue;
      dist.emplace_back(squared_distance(x, data_.row(rows_[j])), rows_[j]);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    std::vector<std::size_t> nearest(k_);
    for (std::size_t i = 0; i < k_; ++i) nearest[i] = dist[i].second;
    slot = std::move(nearest);
    return *slot;
  }

 private:
  const Dataset& data_;
  const std::vector<std::size_t>& rows_;
  std::size_t k_;
  std::vector<std::optional<std::vector<std::size_t>>> cache_;
};

}  // namespace

Dataset smote_resample(const Dataset& data, const SmoteConfig& cfg) {
  if (cfg.k_neighbors < 1) throw ConfigError("SMOTE k_neighbors must be at least 1");
  const auto by_class = data.rows_by_class();
  for (const auto& [cls, target] : cfg.targets) {
    if (cls >= data.n_classes()) throw ConfigError("SMOTE target for unknown class " + std::to_string(cls));
    const std::size_t count = by_class[cls].size();
    if (target < count) {
      throw ConfigError("SMOTE target " + std::to_string(target) + " below current count " +
                        std::to_string(count) + " for class '" + data.label_map().name(cls) + "'");
    }
    if (target > count && count < 2) {
      throw DataError("SMOTE needs at least 2 rows of class '" + data.label_map().name(cls) + "'");
    }
  }

  Dataset out = data;
  Rng rng(mix_seed(cfg.seed, 0x736d6f7465ULL));
  std::vector<double> synthetic(data.n_features());
  for (const auto& [cls, target] : cfg.targets) {
    const auto& rows = by_class[cls];
    if (target == rows.size()) continue;
    const std::size_t k = std::min(cfg.k_neighbors, rows.size() - 1);
    ClassNeighbours neighbours(data, rows, k);
    for (std::size_t made = rows.size(); made < target; ++made) {
      const std::size_t local = rng.index(rows.size());
      const auto& nearest = neighbours.of(local);
      const std::size_t partner = nearest[rng.index(nearest.size())];
      const double u = rng.uniform_closed01();
      const auto x = data.row(rows[local]);
      const auto n = data.row(partner);
      for (std::size_t f = 0; f < x.size(); ++f) synthetic[f] = x[f] + u * (n[f] - x[f]);
      out.append(synthetic, cls);
    }
  }
  return out;
}

}  // namespace fids::preprocess
