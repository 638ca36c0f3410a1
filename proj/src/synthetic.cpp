#include "fids/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fids/error.hpp"
#include "fids/rng.hpp"

namespace fids::synthetic {

Dataset gaussian_blobs(const LabelMap& labels, std::span<const std::size_t> counts, std::size_t n_features,
                       double separation, std::uint64_t seed) {
  if (counts.size() != labels.size()) throw ConfigError("one count per class is required");
  if (n_features < 1) throw ConfigError("at least one feature is required");
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < labels.size()) ++bits;

  ColumnSchema schema;
  for (std::size_t f = 0; f < n_features; ++f) schema.feature_names.push_back("f" + std::to_string(f));
  Dataset data(schema, labels);

  Rng rng(mix_seed(seed, 0x626c6f62ULL));
  // Box-Muller; 1 - u keeps the logarithm finite.
  auto normal = [&] {
    const double u = 1.0 - rng.uniform01();
    const double v = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  };
  std::vector<double> row(n_features);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      for (std::size_t f = 0; f < n_features; ++f) {
        const double centre = f < bits ? separation * static_cast<double>((c >> f) & 1U) : 0.0;
        row[f] = centre + normal();
      }
      data.append(row, static_cast<ClassId>(c));
    }
  }
  return data;
}

std::vector<std::size_t> intrusion_class_counts() { return {22728, 1966, 2767, 18984, 36, 7946, 2180}; }

}  // namespace fids::synthetic
