#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fids/dataio.hpp"

namespace fids::synthetic {

/// Isotropic unit-variance Gaussian blobs, one per class. Class c is centred on
/// the hypercube vertex given by the bits of c (times `separation`) in the
/// first ceil(log2 K) features; any remaining features are pure noise.
Dataset gaussian_blobs(const LabelMap& labels, std::span<const std::size_t> counts, std::size_t n_features,
                       double separation, std::uint64_t seed);

/// Class counts of the raw intrusion dataset, in LabelMap::intrusion_classes() order.
std::vector<std::size_t> intrusion_class_counts();

}  // namespace fids::synthetic
