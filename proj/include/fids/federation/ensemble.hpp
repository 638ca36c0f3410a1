#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fids/federation/codec.hpp"
#include "fids/gbdt.hpp"

namespace fids::federation {

/// Edge models plus one server-trained model, combined by majority vote.
/// Vote ties go to the tied class with the highest mean member probability,
/// remaining ties to the lowest class id.
struct EnsembleModel {
  std::vector<gbdt::GbdtModel> members;
  std::vector<std::uint32_t> member_origins;  // device id per member; 0 is the server

  std::uint32_t n_classes() const { return members.front().n_classes; }
  std::uint32_t n_features() const { return members.front().n_features; }
  void validate() const;

  bool operator==(const EnsembleModel&) const = default;
};

inline constexpr std::uint32_t kServerDeviceId = 0;

/// Fits the server member on server_train and appends it after the edge models.
EnsembleModel build_ensemble(std::span<const gbdt::GbdtModel> edge_models, std::span<const std::uint32_t> edge_ids,
                             const Dataset& server_train, const gbdt::GbdtParams& params);
/// Same, with an already trained server member.
EnsembleModel assemble_ensemble(std::span<const gbdt::GbdtModel> edge_models, std::span<const std::uint32_t> edge_ids,
                                gbdt::GbdtModel server_model);

ClassId ensemble_predict(const EnsembleModel& ensemble, std::span<const double> x);
/// Mean of the members' probability vectors.
std::vector<double> ensemble_mean_proba(const EnsembleModel& ensemble, std::span<const double> x);

/// member count u32 | vote rule u8 | per member: device id u32, length u64, model bytes
Bytes serialize_ensemble(const EnsembleModel& ensemble);
EnsembleModel deserialize_ensemble(std::span<const std::uint8_t> bytes);

}  // namespace fids::federation
