#include "fids/federation/ensemble.hpp"

#include <string>

namespace fids::federation {

namespace {
constexpr std::uint8_t kMajorityMeanProbaRule = 1;
}

void EnsembleModel::validate() const {
  if (members.empty()) throw DataError("ensemble needs at least one member");
  if (member_origins.size() != members.size()) throw DataError("ensemble origins do not match members");
  for (const auto& m : members) {
    if (m.n_classes != members.front().n_classes || m.n_features != members.front().n_features) {
      throw DataError("ensemble members disagree on class or feature count");
    }
  }
}

EnsembleModel assemble_ensemble(std::span<const gbdt::GbdtModel> edge_models, std::span<const std::uint32_t> edge_ids,
                                gbdt::GbdtModel server_model) {
  if (edge_models.empty()) throw DataError("ensemble needs at least one edge model");
  if (edge_ids.size() != edge_models.size()) throw DataError("edge ids do not match edge models");
  EnsembleModel e;
  e.members.assign(edge_models.begin(), edge_models.end());
  e.member_origins.assign(edge_ids.begin(), edge_ids.end());
  e.members.push_back(std::move(server_model));
  e.member_origins.push_back(kServerDeviceId);
  e.validate();
  return e;
}

EnsembleModel build_ensemble(std::span<const gbdt::GbdtModel> edge_models, std::span<const std::uint32_t> edge_ids,
                             const Dataset& server_train, const gbdt::GbdtParams& params) {
  if (edge_models.empty()) throw DataError("ensemble needs at least one edge model");
  if (server_train.n_features() != edge_models.front().n_features ||
      server_train.n_classes() != edge_models.front().n_classes) {
    throw DataError("server data shape does not match edge models");
  }
  return assemble_ensemble(edge_models, edge_ids, gbdt::fit(server_train, params));
}

std::vector<double> ensemble_mean_proba(const EnsembleModel& ensemble, std::span<const double> x) {
  std::vector<double> mean(ensemble.n_classes(), 0.0);
  for (const auto& m : ensemble.members) {
    const auto p = gbdt::predict_proba(m, x);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
  }
  for (double& v : mean) v /= static_cast<double>(ensemble.members.size());
  return mean;
}

ClassId ensemble_predict(const EnsembleModel& ensemble, std::span<const double> x) {
  const std::size_t k = ensemble.n_classes();
  std::vector<std::size_t> votes(k, 0);
  std::vector<double> mean(k, 0.0);
  for (const auto& m : ensemble.members) {
    const auto p = gbdt::predict_proba(m, x);
    ++votes[gbdt::argmax(p)];
    for (std::size_t c = 0; c < k; ++c) mean[c] += p[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && mean[c] > mean[best])) best = c;
  }
  return static_cast<ClassId>(best);
}

Bytes serialize_ensemble(const EnsembleModel& ensemble) {
  ensemble.validate();
  ByteWriter out;
  out.u32(static_cast<std::uint32_t>(ensemble.members.size()));
  out.u8(kMajorityMeanProbaRule);
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    const Bytes model = serialize_model(ensemble.members[i]);
    out.u32(ensemble.member_origins[i]);
    out.u64(model.size());
    out.bytes(model);
  }
  return out.take();
}

EnsembleModel deserialize_ensemble(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const std::uint32_t count = in.u32();
  const std::uint8_t rule = in.u8();
  if (rule != kMajorityMeanProbaRule) throw DecodeError("unknown ensemble vote rule " + std::to_string(rule));
  if (count == 0) throw DecodeError("ensemble has no members");
  EnsembleModel e;
  for (std::uint32_t i = 0; i < count; ++i) {
    e.member_origins.push_back(in.u32());
    const std::uint64_t len = in.u64();
    if (len > in.remaining()) throw TruncatedInput("ensemble member truncated");
    e.members.push_back(deserialize_model(in.bytes(static_cast<std::size_t>(len))));
  }
  if (!in.done()) throw DecodeError("trailing bytes after ensemble");
  try {
    e.validate();
  } catch (const DataError& err) {
    throw DecodeError(err.what());
  }
  return e;
}

}  // namespace fids::federation
