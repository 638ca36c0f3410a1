#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fids/dataio.hpp"
#include "fids/federation/ensemble.hpp"
#include "fids/federation/protocol.hpp"
#include "fids/gbdt.hpp"
#include "fids/metrics.hpp"

namespace fids::federation {

struct RoundConfig {
  int max_rounds = 3;
  // Stop once server-test accuracy improves by less than this between rounds.
  double epsilon = 0.0;
  gbdt::GridSpec grid;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  double validation_fraction = 0.25;

  void validate() const;
};

enum class TransportKind { InProcess, Tcp };

struct SimulationOptions {
  TransportKind transport = TransportKind::InProcess;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  Transcript* transcript = nullptr;
};

struct DeviceMetrics {
  std::string device;  // edge1, edge2, ..., server
  metrics::Summary summary;
  metrics::ConfusionMatrix matrix;
};

struct RoundReport {
  int round = 0;
  // Edges in device-id order, then the server (scored with the global ensemble).
  std::vector<DeviceMetrics> devices;
  // Parameters chosen by grid search, same order as devices.
  std::vector<gbdt::GbdtParams> chosen_params;
  std::string stop_reason;  // continue | converged | max_rounds
};

struct SimulationResult {
  std::vector<RoundReport> rounds;
  std::vector<gbdt::GbdtModel> edge_models;  // from the final round
  EnsembleModel global;
};

/// Runs edge1, edge2 and the server over the chosen transport.
///
/// partitions = {edge1, edge2, server}. Each party splits its partition into
/// train/test, edges grid-search locally and ship only their models; the server
/// grid-searches its own member, forms the ensemble, scores it on its test
/// split and broadcasts it. Edges retrain from scratch every round.
SimulationResult run_federated_simulation(const std::vector<Dataset>& partitions, const RoundConfig& cfg,
                                          const SimulationOptions& options = {});

/// Canonical per-row encoding used by the privacy scan: the row's features as
/// big-endian IEEE-754 doubles.
Bytes encode_row(std::span<const double> row);

/// True when any training row's encoding occurs anywhere in `transcript`.
bool transcript_leaks_rows(std::span<const std::uint8_t> transcript, const Dataset& data);

}  // namespace fids::federation
