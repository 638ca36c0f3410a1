#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "fids/federation/ensemble.hpp"
#include "fids/federation/transport.hpp"

namespace fids::federation {

/// Frames recorded in protocol order: by round, then exchange step, then
/// device id. Thread-safe; the order does not depend on thread scheduling.
class Transcript {
 public:
  enum class Step : std::uint8_t { Update = 0, Global = 1, Ack = 2, Control = 3 };

  void record(std::uint32_t round, Step step, std::uint32_t device_id, Bytes frame);
  /// Concatenation of every recorded frame in protocol order.
  Bytes bytes() const;
  std::size_t frame_count() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::tuple<std::uint32_t, Step, std::uint32_t, Bytes>> frames_;
};

struct EdgeExchange {
  EnsembleModel global;
  bool continue_training = false;
};

/// Edge side of one round: send ModelUpdate, receive GlobalModel, send Ack,
/// then read the server's control frame (Ack = another round, Shutdown = stop).
EdgeExchange edge_exchange(Connection& conn, std::uint32_t device_id, std::uint32_t round,
                           const gbdt::GbdtModel& local_model);

struct ReceivedUpdate {
  std::uint32_t device_id = 0;
  gbdt::GbdtModel model;
};

/// Server side of one round with barrier semantics: every expected edge must
/// deliver its ModelUpdate before aggregation can begin.
class ServerRound {
 public:
  ServerRound(Listener& listener, std::size_t expected_edges, std::uint32_t round, Transcript* transcript = nullptr);

  /// Accepts the edges and reads their updates concurrently; returns them sorted by device id.
  std::vector<ReceivedUpdate> collect_updates();

  /// Sends GlobalModel to every edge, waits for their Acks, then sends Ack or Shutdown.
  void broadcast(const EnsembleModel& global, bool stop);

 private:
  Listener& listener_;
  std::size_t expected_edges_;
  std::uint32_t round_;
  Transcript* transcript_;
  std::vector<std::pair<std::uint32_t, std::unique_ptr<Connection>>> peers_;
};

}  // namespace fids::federation
