#include "fids/federation/protocol.hpp"

#include <algorithm>
#include <exception>
#include <string>
#include <thread>

namespace fids::federation {

void Transcript::record(std::uint32_t round, Step step, std::uint32_t device_id, Bytes frame) {
  std::lock_guard lock(mu_);
  frames_.emplace_back(round, step, device_id, std::move(frame));
}

Bytes Transcript::bytes() const {
  std::lock_guard lock(mu_);
  std::vector<const std::tuple<std::uint32_t, Step, std::uint32_t, Bytes>*> order;
  for (const auto& f : frames_) order.push_back(&f);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return std::tie(std::get<0>(*a), std::get<1>(*a), std::get<2>(*a)) <
           std::tie(std::get<0>(*b), std::get<1>(*b), std::get<2>(*b));
  });
  Bytes out;
  for (const auto* f : order) out.insert(out.end(), std::get<3>(*f).begin(), std::get<3>(*f).end());
  return out;
}

std::size_t Transcript::frame_count() const {
  std::lock_guard lock(mu_);
  return frames_.size();
}

EdgeExchange edge_exchange(Connection& conn, std::uint32_t device_id, std::uint32_t round,
                           const gbdt::GbdtModel& local_model) {
  conn.send_envelope({MessageType::ModelUpdate, device_id, round, serialize_model(local_model)});

  const auto global = conn.receive_envelope();
  if (global.type != MessageType::GlobalModel || global.round != round) {
    throw DataError("edge " + std::to_string(device_id) + " expected GlobalModel for round " + std::to_string(round));
  }
  EdgeExchange result{deserialize_ensemble(global.payload), false};
  conn.send_envelope({MessageType::Ack, device_id, round, {}});

  const auto control = conn.receive_envelope();
  if (control.type == MessageType::Ack) {
    result.continue_training = true;
  } else if (control.type != MessageType::Shutdown) {
    throw DataError("edge " + std::to_string(device_id) + " expected Ack or Shutdown");
  }
  return result;
}

ServerRound::ServerRound(Listener& listener, std::size_t expected_edges, std::uint32_t round, Transcript* transcript)
    : listener_(listener), expected_edges_(expected_edges), round_(round), transcript_(transcript) {}

std::vector<ReceivedUpdate> ServerRound::collect_updates() {
  struct Slot {
    std::unique_ptr<Connection> conn;
    ModelEnvelope update;
    Bytes frame;
    std::exception_ptr error;
  };
  std::vector<Slot> slots(expected_edges_);
  {
    std::vector<std::jthread> readers;
    readers.reserve(expected_edges_);
    for (auto& slot : slots) {
      slot.conn = listener_.accept();
      readers.emplace_back([&slot] {
        try {
          slot.frame = slot.conn->receive();
          slot.update = decode_frame(slot.frame);
        } catch (...) {
          slot.error = std::current_exception();
        }
      });
    }
  }  // barrier: every reader has finished

  // Connections only join peers_ once every update checks out; on error they
  // close here and blocked edges see the hang-up.
  std::vector<std::pair<std::uint32_t, std::unique_ptr<Connection>>> accepted;
  std::vector<ReceivedUpdate> updates;
  for (auto& slot : slots) {
    if (slot.error) std::rethrow_exception(slot.error);
    const auto& env = slot.update;
    if (env.type != MessageType::ModelUpdate) throw DataError("server expected a ModelUpdate frame");
    if (env.round != round_) {
      throw DataError("update for round " + std::to_string(env.round) + " arrived during round " + std::to_string(round_));
    }
    if (env.device_id == kServerDeviceId) throw DataError("device id 0 is reserved for the server");
    for (const auto& [id, conn] : accepted) {
      if (id == env.device_id) throw DataError("duplicate update from device " + std::to_string(id));
    }
    updates.push_back({env.device_id, deserialize_model(env.payload)});
    if (transcript_) transcript_->record(round_, Transcript::Step::Update, env.device_id, std::move(slot.frame));
    accepted.emplace_back(env.device_id, std::move(slot.conn));
  }
  std::sort(updates.begin(), updates.end(), [](const auto& a, const auto& b) { return a.device_id < b.device_id; });
  std::sort(accepted.begin(), accepted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  peers_ = std::move(accepted);
  return updates;
}

void ServerRound::broadcast(const EnsembleModel& global, bool stop) {
  const Bytes payload = serialize_ensemble(global);
  for (auto& [id, conn] : peers_) {
    const Bytes frame = encode_frame({MessageType::GlobalModel, id, round_, payload});
    conn->send(frame);
    if (transcript_) transcript_->record(round_, Transcript::Step::Global, id, frame);
  }
  for (auto& [id, conn] : peers_) {
    Bytes frame = conn->receive();
    const auto ack = decode_frame(frame);
    if (ack.type != MessageType::Ack || ack.device_id != id || ack.round != round_) {
      throw DataError("server expected Ack from device " + std::to_string(id));
    }
    if (transcript_) transcript_->record(round_, Transcript::Step::Ack, id, std::move(frame));
  }
  for (auto& [id, conn] : peers_) {
    const Bytes frame = encode_frame({stop ? MessageType::Shutdown : MessageType::Ack, kServerDeviceId, round_, {}});
    conn->send(frame);
    if (transcript_) transcript_->record(round_, Transcript::Step::Control, id, frame);
  }
  peers_.clear();
}

}  // namespace fids::federation
