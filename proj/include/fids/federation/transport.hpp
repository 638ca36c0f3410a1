#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "fids/federation/envelope.hpp"

namespace fids::federation {

/// Bidirectional frame pipe. Each receive() returns exactly one frame.
class Connection {
 public:
  virtual ~Connection() = default;
  virtual void send(std::span<const std::uint8_t> frame) = 0;
  virtual Bytes receive() = 0;

  void send_envelope(const ModelEnvelope& env) { send(encode_frame(env)); }
  ModelEnvelope receive_envelope() { return decode_frame(receive()); }
};

class Listener {
 public:
  virtual ~Listener() = default;
  virtual std::unique_ptr<Connection> accept() = 0;
};

/// Factory for the server side (listen) and the edge side (connect) of one network.
class Transport {
 public:
  virtual ~Transport() = default;
  /// Must be called before connect().
  virtual std::unique_ptr<Listener> listen() = 0;
  virtual std::unique_ptr<Connection> connect() = 0;
};

/// Frames handed over through in-memory queues.
std::unique_ptr<Transport> make_inproc_transport();

/// Length-framed TCP. Port 0 binds an ephemeral port that later connect()
/// calls reuse.
std::unique_ptr<Transport> make_tcp_transport(std::string host, std::uint16_t port);

/// Standalone TCP endpoints for the serve / send-model commands.
std::unique_ptr<Listener> tcp_listen(const std::string& host, std::uint16_t port, std::uint16_t* bound_port = nullptr);
std::unique_ptr<Connection> tcp_connect(const std::string& host, std::uint16_t port);

}  // namespace fids::federation
