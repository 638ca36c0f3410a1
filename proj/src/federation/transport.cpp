#include "fids/federation/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <utility>

namespace fids::federation {

namespace {

// ---- in-process ----

class Queue {
 public:
  void push(Bytes frame) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(frame));
    }
    cv_.notify_one();
  }

  Bytes pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) throw IoError("in-process peer closed the connection");
    Bytes frame = std::move(items_.front());
    items_.pop_front();
    return frame;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> items_;
  bool closed_ = false;
};

class InProcConnection : public Connection {
 public:
  InProcConnection(std::shared_ptr<Queue> inbox, std::shared_ptr<Queue> outbox)
      : inbox_(std::move(inbox)), outbox_(std::move(outbox)) {}
  ~InProcConnection() override { outbox_->close(); }

  void send(std::span<const std::uint8_t> frame) override { outbox_->push(Bytes(frame.begin(), frame.end())); }

  Bytes receive() override {
    Bytes frame = inbox_->pop();
    // Same validation a stream reader performs on the header.
    if (frame.size() < kFrameHeaderSize) throw TruncatedInput("frame shorter than header");
    return frame;
  }

 private:
  std::shared_ptr<Queue> inbox_;
  std::shared_ptr<Queue> outbox_;
};

struct PendingConnections {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::unique_ptr<Connection>> waiting;
};

class InProcListener : public Listener {
 public:
  explicit InProcListener(std::shared_ptr<PendingConnections> pending) : pending_(std::move(pending)) {}

  std::unique_ptr<Connection> accept() override {
    std::unique_lock lock(pending_->mu);
    pending_->cv.wait(lock, [&] { return !pending_->waiting.empty(); });
    auto conn = std::move(pending_->waiting.front());
    pending_->waiting.pop_front();
    return conn;
  }

 private:
  std::shared_ptr<PendingConnections> pending_;
};

class InProcTransport : public Transport {
 public:
  std::unique_ptr<Listener> listen() override { return std::make_unique<InProcListener>(pending_); }

  std::unique_ptr<Connection> connect() override {
    auto to_server = std::make_shared<Queue>();
    auto to_edge = std::make_shared<Queue>();
    {
      std::lock_guard lock(pending_->mu);
      pending_->waiting.push_back(std::make_unique<InProcConnection>(to_server, to_edge));
    }
    pending_->cv.notify_one();
    return std::make_unique<InProcConnection>(to_edge, to_server);
  }

 private:
  std::shared_ptr<PendingConnections> pending_ = std::make_shared<PendingConnections>();
};

// ---- TCP ----

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&&) = delete;
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  int fd() const noexcept { return fd_; }

 private:
  int fd_;
};

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &found) != 0 || found == nullptr) {
    throw IoError("cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(found->ai_addr)->sin_addr;
  ::freeaddrinfo(found);
  return addr;
}

class TcpConnection : public Connection {
 public:
  explicit TcpConnection(Socket socket) : socket_(std::move(socket)) {
    int one = 1;
    ::setsockopt(socket_.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  void send(std::span<const std::uint8_t> frame) override {
    std::size_t sent = 0;
    while (sent < frame.size()) {
      const auto n = ::send(socket_.fd(), frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError(errno_text("send failed"));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  Bytes receive() override {
    Bytes frame(kFrameHeaderSize);
    read_exact(frame.data(), kFrameHeaderSize);
    const std::size_t total = frame_size(std::span<const std::uint8_t, kFrameHeaderSize>(frame.data(), kFrameHeaderSize));
    frame.resize(total);
    read_exact(frame.data() + kFrameHeaderSize, total - kFrameHeaderSize);
    return frame;
  }

 private:
  void read_exact(std::uint8_t* out, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
      const auto r = ::recv(socket_.fd(), out + got, n - got, 0);
      if (r == 0) throw IoError("peer closed the connection mid-frame");
      if (r < 0) {
        if (errno == EINTR) continue;
        throw IoError(errno_text("recv failed"));
      }
      got += static_cast<std::size_t>(r);
    }
  }

  Socket socket_;
};

class TcpListener : public Listener {
 public:
  TcpListener(const std::string& host, std::uint16_t port) : socket_(::socket(AF_INET, SOCK_STREAM, 0)) {
    if (socket_.fd() < 0) throw IoError(errno_text("socket failed"));
    int one = 1;
    ::setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    const auto addr = resolve(host, port);
    if (::bind(socket_.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw IoError(errno_text("bind to port " + std::to_string(port) + " failed"));
    }
    if (::listen(socket_.fd(), 16) != 0) throw IoError(errno_text("listen failed"));
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  std::uint16_t port() const noexcept { return port_; }

  std::unique_ptr<Connection> accept() override {
    for (;;) {
      const int fd = ::accept(socket_.fd(), nullptr, nullptr);
      if (fd >= 0) return std::make_unique<TcpConnection>(Socket(fd));
      if (errno != EINTR) throw IoError(errno_text("accept failed"));
    }
  }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

class TcpTransport : public Transport {
 public:
  TcpTransport(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {}

  std::unique_ptr<Listener> listen() override {
    auto listener = std::make_unique<TcpListener>(host_, port_);
    port_ = listener->port();
    return listener;
  }

  std::unique_ptr<Connection> connect() override { return tcp_connect(host_, port_); }

 private:
  std::string host_;
  std::uint16_t port_;
};

}  // namespace

std::unique_ptr<Transport> make_inproc_transport() { return std::make_unique<InProcTransport>(); }

std::unique_ptr<Transport> make_tcp_transport(std::string host, std::uint16_t port) {
  return std::make_unique<TcpTransport>(std::move(host), port);
}

std::unique_ptr<Listener> tcp_listen(const std::string& host, std::uint16_t port, std::uint16_t* bound_port) {
  auto listener = std::make_unique<TcpListener>(host, port);
  if (bound_port) *bound_port = listener->port();
  return listener;
}

std::unique_ptr<Connection> tcp_connect(const std::string& host, std::uint16_t port) {
  Socket socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (socket.fd() < 0) throw IoError(errno_text("socket failed"));
  const auto addr = resolve(host == "0.0.0.0" ? "127.0.0.1" : host, port);
  if (::connect(socket.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw IoError(errno_text("connect to " + host + ":" + std::to_string(port) + " failed"));
  }
  return std::make_unique<TcpConnection>(std::move(socket));
}

}  // namespace fids::federation
