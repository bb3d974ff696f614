#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcrr/datagen.hpp"
#include "dcrr/parallel.hpp"
#include "dcrr/smoothing.hpp"

namespace dcrr::wire {

// Frame layout (all integers little-endian):
//   bytes 0..3   magic "DCR1"
//   byte  4      message tag
//   bytes 5..12  payload length in bytes (uint64)
//   bytes 13..   payload: raw little-endian float64 values, or UTF-8 text for ERROR
inline constexpr std::array<char, 4> kMagic{'D', 'C', 'R', '1'};
inline constexpr std::size_t kHeaderBytes = 13;
inline constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 34;

enum class Tag : std::uint8_t {
  LoadShard = 0x01,
  EvalGrad = 0x02,
  EvalLoss = 0x03,
  Result = 0x04,
  Error = 0x05,
};

std::string_view tag_name(Tag tag) noexcept;

struct Frame {
  Tag tag = Tag::Error;
  std::vector<std::uint8_t> payload;
};

constexpr std::size_t frame_bytes(std::size_t payload_bytes) noexcept { return kHeaderBytes + payload_bytes; }

std::vector<std::uint8_t> encode_header(Tag tag, std::uint64_t payload_bytes);
/// Validates magic and tag; returns (tag, payload length).
std::pair<Tag, std::uint64_t> decode_header(std::span<const std::uint8_t> header);
std::vector<std::uint8_t> encode_frame(Tag tag, std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_text(std::string_view text);
std::string decode_text(std::span<const std::uint8_t> payload);

/// LOAD_SHARD payload as float64 values:
///   [n, p, kernel_id (0 gaussian, 1 epanechnikov), h, machine_id, X row-major (n*p), y (n)]
std::vector<double> shard_payload(const Shard& shard, const SmoothedLoss& sl);
constexpr std::size_t shard_payload_size(std::size_t n, std::size_t p) noexcept { return 5 + n * p + n; }
inline std::size_t shard_payload_size(const Shard& shard) noexcept { return shard_payload_size(shard.rows(), shard.cols()); }

struct LoadedShard {
  Shard shard;
  SmoothedLoss sl;
};
LoadedShard decode_shard_payload(std::span<const double> values);

/// Human-readable description of the protocol (printed by `dcrr protocol-dump`).
std::string describe_protocol();

/// Owning TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  static Socket connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }
  void send_all(std::span<const std::uint8_t> bytes);
  /// Returns false on orderly EOF before the first byte; throws on partial reads.
  bool recv_exact(std::span<std::uint8_t> bytes);
  void set_timeout(std::chrono::milliseconds timeout);
  void close() noexcept;

 private:
  int fd_ = -1;
};

void write_frame(Socket& socket, Tag tag, std::span<const std::uint8_t> payload);
/// Returns false on orderly EOF between frames.
bool read_frame(Socket& socket, Frame& frame);

/// Parses "host:port".
std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint);

class Listener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  Listener(const std::string& host, std::uint16_t port);

  std::uint16_t port() const noexcept { return port_; }
  Socket accept();

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// Serves frames on one master connection until the peer closes it.
/// Holds at most one shard; evaluation failures are answered with ERROR frames.
void serve_connection(Socket socket, ExecutionPolicy policy = {});

/// Accepts master connections one at a time. max_connections == 0 means forever.
void serve(Listener& listener, std::size_t max_connections = 0, ExecutionPolicy policy = {});

}  // namespace dcrr::wire
