#include "dcrr/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <optional>
#include <sstream>

#include "dcrr/errors.hpp"
#include "dcrr/rankloss.hpp"

namespace dcrr::wire {

namespace {

void put_u64(std::uint8_t* out, std::uint64_t v) noexcept {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_u64(const std::uint8_t* in) noexcept {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

bool known_tag(std::uint8_t t) noexcept { return t >= 0x01 && t <= 0x05; }

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

std::string_view tag_name(Tag tag) noexcept {
  switch (tag) {
    case Tag::LoadShard: return "LOAD_SHARD";
    case Tag::EvalGrad: return "EVAL_GRAD";
    case Tag::EvalLoss: return "EVAL_LOSS";
    case Tag::Result: return "RESULT";
    case Tag::Error: return "ERROR";
  }
  return "UNKNOWN";
}

std::vector<std::uint8_t> encode_header(Tag tag, std::uint64_t payload_bytes) {
  std::vector<std::uint8_t> header(kHeaderBytes);
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  header[4] = static_cast<std::uint8_t>(tag);
  put_u64(header.data() + 5, payload_bytes);
  return header;
}

std::pair<Tag, std::uint64_t> decode_header(std::span<const std::uint8_t> header) {
  if (header.size() != kHeaderBytes) throw ProtocolError("frame header must be 13 bytes");
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) throw ProtocolError("bad frame magic");
  if (!known_tag(header[4])) throw ProtocolError("unknown message tag " + std::to_string(header[4]));
  const std::uint64_t length = get_u64(header.data() + 5);
  if (length > kMaxPayloadBytes) throw ProtocolError("frame payload too large");
  return {static_cast<Tag>(header[4]), length};
}

std::vector<std::uint8_t> encode_frame(Tag tag, std::span<const std::uint8_t> payload) {
  auto frame = encode_header(tag, payload.size());
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

std::vector<std::uint8_t> encode_doubles(std::span<const double> values) {
  std::vector<std::uint8_t> out(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) put_u64(out.data() + 8 * i, std::bit_cast<std::uint64_t>(values[i]));
  return out;
}

std::vector<double> decode_doubles(std::span<const std::uint8_t> payload) {
  if (payload.size() % 8 != 0) throw ProtocolError("float64 payload length is not a multiple of 8");
  std::vector<double> out(payload.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<double>(get_u64(payload.data() + 8 * i));
  return out;
}

std::vector<std::uint8_t> encode_text(std::string_view text) { return {text.begin(), text.end()}; }

std::string decode_text(std::span<const std::uint8_t> payload) { return {payload.begin(), payload.end()}; }

std::vector<double> shard_payload(const Shard& shard, const SmoothedLoss& sl) {
  const std::size_t n = shard.rows();
  const std::size_t p = shard.cols();
  std::vector<double> values;
  values.reserve(5 + n * p + n);
  values.push_back(static_cast<double>(n));
  values.push_back(static_cast<double>(p));
  values.push_back(static_cast<double>(sl.kernel().index()));
  values.push_back(sl.bandwidth());
  values.push_back(static_cast<double>(shard.machine_id()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      values.push_back(shard.X()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  for (std::size_t i = 0; i < n; ++i) values.push_back(shard.y()[static_cast<Eigen::Index>(i)]);
  return values;
}

LoadedShard decode_shard_payload(std::span<const double> values) {
  if (values.size() < 5) throw ProtocolError("LOAD_SHARD payload too short");
  const auto as_count = [](double v, const char* what) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e12) throw ProtocolError(std::string("LOAD_SHARD: bad ") + what);
    return static_cast<std::size_t>(v);
  };
  const std::size_t n = as_count(values[0], "row count");
  const std::size_t p = as_count(values[1], "column count");
  const std::size_t kernel_id = as_count(values[2], "kernel id");
  const std::size_t machine = as_count(values[4], "machine id");
  if (values.size() != 5 + n * p + n) throw ProtocolError("LOAD_SHARD payload length does not match n and p");
  Kernel kernel;
  if (kernel_id == 0)
    kernel = GaussianKernel{};
  else if (kernel_id == 1)
    kernel = EpanechnikovKernel{};
  else
    throw ProtocolError("LOAD_SHARD: unknown kernel id");
  Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Vector y(static_cast<Eigen::Index>(n));
  std::size_t at = 5;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[at++];
  for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = values[at++];
  try {
    return {Shard(std::move(X), std::move(y), machine), SmoothedLoss(kernel, values[3])};
  } catch (const ConfigError& e) {
    throw ProtocolError(std::string("LOAD_SHARD: ") + e.what());
  }
}

std::string describe_protocol() {
  std::ostringstream os;
  os << "dcrr worker wire protocol\n"
     << "\n"
     << "frame := magic[4] tag[1] length[8] payload[length]\n"
     << "  magic   ASCII \"DCR1\" (0x44 0x43 0x52 0x31)\n"
     << "  tag     one byte, see below\n"
     << "  length  payload size in bytes, unsigned 64-bit little-endian\n"
     << "  payload raw little-endian IEEE-754 float64 values, or UTF-8 text for ERROR\n"
     << "  header size " << kHeaderBytes << " bytes\n"
     << "\n"
     << "tags\n"
     << "  0x01 LOAD_SHARD  master->worker  [n, p, kernel_id, h, machine_id, X row-major (n*p), y (n)]\n"
     << "                   kernel_id: 0 gaussian, 1 epanechnikov; reply RESULT [n]\n"
     << "  0x02 EVAL_GRAD   master->worker  beta (p values); reply RESULT local gradient (p values)\n"
     << "  0x03 EVAL_LOSS   master->worker  beta (p values); reply RESULT local loss (1 value)\n"
     << "  0x04 RESULT      worker->master  float64 values as described per request\n"
     << "  0x05 ERROR       worker->master  UTF-8 diagnostic text\n"
     << "\n"
     << "one round = the master writes one request frame to every worker, then reads\n"
     << "one reply per worker in machine-id order and averages the replies in that order.\n";
  return os.str();
}

Socket::~Socket() { close(); }

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket Socket::connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0)
    throw Error("cannot resolve " + host + ": " + ::gai_strerror(rc));
  std::string last_error = "no addresses";
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) {
      last_error = errno_text("socket");
      continue;
    }
    s.set_timeout(timeout);
    if (::connect(s.fd_, ai->ai_addr, ai->ai_addrlen) == 0) {
      int one = 1;
      ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      ::freeaddrinfo(found);
      return s;
    }
    last_error = errno_text("connect");
  }
  ::freeaddrinfo(found);
  throw Error("cannot connect to " + host + ":" + service + " (" + last_error + ")");
}

void Socket::set_timeout(std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

void Socket::send_all(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t rc = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(errno_text("send"));
    }
    sent += static_cast<std::size_t>(rc);
  }
}

bool Socket::recv_exact(std::span<std::uint8_t> bytes) {
  std::size_t got = 0;
  while (got < bytes.size()) {
    const ssize_t rc = ::recv(fd_, bytes.data() + got, bytes.size() - got, 0);
    if (rc == 0) {
      if (got == 0) return false;
      throw Error("connection closed mid-frame");
    }
    if (rc < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw Error("receive timed out");
      throw Error(errno_text("recv"));
    }
    got += static_cast<std::size_t>(rc);
  }
  return true;
}

void write_frame(Socket& socket, Tag tag, std::span<const std::uint8_t> payload) {
  socket.send_all(encode_frame(tag, payload));
}

bool read_frame(Socket& socket, Frame& frame) {
  std::array<std::uint8_t, kHeaderBytes> header{};
  if (!socket.recv_exact(header)) return false;
  const auto [tag, length] = decode_header(header);
  frame.tag = tag;
  frame.payload.resize(length);
  if (length > 0 && !socket.recv_exact(frame.payload)) throw Error("connection closed mid-frame");
  return true;
}

std::pair<std::string, std::uint16_t> parse_endpoint(std::string_view endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == endpoint.size())
    throw ConfigError("endpoint '" + std::string(endpoint) + "' is not host:port");
  unsigned port = 0;
  const auto digits = endpoint.substr(colon + 1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || port > 65535)
    throw ConfigError("endpoint '" + std::string(endpoint) + "' has an invalid port");
  return {std::string(endpoint.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

Listener::Listener(const std::string& host, std::uint16_t port) {
  socket_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!socket_.valid()) throw Error(errno_text("socket"));
  int one = 1;
  ::setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string bind_host = (host.empty() || host == "*") ? "0.0.0.0" : (host == "localhost" ? "127.0.0.1" : host);
  if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1)
    throw ConfigError("cannot listen on '" + host + "': expected an IPv4 address");
  if (::bind(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) throw Error(errno_text("bind"));
  if (::listen(socket_.fd(), 16) != 0) throw Error(errno_text("listen"));
  socklen_t len = sizeof(addr);
  if (::getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) throw Error(errno_text("getsockname"));
  port_ = ntohs(addr.sin_port);
}

Socket Listener::accept() {
  while (true) {
    const int fd = ::accept(socket_.fd(), nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno != EINTR) throw Error(errno_text("accept"));
  }
}

void serve_connection(Socket socket, ExecutionPolicy policy) {
  std::optional<LoadedShard> loaded;
  Frame frame;
  while (true) {
    try {
      if (!read_frame(socket, frame)) return;
    } catch (const ProtocolError& e) {
      write_frame(socket, Tag::Error, encode_text(e.what()));
      return;
    }
    try {
      switch (frame.tag) {
        case Tag::LoadShard: {
          loaded.emplace(decode_shard_payload(decode_doubles(frame.payload)));
          const double n = static_cast<double>(loaded->shard.rows());
          write_frame(socket, Tag::Result, encode_doubles({&n, 1}));
          break;
        }
        case Tag::EvalGrad:
        case Tag::EvalLoss: {
          if (!loaded) throw ProtocolError("no shard loaded");
          const auto beta_values = decode_doubles(frame.payload);
          if (beta_values.size() != loaded->shard.cols())
            throw ProtocolError("beta has " + std::to_string(beta_values.size()) + " entries, shard has p = " +
                                std::to_string(loaded->shard.cols()));
          const Vector beta = Eigen::Map<const Vector>(beta_values.data(), static_cast<Eigen::Index>(beta_values.size()));
          if (frame.tag == Tag::EvalGrad) {
            const Vector g = local_gradient(loaded->shard, loaded->sl, beta, policy);
            write_frame(socket, Tag::Result, encode_doubles({g.data(), static_cast<std::size_t>(g.size())}));
          } else {
            const double value = local_loss(loaded->shard, loaded->sl, beta, policy).value;
            write_frame(socket, Tag::Result, encode_doubles({&value, 1}));
          }
          break;
        }
        case Tag::Result:
        case Tag::Error:
          throw ProtocolError(std::string("unexpected ") + std::string(tag_name(frame.tag)) + " frame from master");
      }
    } catch (const Error& e) {
      write_frame(socket, Tag::Error, encode_text(e.what()));
    }
  }
}

void serve(Listener& listener, std::size_t max_connections, ExecutionPolicy policy) {
  for (std::size_t served = 0; max_connections == 0 || served < max_connections; ++served) {
    Socket connection = listener.accept();
    try {
      serve_connection(std::move(connection), policy);
    } catch (const Error&) {
      // Connection-level failure; keep accepting new masters.
    }
  }
}

}  // namespace dcrr::wire
