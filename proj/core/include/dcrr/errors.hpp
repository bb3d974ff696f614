#pragma once

#include <stdexcept>
#include <string>

namespace dcrr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or input shape. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a function's mathematical domain (non-finite input, negative magnitude).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite objective or similar numerical breakdown inside an optimizer.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed frame or payload on the worker wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A worker failed (timeout, lost connection, remote error) during a gather round.
class AggregationError : public Error {
 public:
  AggregationError(std::size_t machine_id, const std::string& what)
      : Error("machine " + std::to_string(machine_id) + ": " + what), machine_id_(machine_id) {}

  std::size_t machine_id() const noexcept { return machine_id_; }

 private:
  std::size_t machine_id_;
};

class IngestionError : public Error {
 public:
  using Error::Error;
};

/// No tuning parameter on the grid produced an admissible model.
class SelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcrr
