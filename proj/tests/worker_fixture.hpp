#pragma once

#include <string>
#include <thread>

#include "dcrr/wire.hpp"

// A worker serving on an ephemeral loopback port from a background thread.
// Destroy any cluster using it first so the connection closes and the thread exits.
struct LocalWorker {
  explicit LocalWorker(std::size_t connections = 1)
      : listener("127.0.0.1", 0), thread([this, connections] { dcrr::wire::serve(listener, connections); }) {}
  ~LocalWorker() { thread.join(); }
  LocalWorker(const LocalWorker&) = delete;
  LocalWorker& operator=(const LocalWorker&) = delete;

  std::string endpoint() const { return "127.0.0.1:" + std::to_string(listener.port()); }

  dcrr::wire::Listener listener;
  std::thread thread;
};
