#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "dcrr/datagen.hpp"
#include "dcrr/parallel.hpp"
#include "dcrr/smoothing.hpp"
#include "dcrr/wire.hpp"

namespace dcrr {

/// Communication counters. Bytes are counted as framed on the wire (13-byte
/// header plus payload) for both backends, so in-process runs report what a
/// network run would send. Shard loading is tracked separately from rounds.
struct CommLedger {
  std::size_t rounds = 0;
  std::size_t gradient_rounds = 0;
  std::size_t loss_rounds = 0;
  std::size_t bytes_down = 0;  ///< master to workers
  std::size_t bytes_up = 0;    ///< workers to master
  std::size_t gradient_bytes_down = 0;
  std::size_t gradient_bytes_up = 0;
  std::size_t setup_bytes = 0;

  CommLedger& operator+=(const CommLedger& other);
  friend CommLedger operator-(CommLedger a, const CommLedger& b);
  friend bool operator==(const CommLedger&, const CommLedger&) = default;
};

enum class Aggregation {
  Unweighted,    ///< plain mean over machines
  SizeWeighted,  ///< n_m / N weights (experimental)
};

struct GradientRound {
  Vector mean_gradient;
  Vector master_gradient;
  CommLedger delta;
};

struct LossRound {
  double mean_loss = 0.0;
  double master_loss = 0.0;
  CommLedger delta;
};

/// Broadcast / gather over M machines. Replies are summed in machine-id order
/// and then divided, so the mean does not depend on arrival order.
class Cluster {
 public:
  virtual ~Cluster() = default;

  std::size_t machines() const noexcept { return sizes_.size(); }
  std::size_t dim() const noexcept { return master_shard_.cols(); }
  std::size_t total_rows() const noexcept { return total_rows_; }
  std::span<const std::size_t> shard_sizes() const noexcept { return sizes_; }
  std::size_t master_index() const noexcept { return master_; }
  const Shard& master_shard() const noexcept { return master_shard_; }
  const SmoothedLoss& smoothed_loss() const noexcept { return sl_; }
  const CommLedger& ledger() const noexcept { return ledger_; }

  Aggregation aggregation() const noexcept { return aggregation_; }
  void set_aggregation(Aggregation a) noexcept { aggregation_ = a; }

  /// One gradient round: broadcast beta, gather p-vectors.
  GradientRound gradient_round(const Vector& beta);
  /// One loss round: broadcast beta, gather scalars.
  LossRound loss_round(const Vector& beta);

 protected:
  Cluster(const Partition& partition, SmoothedLoss sl);

  /// Per-machine local gradients, in machine order.
  virtual std::vector<Vector> gather_gradients(const Vector& beta) = 0;
  virtual std::vector<double> gather_losses(const Vector& beta) = 0;

  void add_setup_bytes(std::size_t bytes) noexcept { ledger_.setup_bytes += bytes; }

 private:
  std::vector<double> weights() const;

  Shard master_shard_;
  SmoothedLoss sl_;
  std::vector<std::size_t> sizes_;
  std::size_t master_;
  std::size_t total_rows_ = 0;
  Aggregation aggregation_ = Aggregation::Unweighted;
  CommLedger ledger_;
};

/// All shards live in this process. With `concurrent`, machines are evaluated
/// on separate threads; the reduction order is unchanged.
class InProcessCluster final : public Cluster {
 public:
  InProcessCluster(Partition partition, SmoothedLoss sl, bool concurrent = false, ExecutionPolicy policy = {});

  std::span<const Shard> shards() const noexcept { return partition_.shards; }

 protected:
  std::vector<Vector> gather_gradients(const Vector& beta) override;
  std::vector<double> gather_losses(const Vector& beta) override;

 private:
  Partition partition_;
  bool concurrent_;
  ExecutionPolicy policy_;
};

/// Shards are shipped once to remote workers (one endpoint per machine, in
/// machine order); the master keeps its own shard locally for solving.
/// Any worker failure raises AggregationError naming the machine.
class NetworkCluster final : public Cluster {
 public:
  NetworkCluster(const Partition& partition, SmoothedLoss sl, const std::vector<std::string>& endpoints,
                 std::chrono::milliseconds timeout = std::chrono::seconds(60));

 protected:
  std::vector<Vector> gather_gradients(const Vector& beta) override;
  std::vector<double> gather_losses(const Vector& beta) override;

 private:
  std::vector<std::vector<double>> round_trip(wire::Tag tag, const Vector& beta, std::size_t reply_size);

  std::vector<wire::Socket> sockets_;
  std::vector<std::size_t> machine_ids_;
};

}  // namespace dcrr
