#include "dcrr/cluster.hpp"

#include <numeric>

#include "dcrr/errors.hpp"
#include "dcrr/rankloss.hpp"

namespace dcrr {

CommLedger& CommLedger::operator+=(const CommLedger& other) {
  rounds += other.rounds;
  gradient_rounds += other.gradient_rounds;
  loss_rounds += other.loss_rounds;
  bytes_down += other.bytes_down;
  bytes_up += other.bytes_up;
  gradient_bytes_down += other.gradient_bytes_down;
  gradient_bytes_up += other.gradient_bytes_up;
  setup_bytes += other.setup_bytes;
  return *this;
}

CommLedger operator-(CommLedger a, const CommLedger& b) {
  a.rounds -= b.rounds;
  a.gradient_rounds -= b.gradient_rounds;
  a.loss_rounds -= b.loss_rounds;
  a.bytes_down -= b.bytes_down;
  a.bytes_up -= b.bytes_up;
  a.gradient_bytes_down -= b.gradient_bytes_down;
  a.gradient_bytes_up -= b.gradient_bytes_up;
  a.setup_bytes -= b.setup_bytes;
  return a;
}

Cluster::Cluster(const Partition& partition, SmoothedLoss sl)
    : master_shard_(partition.master_shard()), sl_(std::move(sl)), master_(partition.master) {
  if (partition.shards.empty()) throw ConfigError("cluster needs at least one machine");
  for (const auto& shard : partition.shards) {
    if (shard.cols() != master_shard_.cols()) throw ConfigError("shards disagree on the number of covariates");
    sizes_.push_back(shard.rows());
    total_rows_ += shard.rows();
  }
}

std::vector<double> Cluster::weights() const {
  const double M = static_cast<double>(machines());
  std::vector<double> w(machines(), 1.0 / M);
  if (aggregation_ == Aggregation::SizeWeighted)
    for (std::size_t m = 0; m < w.size(); ++m) w[m] = static_cast<double>(sizes_[m]) / static_cast<double>(total_rows_);
  return w;
}

GradientRound Cluster::gradient_round(const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != dim()) throw ConfigError("beta dimension does not match the cluster");
  auto grads = gather_gradients(beta);
  GradientRound out;
  out.mean_gradient = Vector::Zero(beta.size());
  if (aggregation_ == Aggregation::Unweighted) {
    for (const auto& g : grads) out.mean_gradient += g;
    out.mean_gradient /= static_cast<double>(machines());
  } else {
    const auto w = weights();
    for (std::size_t m = 0; m < grads.size(); ++m) out.mean_gradient += w[m] * grads[m];
  }
  out.master_gradient = std::move(grads[master_]);

  const std::size_t M = machines();
  const std::size_t vector_frame = wire::frame_bytes(8 * dim());
  out.delta.rounds = 1;
  out.delta.gradient_rounds = 1;
  out.delta.bytes_down = M * vector_frame;
  out.delta.bytes_up = M * vector_frame;
  out.delta.gradient_bytes_down = out.delta.bytes_down;
  out.delta.gradient_bytes_up = out.delta.bytes_up;
  ledger_ += out.delta;
  return out;
}

LossRound Cluster::loss_round(const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != dim()) throw ConfigError("beta dimension does not match the cluster");
  const auto losses = gather_losses(beta);
  LossRound out;
  if (aggregation_ == Aggregation::Unweighted) {
    for (double v : losses) out.mean_loss += v;
    out.mean_loss /= static_cast<double>(machines());
  } else {
    const auto w = weights();
    for (std::size_t m = 0; m < losses.size(); ++m) out.mean_loss += w[m] * losses[m];
  }
  out.master_loss = losses[master_];

  const std::size_t M = machines();
  out.delta.rounds = 1;
  out.delta.loss_rounds = 1;
  out.delta.bytes_down = M * wire::frame_bytes(8 * dim());
  out.delta.bytes_up = M * wire::frame_bytes(8);
  ledger_ += out.delta;
  return out;
}

InProcessCluster::InProcessCluster(Partition partition, SmoothedLoss sl, bool concurrent, ExecutionPolicy policy)
    : Cluster(partition, std::move(sl)), partition_(std::move(partition)), concurrent_(concurrent), policy_(policy) {
  for (const auto& shard : partition_.shards) add_setup_bytes(wire::frame_bytes(8 * wire::shard_payload_size(shard)));
}

std::vector<Vector> InProcessCluster::gather_gradients(const Vector& beta) {
  std::vector<Vector> out(machines());
  parallel_for(machines(), concurrent_ ? machines() : 1, [&](std::size_t m) {
    out[m] = local_gradient(partition_.shards[m], smoothed_loss(), beta, policy_);
  });
  return out;
}

std::vector<double> InProcessCluster::gather_losses(const Vector& beta) {
  std::vector<double> out(machines());
  parallel_for(machines(), concurrent_ ? machines() : 1, [&](std::size_t m) {
    out[m] = local_loss(partition_.shards[m], smoothed_loss(), beta, policy_).value;
  });
  return out;
}

NetworkCluster::NetworkCluster(const Partition& partition, SmoothedLoss sl, const std::vector<std::string>& endpoints,
                               std::chrono::milliseconds timeout)
    : Cluster(partition, std::move(sl)) {
  if (endpoints.size() != partition.shards.size())
    throw ConfigError(std::to_string(endpoints.size()) + " worker endpoints for " +
                      std::to_string(partition.shards.size()) + " machines");
  for (std::size_t m = 0; m < endpoints.size(); ++m) {
    const Shard& shard = partition.shards[m];
    machine_ids_.push_back(shard.machine_id());
    const auto [host, port] = wire::parse_endpoint(endpoints[m]);
    try {
      sockets_.push_back(wire::Socket::connect(host, port, timeout));
      const auto payload = wire::encode_doubles(wire::shard_payload(shard, smoothed_loss()));
      wire::write_frame(sockets_.back(), wire::Tag::LoadShard, payload);
      add_setup_bytes(wire::frame_bytes(payload.size()));
    } catch (const AggregationError&) {
      throw;
    } catch (const std::exception& e) {
      throw AggregationError(shard.machine_id(), e.what());
    }
  }
  for (std::size_t m = 0; m < sockets_.size(); ++m) {
    wire::Frame reply;
    try {
      if (!wire::read_frame(sockets_[m], reply)) throw Error("worker closed the connection");
      if (reply.tag == wire::Tag::Error) throw Error("worker error: " + wire::decode_text(reply.payload));
      if (reply.tag != wire::Tag::Result) throw ProtocolError("unexpected reply to LOAD_SHARD");
      const auto ack = wire::decode_doubles(reply.payload);
      if (ack.size() != 1 || ack[0] != static_cast<double>(shard_sizes()[m]))
        throw ProtocolError("LOAD_SHARD acknowledgement does not match shard size");
    } catch (const std::exception& e) {
      throw AggregationError(machine_ids_[m], e.what());
    }
  }
}

std::vector<std::vector<double>> NetworkCluster::round_trip(wire::Tag tag, const Vector& beta, std::size_t reply_size) {
  const auto payload = wire::encode_doubles({beta.data(), static_cast<std::size_t>(beta.size())});
  const auto frame = wire::encode_frame(tag, payload);
  for (std::size_t m = 0; m < sockets_.size(); ++m) {
    try {
      sockets_[m].send_all(frame);
    } catch (const std::exception& e) {
      throw AggregationError(machine_ids_[m], e.what());
    }
  }
  std::vector<std::vector<double>> replies(sockets_.size());
  for (std::size_t m = 0; m < sockets_.size(); ++m) {
    wire::Frame reply;
    try {
      if (!wire::read_frame(sockets_[m], reply)) throw Error("worker closed the connection");
      if (reply.tag == wire::Tag::Error) throw Error("worker error: " + wire::decode_text(reply.payload));
      if (reply.tag != wire::Tag::Result) throw ProtocolError("unexpected reply tag");
      replies[m] = wire::decode_doubles(reply.payload);
      if (replies[m].size() != reply_size)
        throw ProtocolError("reply has " + std::to_string(replies[m].size()) + " values, expected " +
                            std::to_string(reply_size));
    } catch (const std::exception& e) {
      throw AggregationError(machine_ids_[m], e.what());
    }
  }
  return replies;
}

std::vector<Vector> NetworkCluster::gather_gradients(const Vector& beta) {
  auto replies = round_trip(wire::Tag::EvalGrad, beta, dim());
  std::vector<Vector> out;
  out.reserve(replies.size());
  for (const auto& r : replies) out.push_back(Eigen::Map<const Vector>(r.data(), static_cast<Eigen::Index>(r.size())));
  return out;
}

std::vector<double> NetworkCluster::gather_losses(const Vector& beta) {
  auto replies = round_trip(wire::Tag::EvalLoss, beta, 1);
  std::vector<double> out;
  out.reserve(replies.size());
  for (const auto& r : replies) out.push_back(r[0]);
  return out;
}

}  // namespace dcrr
