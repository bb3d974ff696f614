#include "dcrr/rankloss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dcrr/errors.hpp"

namespace dcrr {

namespace {

// Neumaier's compensated summation.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const noexcept { return sum + comp; }
};

inline void compensated_add(double& sum, double& comp, double x) noexcept {
  const double t = sum + x;
  if (std::fabs(sum) >= std::fabs(x))
    comp += (sum - t) + x;
  else
    comp += (x - t) + sum;
  sum = t;
}

constexpr std::size_t kRowsPerBlock = 256;
constexpr std::size_t kMaxBlocks = 32;

/// Row boundaries with roughly equal numbers of unordered pairs per block.
std::vector<std::size_t> block_schedule(std::size_t n) {
  const std::size_t blocks = std::clamp<std::size_t>((n + kRowsPerBlock - 1) / kRowsPerBlock, 1, kMaxBlocks);
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  std::vector<std::size_t> bounds{0};
  double cumulative = 0.0;
  std::size_t next = 1;
  for (std::size_t i = 0; i < n && next < blocks; ++i) {
    cumulative += static_cast<double>(n - 1 - i);
    if (cumulative >= total * static_cast<double>(next) / static_cast<double>(blocks)) {
      bounds.push_back(i + 1);
      ++next;
    }
  }
  if (bounds.back() != n) bounds.push_back(n);
  return bounds;
}

struct BlockPartial {
  CompensatedSum loss;
  std::vector<double> sum;
  std::vector<double> comp;
};

template <typename K, bool WithLoss, bool WithScores>
void run_block(std::span<const double> e, double h, std::size_t begin, std::size_t end, BlockPartial& out) {
  const std::size_t n = e.size();
  if constexpr (WithScores) {
    out.sum.assign(n, 0.0);
    out.comp.assign(n, 0.0);
  }
  double* sum = WithScores ? out.sum.data() : nullptr;
  double* comp = WithScores ? out.comp.data() : nullptr;
  for (std::size_t i = begin; i < end; ++i) {
    const double ei = e[i];
    CompensatedSum row;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = ei - e[j];
      if constexpr (WithLoss) out.loss.add(SmoothedLoss::loss_at<K>(d, h));
      if constexpr (WithScores) {
        const double w = SmoothedLoss::dloss_at<K>(d, h);
        row.add(w);
        compensated_add(sum[j], comp[j], -w);
      }
    }
    if constexpr (WithScores) compensated_add(sum[i], comp[i], row.value());
  }
}

template <bool WithLoss, bool WithScores>
double evaluate(std::span<const double> e, const SmoothedLoss& sl, std::span<double> scores,
                ExecutionPolicy policy) {
  const std::size_t n = e.size();
  if (n < 2) throw ConfigError("pairwise loss needs at least two observations");
  const auto bounds = block_schedule(n);
  const std::size_t blocks = bounds.size() - 1;
  std::vector<BlockPartial> partials(blocks);
  const double h = sl.bandwidth();
  sl.visit([&](auto kernel) {
    using K = decltype(kernel);
    parallel_for(blocks, policy.threads, [&](std::size_t b) {
      run_block<K, WithLoss, WithScores>(e, h, bounds[b], bounds[b + 1], partials[b]);
    });
  });

  if constexpr (WithScores) {
    for (std::size_t i = 0; i < n; ++i) {
      CompensatedSum total;
      for (const auto& part : partials) total.add(part.sum[i] + part.comp[i]);
      scores[i] = total.value();
    }
  }
  if constexpr (WithLoss) {
    CompensatedSum total;
    for (const auto& part : partials) total.add(part.loss.value());
    return 2.0 * total.value() / (static_cast<double>(n) * static_cast<double>(n - 1));
  }
  return 0.0;
}

void check_dims(const Shard& shard, const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != shard.cols())
    throw ConfigError("coefficient dimension " + std::to_string(beta.size()) +
                      " does not match shard dimension " + std::to_string(shard.cols()));
}

}  // namespace

Vector residuals(const Shard& shard, const Vector& beta) {
  check_dims(shard, beta);
  Vector e = shard.y();
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) e.noalias() -= beta[j] * shard.X().col(j);
  return e;
}

double pairwise_loss(std::span<const double> e, const SmoothedLoss& sl, ExecutionPolicy policy) {
  return evaluate<true, false>(e, sl, {}, policy);
}

double pairwise_loss_and_scores(std::span<const double> e, const SmoothedLoss& sl,
                                std::span<double> scores, ExecutionPolicy policy) {
  if (scores.size() != e.size()) throw ConfigError("scores buffer has the wrong length");
  return evaluate<true, true>(e, sl, scores, policy);
}

PairwiseLossValue local_loss(const Shard& shard, const SmoothedLoss& sl, const Vector& beta,
                             ExecutionPolicy policy) {
  const Vector e = residuals(shard, beta);
  const std::size_t n = shard.rows();
  return {pairwise_loss({e.data(), n}, sl, policy), n * (n - 1)};
}

double local_loss_and_gradient(const Shard& shard, const SmoothedLoss& sl, const Vector& beta,
                               Vector& gradient, ExecutionPolicy policy) {
  const Vector e = residuals(shard, beta);
  const std::size_t n = shard.rows();
  Vector scores(static_cast<Eigen::Index>(n));
  const double value = pairwise_loss_and_scores({e.data(), n}, sl, {scores.data(), n}, policy);
  const double scale = -2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  gradient.noalias() = shard.X().transpose() * scores;
  gradient *= scale;
  return value;
}

Vector local_gradient(const Shard& shard, const SmoothedLoss& sl, const Vector& beta,
                      ExecutionPolicy policy) {
  Vector gradient(beta.size());
  local_loss_and_gradient(shard, sl, beta, gradient, policy);
  return gradient;
}

PairwiseLossValue global_loss(std::span<const Shard> shards, const SmoothedLoss& sl,
                              const Vector& beta, ExecutionPolicy policy) {
  return local_loss(pool(shards), sl, beta, policy);
}

Vector global_gradient(std::span<const Shard> shards, const SmoothedLoss& sl, const Vector& beta,
                       ExecutionPolicy policy) {
  return local_gradient(pool(shards), sl, beta, policy);
}

}  // namespace dcrr
