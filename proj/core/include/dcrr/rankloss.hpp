#pragma once

#include <cstddef>
#include <span>

#include "dcrr/datagen.hpp"
#include "dcrr/parallel.hpp"
#include "dcrr/smoothing.hpp"

namespace dcrr {

struct PairwiseLossValue {
  double value = 0.0;       ///< average of L_h over ordered pairs i != j
  std::size_t n_pairs = 0;  ///< n(n-1)
};

// The pairwise losses only depend on beta through the residuals e = y - X beta:
// r_ij = e_i - e_j. Each unordered pair is visited once; evenness of L_h and
// oddness of L_h' give the mirrored contribution. Rows are cut into a block
// schedule that depends on n only, and block partials are combined in block
// order with compensated sums, so results are bit-identical for any thread count.

/// e = y - X beta, accumulating only the nonzero coordinates of beta.
Vector residuals(const Shard& shard, const Vector& beta);

/// Average of L_h(e_i - e_j) over ordered pairs.
double pairwise_loss(std::span<const double> e, const SmoothedLoss& sl, ExecutionPolicy policy = {});

/// Fills scores[i] = sum_{j != i} L_h'(e_i - e_j) and returns the pairwise loss.
double pairwise_loss_and_scores(std::span<const double> e, const SmoothedLoss& sl,
                                std::span<double> scores, ExecutionPolicy policy = {});

PairwiseLossValue local_loss(const Shard& shard, const SmoothedLoss& sl, const Vector& beta,
                             ExecutionPolicy policy = {});

/// -(1/(n(n-1))) sum_{i != j} L_h'(r_ij)(x_i - x_j), computed as -2/(n(n-1)) X^T scores.
Vector local_gradient(const Shard& shard, const SmoothedLoss& sl, const Vector& beta,
                      ExecutionPolicy policy = {});

/// Loss value and gradient from one residual pass.
double local_loss_and_gradient(const Shard& shard, const SmoothedLoss& sl, const Vector& beta,
                               Vector& gradient, ExecutionPolicy policy = {});

/// Centralized U-statistic over all N(N-1) ordered pairs of the pooled data,
/// including cross-shard pairs.
PairwiseLossValue global_loss(std::span<const Shard> shards, const SmoothedLoss& sl,
                              const Vector& beta, ExecutionPolicy policy = {});
Vector global_gradient(std::span<const Shard> shards, const SmoothedLoss& sl, const Vector& beta,
                       ExecutionPolicy policy = {});

}  // namespace dcrr
