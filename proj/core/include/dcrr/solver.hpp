#pragma once

#include <cstddef>
#include <memory>
#include <span>

#include "dcrr/datagen.hpp"
#include "dcrr/parallel.hpp"
#include "dcrr/smoothing.hpp"

namespace dcrr {

/// Smooth convex part S of a composite objective.
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vector& beta) const = 0;
  virtual double value_and_gradient(const Vector& beta, Vector& gradient) const = 0;
};

/// Local pairwise U-statistic loss of one shard.
class PairwiseObjective final : public SmoothObjective {
 public:
  PairwiseObjective(Shard shard, SmoothedLoss sl, ExecutionPolicy policy = {});

  std::size_t dim() const override { return shard_.cols(); }
  double value(const Vector& beta) const override;
  double value_and_gradient(const Vector& beta, Vector& gradient) const override;

  const Shard& shard() const noexcept { return shard_; }
  const SmoothedLoss& smoothed_loss() const noexcept { return sl_; }

 private:
  Shard shard_;
  SmoothedLoss sl_;
  ExecutionPolicy policy_;
};

/// S(beta) = 0.5 (beta - center)^T H (beta - center). Used to check the solver
/// against closed-form minimizers.
class QuadraticObjective final : public SmoothObjective {
 public:
  QuadraticObjective(Matrix hessian, Vector center);

  std::size_t dim() const override { return static_cast<std::size_t>(center_.size()); }
  double value(const Vector& beta) const override;
  double value_and_gradient(const Vector& beta, Vector& gradient) const override;

 private:
  Matrix hessian_;
  Vector center_;
};

/// F(beta) = S(beta) - <beta, c> + sum_j w_j |beta_j|.
struct CompositeProblem {
  std::shared_ptr<const SmoothObjective> smooth;
  Vector correction;  ///< c
  Vector weights;     ///< w >= 0

  std::size_t dim() const { return smooth->dim(); }
  /// Throws ConfigError on dimension mismatch or negative / non-finite weights.
  void validate() const;
};

struct SolverConfig {
  std::size_t max_iter = 2000;
  double tol = 1e-8;          ///< relative objective change
  double kkt_tol = 1e-6;      ///< scaled by (1 + ||c||_inf)
  double backtrack = 0.5;     ///< step shrink factor in (0, 1)
  double initial_step = 1.0;

  void validate() const;
};

struct SolveResult {
  Vector beta;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double kkt_residual = 0.0;
};

/// Accelerated proximal gradient (FISTA) with backtracking and restart on
/// objective increase. The proximal map soft-thresholds by step * w_j; a value
/// exactly on the threshold maps to zero.
SolveResult solve(const CompositeProblem& problem, const SolverConfig& config, const Vector& warm_start);

/// Minimizes S(beta) - <beta, c> over beta with beta_j = 0 off `support`;
/// weights are ignored. An empty warm start means zero.
SolveResult solve_restricted(const CompositeProblem& problem, std::span<const Index> support,
                             const SolverConfig& config, const Vector& warm_start = {});

/// Full composite objective value.
double composite_objective(const CompositeProblem& problem, const Vector& beta);

/// Largest KKT violation given the smooth gradient at beta.
double kkt_residual(const CompositeProblem& problem, const Vector& beta, const Vector& smooth_gradient);

}  // namespace dcrr
