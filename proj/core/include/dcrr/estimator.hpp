#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dcrr/cluster.hpp"
#include "dcrr/datagen.hpp"
#include "dcrr/penalty.hpp"
#include "dcrr/selection.hpp"
#include "dcrr/smoothing.hpp"
#include "dcrr/solver.hpp"

namespace dcrr {

struct DcrrConfig {
  std::size_t k1 = 8;  ///< l1-stage iterations
  std::size_t T = 2;   ///< total stages; stages 2..T use the folded-concave penalty
  PenaltySpec penalty = PenaltySpec::scad(0.0);  ///< family for stages >= 2; lambda is set per stage
  std::optional<double> lambda_l1;      ///< fixed stage-1 lambda instead of criterion search
  std::optional<double> lambda_folded;  ///< fixed lambda for stages >= 2
  SolverConfig solver;
  GridSpec grid;
  std::optional<InfoCriterionConfig> criterion;  ///< defaults depend on the fit type
  std::vector<Index> oracle_support;             ///< when set, oracle fits run alongside stages >= 2

  void validate() const;
};

struct StageRecord {
  std::size_t stage = 0;      ///< 0 initial fit, 1 l1 stage, t >= 2 folded stages
  std::size_t iteration = 0;  ///< within the l1 stage, 1-based
  double lambda = 0.0;
  double objective = 0.0;
  std::size_t support = 0;
  std::size_t solver_iterations = 0;  ///< of the returned solve
  std::size_t grid_points = 0;        ///< lambdas evaluated (0 when lambda was reused or fixed)
  bool converged = false;
};

struct FitReport {
  Vector beta_hat;
  std::vector<Index> support;
  Vector initial;
  std::vector<Vector> stage_estimates;   ///< [t - 1] is the estimate after stage t (stage 1 = last l1 iterate)
  std::vector<Vector> oracle_estimates;  ///< [t - 2] is the oracle fit at stage t
  std::vector<double> stage_lambdas;     ///< [t - 1]
  std::vector<CommLedger> stage_ledgers; ///< [t - 1] is the communication used through stage t
  std::vector<StageRecord> trace;
  CommLedger ledger;
  std::size_t solver_iterations = 0;  ///< total over every solve, grid searches included
  bool converged = true;              ///< every returned solve met its tolerance

  const Vector& stage(std::size_t t) const { return stage_estimates.at(t - 1); }
  const Vector& oracle(std::size_t t) const { return oracle_estimates.at(t - 2); }
};

/// Distributed fit over a cluster. The master solves surrogate problems
///   L_1(beta) - <beta, c(center)> + sum_j w_j |beta_j|,
///   c(center) = grad L_1(center) - (1/M) sum_m grad L_m(center),
/// re-centering after every solve. Each re-centering costs one gradient round;
/// each lambda visited by the criterion search costs one loss round. The
/// criterion is DHBIC on the machine-averaged loss with n = N.
class DcrrEstimator {
 public:
  DcrrEstimator(Cluster& cluster, DcrrConfig config, ExecutionPolicy policy = {});

  /// One gradient round.
  Vector surrogate_correction(const Vector& beta0);

  /// Lasso on the master shard alone, tuned by HBIC. No communication.
  Vector initial_fit();

  /// k1 surrogate solves; the first selects lambda, the rest reuse it.
  std::vector<Vector> fit_l1_stage(const Vector& init);

  /// Stages 2..T with LLA weights from the previous stage.
  std::vector<Vector> fit_folded_stages(const Vector& beta_stage1);

  /// Restricted surrogate fit centered at beta_prev (one gradient round).
  Vector fit_oracle(const Vector& beta_prev, std::span<const Index> support);

  /// initial_fit, fit_l1_stage, fit_folded_stages.
  FitReport fit();

  const std::vector<double>& grid();
  const InfoCriterionConfig& criterion() const noexcept { return criterion_; }

 private:
  Cluster& cluster_;
  DcrrConfig config_;
  ExecutionPolicy policy_;
  InfoCriterionConfig criterion_;
  std::shared_ptr<const PairwiseObjective> master_objective_;
  std::vector<double> grid_;
  std::optional<double> stage1_lambda_;
  CommLedger fit_start_;
  FitReport report_;
};

/// Same staged routine on pooled data with no correction, tuned by HBIC with
/// n = N. k1 is treated as 1 since re-centering changes nothing.
FitReport fit_centralized(const Shard& pooled, const SmoothedLoss& sl, const DcrrConfig& config,
                          ExecutionPolicy policy = {});

/// Unpenalized fit on pooled data restricted to `support`.
SolveResult fit_centralized_oracle(const Shard& pooled, const SmoothedLoss& sl, std::span<const Index> support,
                                   const SolverConfig& solver, ExecutionPolicy policy = {});

struct DivideAndConquerFit {
  Vector average;   ///< coordinatewise mean of local estimates; its support is the union
  Vector majority;  ///< average zeroed where at most half of the local estimates are nonzero
  std::vector<FitReport> local;
};

/// Every shard fits its own staged estimator (lasso, then folded stages when
/// T >= 2) tuned by local HBIC (local loss and n, C_N from the pooled size);
/// no correction, no communication.
DivideAndConquerFit fit_divide_and_conquer(std::span<const Shard> shards, const SmoothedLoss& sl,
                                           const DcrrConfig& config, ExecutionPolicy policy = {});

}  // namespace dcrr
