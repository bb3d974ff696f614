#include "dcrr/estimator.hpp"

#include <functional>
#include <string>

#include "dcrr/errors.hpp"
#include "dcrr/rankloss.hpp"

namespace dcrr {

void DcrrConfig::validate() const {
  if (k1 < 1) throw ConfigError("k1 must be at least 1");
  if (T < 1) throw ConfigError("T must be at least 1");
  penalty.validate();
  if (lambda_l1 && !(*lambda_l1 >= 0.0)) throw ConfigError("lambda_l1 must be nonnegative");
  if (lambda_folded && !(*lambda_folded >= 0.0)) throw ConfigError("lambda for folded stages must be nonnegative");
  solver.validate();
  grid.validate();
  if (criterion) criterion->validate();
}

namespace {

// One staged fit shares an objective, a criterion and a report; the caller
// supplies corrections (communication lives outside).
struct Engine {
  std::shared_ptr<const SmoothObjective> objective;
  std::function<double(const Vector&)> criterion_loss;
  std::size_t criterion_n = 0;
  InfoCriterionConfig criterion;
  const DcrrConfig& config;
  FitReport& report;

  std::size_t dim() const { return objective->dim(); }

  Vector solve_stage(const Vector& correction, const std::function<Vector(double)>& weights,
                     std::optional<double> fixed_lambda, std::span<const double> grid, const Vector& warm,
                     StageRecord record) {
    CompositeProblem problem{objective, correction, Vector::Zero(static_cast<Index>(dim()))};
    auto run = [&](double lambda, const Vector& start) {
      problem.weights = weights(lambda);
      SolveResult r = solve(problem, config.solver, start);
      report.solver_iterations += r.iterations;
      return r;
    };

    SolveResult chosen;
    if (fixed_lambda) {
      chosen = run(*fixed_lambda, warm);
      record.lambda = *fixed_lambda;
    } else {
      std::vector<SolveResult> results;
      Vector start = warm;
      const Selection selection = select_lambda(
          grid,
          [&](double lambda) {
            results.push_back(run(lambda, start));
            start = results.back().beta;
            return Candidate{results.back().beta, criterion_loss(results.back().beta)};
          },
          criterion_n, dim(), criterion);
      chosen = std::move(results[selection.index]);
      record.lambda = selection.lambda;
      record.grid_points = results.size();
    }
    record.objective = chosen.objective;
    record.support = support_size(chosen.beta);
    record.solver_iterations = chosen.iterations;
    record.converged = chosen.converged;
    report.converged = report.converged && chosen.converged;
    report.trace.push_back(record);
    return std::move(chosen.beta);
  }

  Vector l1_weights(double lambda) const { return Vector::Constant(static_cast<Index>(dim()), lambda); }
};

std::vector<double> grid_for(const SmoothObjective& objective, const GridSpec& spec) {
  Vector g;
  objective.value_and_gradient(Vector::Zero(static_cast<Index>(objective.dim())), g);
  double lambda_max = g.lpNorm<Eigen::Infinity>();
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) lambda_max = 1.0;
  return lambda_grid(lambda_max, spec);
}

// Lasso then folded stages on a single data set with no correction.
FitReport fit_local_staged(const Shard& shard, const SmoothedLoss& sl, const DcrrConfig& config,
                           const InfoCriterionConfig& criterion, ExecutionPolicy policy) {
  config.validate();
  FitReport report;
  auto objective = std::make_shared<const PairwiseObjective>(shard, sl, policy);
  Engine engine{objective, [&](const Vector& b) { return objective->value(b); }, shard.rows(), criterion, config,
                report};
  const auto grid = grid_for(*objective, config.grid);
  const Index p = static_cast<Index>(shard.cols());
  const Vector zero = Vector::Zero(p);

  report.initial = zero;
  Vector beta = engine.solve_stage(zero, [&](double l) { return engine.l1_weights(l); }, config.lambda_l1, grid, zero,
                                   StageRecord{.stage = 1, .iteration = 1});
  report.stage_lambdas.push_back(report.trace.back().lambda);
  report.stage_estimates.push_back(beta);
  for (std::size_t t = 2; t <= config.T; ++t) {
    const Vector prev = beta;
    beta = engine.solve_stage(
        zero, [&](double l) { return lla_weights(config.penalty.with_lambda(l), prev); }, config.lambda_folded, grid,
        prev, StageRecord{.stage = t});
    report.stage_lambdas.push_back(report.trace.back().lambda);
    report.stage_estimates.push_back(beta);
  }
  report.beta_hat = beta;
  report.support = support_of(beta);
  return report;
}

}  // namespace

DcrrEstimator::DcrrEstimator(Cluster& cluster, DcrrConfig config, ExecutionPolicy policy)
    : cluster_(cluster), config_(std::move(config)), policy_(policy) {
  config_.validate();
  criterion_ = config_.criterion.value_or(InfoCriterionConfig::defaults(cluster_.total_rows(), cluster_.master_shard().rows()));
  criterion_.validate();
  fit_start_ = cluster_.ledger();
  master_objective_ = std::make_shared<const PairwiseObjective>(cluster_.master_shard(), cluster_.smoothed_loss(), policy_);
  for (Index j : config_.oracle_support)
    if (j >= cluster_.dim()) throw ConfigError("oracle support index out of range");
}

const std::vector<double>& DcrrEstimator::grid() {
  if (grid_.empty()) grid_ = grid_for(*master_objective_, config_.grid);
  return grid_;
}

Vector DcrrEstimator::surrogate_correction(const Vector& beta0) {
  if (!beta0.allFinite()) throw DomainError("centering point is not finite");
  GradientRound round = cluster_.gradient_round(beta0);
  return round.master_gradient - round.mean_gradient;
}

Vector DcrrEstimator::initial_fit() {
  Engine engine{master_objective_, [&](const Vector& b) { return master_objective_->value(b); },
                cluster_.master_shard().rows(), criterion_, config_, report_};
  const Vector zero = Vector::Zero(static_cast<Index>(cluster_.dim()));
  Vector beta = engine.solve_stage(zero, [&](double l) { return engine.l1_weights(l); }, config_.lambda_l1, grid(), zero,
                                   StageRecord{.stage = 0});
  report_.initial = beta;
  return beta;
}

// The machine-averaged loss carries information from all N rows, so DHBIC
// penalizes on the log(p) / N scale; the master-only initial fit uses its own n.
std::vector<Vector> DcrrEstimator::fit_l1_stage(const Vector& init) {
  Engine engine{master_objective_, [&](const Vector& b) { return cluster_.loss_round(b).mean_loss; },
                cluster_.total_rows(), criterion_, config_, report_};
  std::vector<Vector> iterates;
  Vector center = init;
  std::optional<double> lambda = config_.lambda_l1;
  for (std::size_t k = 1; k <= config_.k1; ++k) {
    const Vector c = surrogate_correction(center);
    center = engine.solve_stage(c, [&](double l) { return engine.l1_weights(l); }, lambda, grid(), center,
                                StageRecord{.stage = 1, .iteration = k});
    if (k == 1) {
      lambda = report_.trace.back().lambda;
      if (config_.lambda_l1) report_.trace.back().grid_points = 0;
    } else {
      report_.trace.back().grid_points = 0;
    }
    iterates.push_back(center);
  }
  stage1_lambda_ = lambda;
  report_.stage_ledgers.push_back(cluster_.ledger() - fit_start_);
  return iterates;
}

std::vector<Vector> DcrrEstimator::fit_folded_stages(const Vector& beta_stage1) {
  Engine engine{master_objective_, [&](const Vector& b) { return cluster_.loss_round(b).mean_loss; },
                cluster_.total_rows(), criterion_, config_, report_};
  std::vector<Vector> stages;
  Vector prev = beta_stage1;
  Vector oracle_prev = Vector::Zero(static_cast<Index>(cluster_.dim()));
  for (std::size_t t = 2; t <= config_.T; ++t) {
    const Vector c = surrogate_correction(prev);
    Vector beta = engine.solve_stage(
        c, [&](double l) { return lla_weights(config_.penalty.with_lambda(l), prev); }, config_.lambda_folded, grid(),
        prev, StageRecord{.stage = t});
    report_.stage_lambdas.push_back(report_.trace.back().lambda);
    if (!config_.oracle_support.empty()) {
      CompositeProblem problem{master_objective_, c, Vector::Zero(static_cast<Index>(cluster_.dim()))};
      SolveResult oracle = solve_restricted(problem, config_.oracle_support, config_.solver, oracle_prev);
      report_.solver_iterations += oracle.iterations;
      oracle_prev = oracle.beta;
      report_.oracle_estimates.push_back(std::move(oracle.beta));
    }
    report_.stage_ledgers.push_back(cluster_.ledger() - fit_start_);
    stages.push_back(beta);
    prev = std::move(beta);
  }
  return stages;
}

Vector DcrrEstimator::fit_oracle(const Vector& beta_prev, std::span<const Index> support) {
  const Vector c = surrogate_correction(beta_prev);
  CompositeProblem problem{master_objective_, c, Vector::Zero(static_cast<Index>(cluster_.dim()))};
  SolveResult r = solve_restricted(problem, support, config_.solver);
  report_.solver_iterations += r.iterations;
  return std::move(r.beta);
}

FitReport DcrrEstimator::fit() {
  report_ = FitReport{};
  fit_start_ = cluster_.ledger();
  const Vector init = initial_fit();
  auto l1 = fit_l1_stage(init);
  report_.stage_lambdas.push_back(*stage1_lambda_);
  report_.stage_estimates.push_back(l1.back());
  for (auto& beta : fit_folded_stages(l1.back())) report_.stage_estimates.push_back(std::move(beta));
  report_.beta_hat = report_.stage_estimates.back();
  report_.support = support_of(report_.beta_hat);
  report_.ledger = cluster_.ledger() - fit_start_;
  return std::move(report_);
}

FitReport fit_centralized(const Shard& pooled, const SmoothedLoss& sl, const DcrrConfig& config,
                          ExecutionPolicy policy) {
  const auto criterion = config.criterion.value_or(InfoCriterionConfig::defaults(pooled.rows(), pooled.rows()));
  return fit_local_staged(pooled, sl, config, criterion, policy);
}

SolveResult fit_centralized_oracle(const Shard& pooled, const SmoothedLoss& sl, std::span<const Index> support,
                                   const SolverConfig& solver, ExecutionPolicy policy) {
  const Index p = static_cast<Index>(pooled.cols());
  CompositeProblem problem{std::make_shared<const PairwiseObjective>(pooled, sl, policy), Vector::Zero(p),
                           Vector::Zero(p)};
  return solve_restricted(problem, support, solver);
}

DivideAndConquerFit fit_divide_and_conquer(std::span<const Shard> shards, const SmoothedLoss& sl,
                                           const DcrrConfig& config, ExecutionPolicy policy) {
  if (shards.empty()) throw ConfigError("divide-and-conquer needs at least one shard");
  const Index p = static_cast<Index>(shards.front().cols());
  DivideAndConquerFit out;
  out.average = Vector::Zero(p);
  std::vector<std::size_t> votes(static_cast<std::size_t>(p), 0);
  std::size_t N = 0;
  for (const Shard& shard : shards) N += shard.rows();
  for (const Shard& shard : shards) {
    if (static_cast<Index>(shard.cols()) != p) throw ConfigError("shards disagree on the number of covariates");
    // Local HBIC keeps C_N from the pooled size; only the loss and n are local.
    const auto criterion = config.criterion.value_or(InfoCriterionConfig::defaults(N, shard.rows()));
    out.local.push_back(fit_local_staged(shard, sl, config, criterion, policy));
    const Vector& b = out.local.back().beta_hat;
    out.average += b;
    for (Index j = 0; j < p; ++j) votes[static_cast<std::size_t>(j)] += b[j] != 0.0;
  }
  out.average /= static_cast<double>(shards.size());
  out.majority = out.average;
  for (Index j = 0; j < p; ++j)
    if (2 * votes[static_cast<std::size_t>(j)] <= shards.size()) out.majority[j] = 0.0;
  return out;
}

}  // namespace dcrr
