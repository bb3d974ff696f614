#include "dcrr/solver.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dcrr/errors.hpp"
#include "dcrr/rankloss.hpp"

namespace dcrr {

PairwiseObjective::PairwiseObjective(Shard shard, SmoothedLoss sl, ExecutionPolicy policy)
    : shard_(std::move(shard)), sl_(sl), policy_(policy) {}

double PairwiseObjective::value(const Vector& beta) const {
  return local_loss(shard_, sl_, beta, policy_).value;
}

double PairwiseObjective::value_and_gradient(const Vector& beta, Vector& gradient) const {
  return local_loss_and_gradient(shard_, sl_, beta, gradient, policy_);
}

QuadraticObjective::QuadraticObjective(Matrix hessian, Vector center)
    : hessian_(std::move(hessian)), center_(std::move(center)) {
  if (hessian_.rows() != center_.size() || hessian_.cols() != center_.size())
    throw ConfigError("quadratic objective: Hessian and center dimensions differ");
}

double QuadraticObjective::value(const Vector& beta) const {
  const Vector d = beta - center_;
  return 0.5 * d.dot(hessian_ * d);
}

double QuadraticObjective::value_and_gradient(const Vector& beta, Vector& gradient) const {
  const Vector d = beta - center_;
  gradient.noalias() = hessian_ * d;
  return 0.5 * d.dot(gradient);
}

void CompositeProblem::validate() const {
  if (!smooth) throw ConfigError("composite problem has no smooth part");
  const auto p = static_cast<Eigen::Index>(smooth->dim());
  if (correction.size() != p) throw ConfigError("correction vector has the wrong dimension");
  if (weights.size() != p) throw ConfigError("weight vector has the wrong dimension");
  if (!correction.allFinite()) throw ConfigError("correction vector is not finite");
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(weights[j] >= 0.0) || !std::isfinite(weights[j]))
      throw ConfigError("penalty weights must be finite and nonnegative");
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("solver tol must be positive");
  if (!(kkt_tol > 0.0)) throw ConfigError("solver kkt_tol must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtracking factor must lie in (0, 1)");
  if (!(initial_step > 0.0)) throw ConfigError("initial step must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
}

namespace {

double penalty_value(const Vector& weights, const Vector& beta) {
  return weights.cwiseProduct(beta.cwiseAbs()).sum();
}

double kkt_masked(const Vector& beta, const Vector& grad, const Vector& weights,
                  const std::vector<char>& active) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (!active[static_cast<std::size_t>(j)]) continue;
    double r;
    if (beta[j] != 0.0)
      r = std::fabs(grad[j] + weights[j] * (beta[j] > 0.0 ? 1.0 : -1.0));
    else
      r = std::max(0.0, std::fabs(grad[j]) - weights[j]);
    worst = std::max(worst, r);
  }
  return worst;
}

SolveResult fista(const CompositeProblem& problem, const Vector& weights, const std::vector<char>& active,
                  const SolverConfig& config, const Vector& start) {
  const auto p = static_cast<Eigen::Index>(problem.dim());
  const Vector& c = problem.correction;
  const double kkt_abs = config.kkt_tol * (1.0 + (p > 0 ? c.cwiseAbs().maxCoeff() : 0.0));

  // f(beta) = S(beta) - <beta, c>; its gradient is zeroed on pinned coordinates.
  auto eval = [&](const Vector& b, Vector& g) {
    double f = problem.smooth->value_and_gradient(b, g) - c.dot(b);
    g -= c;
    for (Eigen::Index j = 0; j < p; ++j)
      if (!active[static_cast<std::size_t>(j)]) g[j] = 0.0;
    if (!std::isfinite(f)) throw NumericError("solver: objective is not finite");
    return f;
  };

  Vector x = start;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!active[static_cast<std::size_t>(j)]) x[j] = 0.0;

  Vector gx(p), gy(p), gz(p), z(p), xprev(p);
  double fx = eval(x, gx);
  double Fx = fx + penalty_value(weights, x);

  SolveResult result;
  double kkt = kkt_masked(x, gx, weights, active);
  if (kkt <= kkt_abs) {
    result.beta = x;
    result.converged = true;
    result.objective = Fx;
    result.kkt_residual = kkt;
    return result;
  }

  Vector y = x;
  double fy = fx;
  gy = gx;
  bool at_x = true;
  double t = 1.0;
  double step = config.initial_step;
  const double slack_scale = 4.0 * std::numeric_limits<double>::epsilon();

  std::size_t k = 0;
  while (k < config.max_iter) {
    ++k;
    double fz;
    while (true) {
      for (Eigen::Index j = 0; j < p; ++j) {
        if (!active[static_cast<std::size_t>(j)]) {
          z[j] = 0.0;
          continue;
        }
        const double u = y[j] - step * gy[j];
        const double thr = step * weights[j];
        // |u| == thr maps to zero.
        z[j] = std::fabs(u) > thr ? u - std::copysign(thr, u) : 0.0;
      }
      fz = eval(z, gz);
      const Vector d = z - y;
      const double bound = fy + gy.dot(d) + d.squaredNorm() / (2.0 * step);
      if (fz <= bound + slack_scale * (1.0 + std::fabs(fy))) break;
      step *= config.backtrack;
      if (step < 1e-300) throw NumericError("solver: line search step underflow");
    }
    const double Fz = fz + penalty_value(weights, z);

    if (Fz > Fx && !at_x) {
      y = x;
      fy = fx;
      gy = gx;
      t = 1.0;
      at_x = true;
      continue;
    }

    xprev = x;
    const double Fprev = Fx;
    x = z;
    fx = fz;
    gx = gz;
    Fx = Fz;

    kkt = kkt_masked(x, gx, weights, active);
    const double change = std::fabs(Fprev - Fx);
    if (kkt <= kkt_abs && change <= config.tol * std::max(1.0, std::fabs(Fx))) {
      result.converged = true;
      break;
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    t = t_next;
    if (momentum == 0.0) {
      y = x;
      fy = fx;
      gy = gx;
      at_x = true;
    } else {
      y = x + momentum * (x - xprev);
      for (Eigen::Index j = 0; j < p; ++j)
        if (!active[static_cast<std::size_t>(j)]) y[j] = 0.0;
      fy = eval(y, gy);
      at_x = false;
    }
  }

  result.beta = x;
  result.iterations = k;
  result.objective = Fx;
  result.kkt_residual = kkt;
  return result;
}

Vector start_or_zero(const Vector& warm_start, Eigen::Index p) {
  if (warm_start.size() == 0) return Vector::Zero(p);
  if (warm_start.size() != p) throw ConfigError("warm start has the wrong dimension");
  if (!warm_start.allFinite()) throw ConfigError("warm start is not finite");
  return warm_start;
}

}  // namespace

SolveResult solve(const CompositeProblem& problem, const SolverConfig& config, const Vector& warm_start) {
  problem.validate();
  config.validate();
  const auto p = static_cast<Eigen::Index>(problem.dim());
  std::vector<char> active(static_cast<std::size_t>(p), 1);
  return fista(problem, problem.weights, active, config, start_or_zero(warm_start, p));
}

SolveResult solve_restricted(const CompositeProblem& problem, std::span<const Index> support,
                             const SolverConfig& config, const Vector& warm_start) {
  problem.validate();
  config.validate();
  if (support.empty()) throw ConfigError("restricted solve needs a nonempty support");
  const auto p = static_cast<Eigen::Index>(problem.dim());
  std::vector<char> active(static_cast<std::size_t>(p), 0);
  for (auto j : support) {
    if (j >= static_cast<Index>(p)) throw ConfigError("support index " + std::to_string(j) + " out of range");
    active[j] = 1;
  }
  return fista(problem, Vector::Zero(p), active, config, start_or_zero(warm_start, p));
}

double composite_objective(const CompositeProblem& problem, const Vector& beta) {
  return problem.smooth->value(beta) - problem.correction.dot(beta) + penalty_value(problem.weights, beta);
}

double kkt_residual(const CompositeProblem& problem, const Vector& beta, const Vector& smooth_gradient) {
  const Vector g = smooth_gradient - problem.correction;
  std::vector<char> active(static_cast<std::size_t>(beta.size()), 1);
  return kkt_masked(beta, g, problem.weights, active);
}

}  // namespace dcrr
