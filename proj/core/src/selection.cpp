#include "dcrr/selection.hpp"

#include <cmath>
#include <string>

#include "dcrr/errors.hpp"

namespace dcrr {

void InfoCriterionConfig::validate() const {
  if (!(C_N > 0.0) || !std::isfinite(C_N)) throw ConfigError("C_N must be positive and finite");
  if (K_N < 1) throw ConfigError("K_N must be at least 1");
}

InfoCriterionConfig InfoCriterionConfig::defaults(std::size_t N, std::size_t n) {
  InfoCriterionConfig config;
  const double loglog = N > 1 ? std::log(std::log(static_cast<double>(N))) : 0.0;
  config.C_N = std::max(1.0, std::isfinite(loglog) ? loglog : 0.0);
  config.K_N = std::max<std::size_t>(1, std::min<std::size_t>(n / 2, 50));
  return config;
}

std::size_t support_size(const Vector& beta) {
  std::size_t count = 0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) count += beta[j] != 0.0;
  return count;
}

std::vector<Index> support_of(const Vector& beta) {
  std::vector<Index> out;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) out.push_back(static_cast<Index>(j));
  return out;
}

double dhbic(const Vector& beta_hat, double mean_loss, std::size_t n, std::size_t p, const InfoCriterionConfig& config) {
  config.validate();
  if (n == 0 || p == 0) throw ConfigError("criterion needs n > 0 and p > 0");
  if (!std::isfinite(mean_loss) || mean_loss < 0.0) throw DomainError("mean loss must be finite and non-negative");
  if (mean_loss == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(mean_loss) +
         static_cast<double>(support_size(beta_hat)) * config.C_N * std::log(static_cast<double>(p)) / static_cast<double>(n);
}

void GridSpec::validate() const {
  if (count < 1) throw ConfigError("grid needs at least one point");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw ConfigError("grid min_ratio must lie in (0, 1]");
}

std::vector<double> lambda_grid(double lambda_max, const GridSpec& spec) {
  spec.validate();
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) throw ConfigError("lambda_max must be positive and finite");
  std::vector<double> grid(spec.count);
  if (spec.count == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double step = std::log(spec.min_ratio) / static_cast<double>(spec.count - 1);
  for (std::size_t k = 0; k < spec.count; ++k) grid[k] = lambda_max * std::exp(step * static_cast<double>(k));
  return grid;
}

Selection select_lambda(std::span<const double> grid, const std::function<Candidate(double)>& fit, std::size_t n,
                        std::size_t p, const InfoCriterionConfig& config, bool stop_at_inadmissible) {
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  config.validate();
  Selection out;
  bool found = false;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Candidate candidate = fit(grid[k]);
    GridPoint point{grid[k], support_size(candidate.beta)};
    if (point.support > config.K_N) {
      out.evaluated.push_back(point);
      if (stop_at_inadmissible) break;
      continue;
    }
    point.criterion = dhbic(candidate.beta, candidate.mean_loss, n, p, config);
    out.evaluated.push_back(point);
    const bool better = !found || point.criterion < out.criterion - 1e-10 * std::max(1.0, std::abs(out.criterion));
    if (better) {
      found = true;
      out.index = k;
      out.lambda = grid[k];
      out.criterion = point.criterion;
      out.best = std::move(candidate);
    }
    if (point.criterion == -std::numeric_limits<double>::infinity()) break;
  }
  if (!found)
    throw SelectionError("no lambda on the grid gave a model with at most " + std::to_string(config.K_N) +
                         " nonzeros; extend the grid toward larger lambda");
  return out;
}

}  // namespace dcrr
