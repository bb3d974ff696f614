#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <limits>
#include <vector>

#include "dcrr/datagen.hpp"

namespace dcrr {

struct InfoCriterionConfig {
  double C_N = 1.0;       ///< penalty scale
  std::size_t K_N = 50;   ///< largest admissible support

  void validate() const;

  /// C_N = max(1, log log N), K_N = min(n / 2, 50) (at least 1).
  static InfoCriterionConfig defaults(std::size_t N, std::size_t n);
};

std::size_t support_size(const Vector& beta);
std::vector<Index> support_of(const Vector& beta);

/// log(mean_loss) + |supp(beta)| * C_N * log(p) / n. A mean loss of exactly
/// zero is a perfect fit and scores -infinity; a negative or non-finite loss
/// throws DomainError.
double dhbic(const Vector& beta_hat, double mean_loss, std::size_t n, std::size_t p, const InfoCriterionConfig& config);

struct GridSpec {
  std::size_t count = 30;
  double min_ratio = 0.01;

  void validate() const;
};

/// Geometric grid from lambda_max down to min_ratio * lambda_max, descending.
std::vector<double> lambda_grid(double lambda_max, const GridSpec& spec = {});

struct Candidate {
  Vector beta;
  double mean_loss = 0.0;
};

struct GridPoint {
  double lambda = 0.0;
  std::size_t support = 0;
  double criterion = std::numeric_limits<double>::quiet_NaN();  ///< NaN when inadmissible
};

struct Selection {
  std::size_t index = 0;  ///< into the grid
  double lambda = 0.0;
  double criterion = 0.0;
  Candidate best;
  std::vector<GridPoint> evaluated;  ///< in evaluation order
};

/// Walks a descending grid, calling fit(lambda) for each point. Candidates with
/// support above K_N are inadmissible; with `stop_at_inadmissible` the walk
/// ends at the first one (supports grow as lambda shrinks). Ties within a
/// relative 1e-10 go to the larger lambda. Throws SelectionError when no point
/// is admissible.
Selection select_lambda(std::span<const double> grid, const std::function<Candidate(double)>& fit, std::size_t n,
                        std::size_t p, const InfoCriterionConfig& config, bool stop_at_inadmissible = true);

}  // namespace dcrr
