#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "dcrr/errors.hpp"
#include "dcrr/rankloss.hpp"
#include "dcrr/selection.hpp"
#include "dcrr/solver.hpp"

using namespace dcrr;

namespace {

Vector with_support(std::size_t p, std::size_t k) {
  Vector b = Vector::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < k; ++j) b[static_cast<Eigen::Index>(j)] = 1.0;
  return b;
}

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("criterion arithmetic") {
    const InfoCriterionConfig cfg{2.0, 50};
    const double v = dhbic(with_support(1000, 3), std::exp(1.0), 100, 1000, cfg);
    CHECK(v == doctest::Approx(1.0 + 3.0 * 2.0 * std::log(1000.0) / 100.0).epsilon(1e-14));
    CHECK(v == doctest::Approx(1.4144653).epsilon(1e-7));
    CHECK(dhbic(with_support(10, 0), 1.0, 10, 10, cfg) == 0.0);
    CHECK(dhbic(with_support(10, 2), 0.0, 10, 10, cfg) == -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(dhbic(with_support(10, 2), -0.1, 10, 10, cfg), DomainError);
    CHECK_THROWS_AS(dhbic(with_support(10, 2), std::nan(""), 10, 10, cfg), DomainError);
    CHECK_THROWS_AS(dhbic(with_support(10, 2), 1.0, 10, 10, InfoCriterionConfig{0.0, 5}), ConfigError);
  }

  TEST_CASE("defaults") {
    const auto big = InfoCriterionConfig::defaults(500, 100);
    CHECK(big.C_N == doctest::Approx(std::log(std::log(500.0))));
    CHECK(big.K_N == 50);
    const auto small = InfoCriterionConfig::defaults(10, 10);
    CHECK(small.C_N == 1.0);
    CHECK(small.K_N == 5);
    CHECK(InfoCriterionConfig::defaults(1, 1).K_N == 1);
    CHECK(InfoCriterionConfig::defaults(5000, 400).K_N == 50);
  }

  TEST_CASE("support helpers") {
    Vector b(5);
    b << 0.0, -0.0, 1e-300, -2.0, 0.0;
    CHECK(support_size(b) == 2);
    CHECK(support_of(b) == std::vector<Index>{2, 3});
  }

  TEST_CASE("geometric grid") {
    const auto g = lambda_grid(2.0);
    REQUIRE(g.size() == 30);
    CHECK(g.front() == 2.0);
    CHECK(g.back() == doctest::Approx(0.02).epsilon(1e-12));
    for (std::size_t k = 1; k < g.size(); ++k) {
      CHECK(g[k] < g[k - 1]);
      CHECK(g[k] / g[k - 1] == doctest::Approx(std::pow(0.01, 1.0 / 29.0)).epsilon(1e-12));
    }
    CHECK(lambda_grid(3.0, GridSpec{1, 0.5}) == std::vector<double>{3.0});
    CHECK_THROWS_AS(lambda_grid(0.0), ConfigError);
    CHECK_THROWS_AS(lambda_grid(1.0, GridSpec{0, 0.1}), ConfigError);
    CHECK_THROWS_AS(lambda_grid(1.0, GridSpec{5, 1.5}), ConfigError);
  }

  TEST_CASE("selector rules") {
    const InfoCriterionConfig cfg{1.0, 4};
    const std::vector<double> grid{1.0, 0.5, 0.25, 0.125};

    SUBCASE("singleton grid") {
      const std::vector<double> one{0.3};
      const auto s = select_lambda(one, [](double) { return Candidate{with_support(8, 2), 1.0}; }, 50, 8, cfg);
      CHECK(s.lambda == 0.3);
      CHECK(s.index == 0);
    }
    SUBCASE("equal loss: the smaller support wins") {
      const auto s = select_lambda(
          grid, [](double l) { return Candidate{with_support(8, l > 0.4 ? 1 : 3), 1.0}; }, 50, 8, cfg);
      CHECK(s.lambda == 1.0);
      CHECK(s.best.beta == with_support(8, 1));
    }
    SUBCASE("exact ties go to the larger lambda") {
      const auto s = select_lambda(grid, [](double) { return Candidate{with_support(8, 2), 2.0}; }, 50, 8, cfg);
      CHECK(s.lambda == 1.0);
      CHECK(s.evaluated.size() == 4);
    }
    SUBCASE("the walk stops at the first inadmissible model") {
      int calls = 0;
      const auto s = select_lambda(
          grid,
          [&](double l) {
            ++calls;
            return Candidate{with_support(8, l > 0.3 ? 2 : 6), l};
          },
          50, 8, cfg);
      CHECK(calls == 3);
      CHECK(s.evaluated.size() == 3);
      CHECK(std::isnan(s.evaluated.back().criterion));
      CHECK(s.lambda == 0.5);
    }
    SUBCASE("without stopping, later admissible points are still considered") {
      const auto s = select_lambda(
          grid, [&](double l) { return Candidate{with_support(8, l == 0.25 ? 6 : 2), l}; }, 50, 8, cfg, false);
      CHECK(s.evaluated.size() == 4);
      CHECK(s.lambda == 0.125);
    }
    SUBCASE("a perfect fit is selected outright") {
      int calls = 0;
      const auto s = select_lambda(
          grid,
          [&](double l) {
            ++calls;
            return Candidate{with_support(8, 3), l < 0.7 ? 0.0 : 1.0};
          },
          50, 8, cfg);
      CHECK(s.lambda == 0.5);
      CHECK(calls == 2);
    }
    SUBCASE("all inadmissible") {
      CHECK_THROWS_AS(
          select_lambda(grid, [](double) { return Candidate{with_support(8, 5), 1.0}; }, 50, 8, cfg),
          SelectionError);
    }
  }

  TEST_CASE("interior optimum on a seeded lasso path agrees with exhaustive evaluation") {
    const std::size_t p = 40;
    const auto model = make_beta_star(p);
    const Dataset d = sample_dataset(DesignSpec{p, Covariance::autoregressive(0.5), 17}, ErrorLaw::Normal, model, 200);
    const Shard shard(d.X, d.y, 1);
    const SmoothedLoss sl(EpanechnikovKernel{}, 1.0);
    auto objective = std::make_shared<PairwiseObjective>(shard, sl);
    Vector g0;
    objective->value_and_gradient(Vector::Zero(static_cast<Eigen::Index>(p)), g0);
    const auto grid = lambda_grid(g0.lpNorm<Eigen::Infinity>(), GridSpec{20, 0.001});
    const auto cfg = InfoCriterionConfig::defaults(200, 200);

    auto fit = [&](double lambda) {
      CompositeProblem problem{objective, Vector::Zero(static_cast<Eigen::Index>(p)),
                               Vector::Constant(static_cast<Eigen::Index>(p), lambda)};
      SolverConfig sc;
      sc.kkt_tol = 1e-9;
      const auto r = solve(problem, sc, Vector::Zero(static_cast<Eigen::Index>(p)));
      return Candidate{r.beta, local_loss(shard, sl, r.beta).value};
    };
    const auto s = select_lambda(grid, fit, 200, p, cfg, false);

    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    bool saw_empty = false, saw_large = false;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto c = fit(grid[k]);
      const std::size_t size = support_size(c.beta);
      saw_empty = saw_empty || size == 0;
      saw_large = saw_large || size > 3;
      if (size > cfg.K_N) continue;
      const double v = std::log(c.mean_loss) + static_cast<double>(size) * cfg.C_N * std::log(double(p)) / 200.0;
      if (!std::isfinite(best_value) || v < best_value - 1e-10 * std::max(1.0, std::abs(best_value))) {
        best_value = v;
        best = k;
      }
    }
    CHECK(saw_empty);
    CHECK(saw_large);
    CHECK(s.index == best);
    CHECK(s.index > 0);
    CHECK(s.index + 1 < grid.size());
    CHECK(support_size(s.best.beta) >= 3);
  }
}
