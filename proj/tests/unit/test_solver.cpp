#include <doctest.h>

#include <cmath>
#include <memory>

#include "dcrr/errors.hpp"
#include "dcrr/rng.hpp"
#include "dcrr/solver.hpp"
#include "oracles.hpp"

using namespace dcrr;

namespace {

double soft(double u, double t) { return std::abs(u) > t ? u - std::copysign(t, u) : 0.0; }

// Cyclic coordinate descent on 0.5 (b - m)'H(b - m) - c'b + sum w|b|.
Vector coordinate_descent(const Matrix& H, const Vector& m, const Vector& c, const Vector& w) {
  const Vector lin = H * m + c;
  Vector b = Vector::Zero(m.size());
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double r = lin[j] - H.row(j).dot(b) + H(j, j) * b[j];
      const double nb = soft(r, w[j]) / H(j, j);
      change = std::max(change, std::abs(nb - b[j]));
      b[j] = nb;
    }
    if (change < 1e-14) break;
  }
  return b;
}

struct RandomQuadratic {
  Matrix H;
  Vector center, c, w;
};

RandomQuadratic random_quadratic(Rng& rng, Eigen::Index p) {
  RandomQuadratic q;
  Matrix A(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) A(i, j) = rng.normal();
  q.H = A.transpose() * A / static_cast<double>(p) + 0.1 * Matrix::Identity(p, p);
  q.center = Vector(p);
  q.c = Vector(p);
  q.w = Vector(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    q.center[j] = 2.0 * rng.normal();
    q.c[j] = 0.5 * rng.normal();
    q.w[j] = rng.uniform() < 0.2 ? 0.0 : 0.8 * rng.uniform();
  }
  return q;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("separable quadratic has the soft-threshold solution") {
    Matrix H = Matrix::Zero(4, 4);
    H.diagonal() << 1.0, 2.0, 0.5, 4.0;
    Vector m(4), c(4), w(4);
    m << 1.0, -2.0, 0.1, 0.0;
    c << 0.0, 0.5, 0.0, -3.0;
    w << 0.5, 1.0, 0.2, 1.0;
    CompositeProblem problem{std::make_shared<QuadraticObjective>(H, m), c, w};
    SolverConfig cfg;
    cfg.kkt_tol = 1e-10;
    cfg.tol = 1e-14;
    const auto r = solve(problem, cfg, Vector::Zero(4));
    CHECK(r.converged);
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double expected = soft(H(j, j) * m[j] + c[j], w[j]) / H(j, j);
      CHECK(r.beta[j] == doctest::Approx(expected).epsilon(1e-8).scale(1.0));
    }
    CHECK(r.beta[2] == 0.0);  // |0.05| < 0.2 lands exactly on zero
  }

  TEST_CASE("random quadratics: KKT certificates and agreement with coordinate descent") {
    Rng rng(77);
    SolverConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
      const auto q = random_quadratic(rng, 12);
      CompositeProblem problem{std::make_shared<QuadraticObjective>(q.H, q.center), q.c, q.w};
      const auto r = solve(problem, cfg, Vector::Zero(12));
      CAPTURE(trial);
      REQUIRE(r.converged);
      Vector g;
      problem.smooth->value_and_gradient(r.beta, g);
      const double kkt = kkt_residual(problem, r.beta, g);
      CHECK(kkt <= cfg.kkt_tol * (1.0 + q.c.cwiseAbs().maxCoeff()));
      CHECK(kkt == doctest::Approx(r.kkt_residual).epsilon(1e-9).scale(1.0));
      const Vector ref = coordinate_descent(q.H, q.center, q.c, q.w);
      CHECK((r.beta - ref).lpNorm<Eigen::Infinity>() < 1e-4);
      CHECK(composite_objective(problem, r.beta) <= composite_objective(problem, ref) + 1e-9);
    }
  }

  TEST_CASE("pairwise objective: certificate from a brute-force gradient") {
    Rng rng(5);
    const Eigen::Index n = 40, p = 6;
    Matrix X(n, p);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
      y[i] = 1.5 * X(i, 0) - X(i, 2) + rng.normal();
    }
    const SmoothedLoss sl(EpanechnikovKernel{}, 1.0);
    auto objective = std::make_shared<PairwiseObjective>(Shard(X, y, 1), sl);
    CompositeProblem problem{objective, Vector::Zero(p), Vector::Constant(p, 0.05)};
    problem.correction[3] = 0.02;
    SolverConfig cfg;
    cfg.kkt_tol = 1e-9;
    const auto r = solve(problem, cfg, Vector::Zero(p));
    REQUIRE(r.converged);
    const auto ref = oracle::brute_force_pairs(X, y, sl, r.beta);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double g = ref.gradient[j] - problem.correction[j];
      if (r.beta[j] != 0.0)
        CHECK(std::abs(g + 0.05 * (r.beta[j] > 0 ? 1.0 : -1.0)) < 1e-7);
      else
        CHECK(std::abs(g) <= 0.05 + 1e-7);
    }
    CHECK(r.beta[0] > 1.0);
    CHECK(r.beta[2] < -0.5);
  }

  TEST_CASE("restricted solve pins coordinates off the support") {
    Rng rng(9);
    const auto q = random_quadratic(rng, 8);
    CompositeProblem problem{std::make_shared<QuadraticObjective>(q.H, q.center), q.c, q.w};
    const std::vector<Index> support{1, 4, 5};
    SolverConfig cfg;
    cfg.kkt_tol = 1e-10;
    const auto r = solve_restricted(problem, support, cfg);
    REQUIRE(r.converged);
    Vector g;
    problem.smooth->value_and_gradient(r.beta, g);
    g -= q.c;
    for (Eigen::Index j = 0; j < 8; ++j) {
      const bool on = j == 1 || j == 4 || j == 5;
      if (on)
        CHECK(std::abs(g[j]) < 1e-9);
      else
        CHECK(r.beta[j] == 0.0);
    }
    // Closed form: H_SS b_S = H_S. m + c_S.
    const Eigen::Index idx[] = {1, 4, 5};
    Matrix HSS(3, 3);
    Vector rhs(3);
    const Vector lin = q.H * q.center + q.c;
    for (int a = 0; a < 3; ++a) {
      rhs[a] = lin[idx[a]];
      for (int b = 0; b < 3; ++b) HSS(a, b) = q.H(idx[a], idx[b]);
    }
    const Vector bS = HSS.ldlt().solve(rhs);
    for (int a = 0; a < 3; ++a) CHECK(r.beta[idx[a]] == doctest::Approx(bS[a]).epsilon(1e-8));
  }

  TEST_CASE("warm start at the optimum returns immediately") {
    Rng rng(12);
    const auto q = random_quadratic(rng, 6);
    CompositeProblem problem{std::make_shared<QuadraticObjective>(q.H, q.center), q.c, q.w};
    SolverConfig cfg;
    const auto first = solve(problem, cfg, Vector::Zero(6));
    const auto again = solve(problem, cfg, first.beta);
    CHECK(again.iterations == 0);
    CHECK(again.converged);
    CHECK(again.beta == first.beta);
  }

  TEST_CASE("large penalties give the zero solution exactly") {
    Rng rng(3);
    const auto q = random_quadratic(rng, 5);
    const Vector lin = q.H * q.center + q.c;
    CompositeProblem problem{std::make_shared<QuadraticObjective>(q.H, q.center), q.c,
                             Vector::Constant(5, lin.cwiseAbs().maxCoeff())};
    const auto r = solve(problem, SolverConfig{}, Vector::Ones(5));
    CHECK(r.beta == Vector::Zero(5));
  }

  TEST_CASE("validation") {
    auto quad = std::make_shared<QuadraticObjective>(Matrix::Identity(3, 3), Vector::Zero(3));
    SolverConfig cfg;
    CHECK_THROWS_AS(solve(CompositeProblem{quad, Vector::Zero(2), Vector::Zero(3)}, cfg, Vector::Zero(3)), ConfigError);
    CHECK_THROWS_AS(solve(CompositeProblem{quad, Vector::Zero(3), -Vector::Ones(3)}, cfg, Vector::Zero(3)), ConfigError);
    CHECK_THROWS_AS(solve(CompositeProblem{quad, Vector::Zero(3), Vector::Zero(3)}, cfg, Vector::Zero(4)), ConfigError);
    const std::vector<Index> bad{7};
    CHECK_THROWS_AS(solve_restricted(CompositeProblem{quad, Vector::Zero(3), Vector::Zero(3)}, bad, cfg), ConfigError);
    cfg.backtrack = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(QuadraticObjective(Matrix::Identity(2, 2), Vector::Zero(3)), ConfigError);
  }
}
