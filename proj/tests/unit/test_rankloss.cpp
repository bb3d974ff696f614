#include <doctest.h>

#include <cmath>
#include <vector>

#include "dcrr/datagen.hpp"
#include "dcrr/rankloss.hpp"
#include "dcrr/rng.hpp"
#include "oracles.hpp"

using namespace dcrr;

namespace {

struct Instance {
  Matrix X;
  Vector y;
  Vector beta;
};

Instance random_instance(std::size_t n, std::size_t p, std::uint64_t seed, bool heavy = false) {
  Rng rng(seed);
  Instance in{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p)),
              Vector(static_cast<Eigen::Index>(n)), Vector(static_cast<Eigen::Index>(p))};
  for (Eigen::Index i = 0; i < in.X.rows(); ++i)
    for (Eigen::Index j = 0; j < in.X.cols(); ++j) in.X(i, j) = rng.normal();
  for (Eigen::Index j = 0; j < in.beta.size(); ++j) in.beta[j] = j % 3 == 0 ? 0.0 : rng.normal();
  for (Eigen::Index i = 0; i < in.y.size(); ++i) in.y[i] = heavy ? 3.0 * rng.cauchy() : rng.normal();
  return in;
}

double rel_err(const Vector& a, const Vector& b) { return (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>()); }

}  // namespace

TEST_SUITE("rankloss") {
  TEST_CASE("tiny shards match a brute-force pair loop exactly") {
    for (std::size_t n : {2u, 3u, 4u, 5u}) {
      for (const Kernel& k : {Kernel{EpanechnikovKernel{}}, Kernel{GaussianKernel{}}}) {
        const auto in = random_instance(n, 4, 100 + n);
        const SmoothedLoss sl(k, 0.9);
        const Shard shard(in.X, in.y, 1);
        const auto ref = oracle::brute_force_pairs(in.X, in.y, sl, in.beta);
        const auto loss = local_loss(shard, sl, in.beta);
        CHECK(loss.n_pairs == n * (n - 1));
        CHECK(std::abs(loss.value - ref.loss) <= 1e-12 * std::max(1.0, ref.loss));
        CHECK(rel_err(local_gradient(shard, sl, in.beta), ref.gradient) <= 1e-12);
        Vector g;
        const double v = local_loss_and_gradient(shard, sl, in.beta, g);
        CHECK(v == loss.value);
        CHECK(rel_err(g, ref.gradient) <= 1e-12);
      }
    }
  }

  TEST_CASE("multi-block shards match brute force") {
    // Large enough to be cut into several row blocks.
    for (std::size_t n : {257u, 700u}) {
      const auto in = random_instance(n, 6, 7 * n, true);
      const SmoothedLoss sl(EpanechnikovKernel{}, 1.0);
      const Shard shard(in.X, in.y, 1);
      const auto ref = oracle::brute_force_pairs(in.X, in.y, sl, in.beta);
      Vector g;
      const double v = local_loss_and_gradient(shard, sl, in.beta, g);
      CHECK(std::abs(v - ref.loss) <= 1e-12 * ref.loss);
      CHECK(rel_err(g, ref.gradient) <= 1e-12);
    }
  }

  TEST_CASE("results are bit-identical across thread counts") {
    const auto in = random_instance(900, 5, 3);
    const SmoothedLoss sl(GaussianKernel{}, 0.7);
    const Shard shard(in.X, in.y, 1);
    Vector g1, g2, g4;
    const double v1 = local_loss_and_gradient(shard, sl, in.beta, g1, {1});
    const double v2 = local_loss_and_gradient(shard, sl, in.beta, g2, {2});
    const double v4 = local_loss_and_gradient(shard, sl, in.beta, g4, {4});
    CHECK(v1 == v2);
    CHECK(v1 == v4);
    CHECK(g1 == g2);
    CHECK(g1 == g4);
  }

  TEST_CASE("gradient matches finite differences of the loss") {
    const auto in = random_instance(60, 5, 11);
    const SmoothedLoss sl(EpanechnikovKernel{}, 1.2);
    const Shard shard(in.X, in.y, 1);
    const Vector g = local_gradient(shard, sl, in.beta);
    for (Eigen::Index j = 0; j < in.beta.size(); ++j) {
      const auto f = [&](double t) {
        Vector b = in.beta;
        b[j] = t;
        return local_loss(shard, sl, b).value;
      };
      CHECK(g[j] == doctest::Approx(oracle::central_difference(f, in.beta[j], 1e-6)).epsilon(1e-6).scale(1.0));
    }
  }

  TEST_CASE("residuals use only nonzero coefficients and agree with the dense product") {
    const auto in = random_instance(30, 8, 5);
    const Shard shard(in.X, in.y, 1);
    const Vector e = residuals(shard, in.beta);
    CHECK((e - (in.y - in.X * in.beta)).cwiseAbs().maxCoeff() < 1e-13);
  }

  TEST_CASE("global loss is the pooled U-statistic and is not additive") {
    const auto in = random_instance(60, 4, 21);
    const SmoothedLoss sl(EpanechnikovKernel{}, 1.0);
    const Partition part = partition(in.X, in.y, 3);
    const auto ref = oracle::brute_force_pairs(in.X, in.y, sl, in.beta);
    const auto gl = global_loss(part.shards, sl, in.beta);
    CHECK(gl.n_pairs == 60u * 59u);
    CHECK(std::abs(gl.value - ref.loss) <= 1e-12 * ref.loss);
    const Vector gg = global_gradient(part.shards, sl, in.beta);
    CHECK(rel_err(gg, ref.gradient) <= 1e-12);

    Vector mean = Vector::Zero(4);
    for (const auto& s : part.shards) mean += local_gradient(s, sl, in.beta);
    mean /= 3.0;
    CHECK((gg - mean).norm() > 1e-3);
  }

  TEST_CASE("pairwise loss from residual spans") {
    const std::vector<double> e{0.0, 0.3, -1.4, 2.0};
    const SmoothedLoss sl(EpanechnikovKernel{}, 1.0);
    double ref = 0.0;
    std::vector<double> scores_ref(4, 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) {
          ref += sl.loss(e[i] - e[j]);
          scores_ref[i] += sl.dloss(e[i] - e[j]);
        }
    ref /= 12.0;
    CHECK(pairwise_loss(e, sl) == doctest::Approx(ref).epsilon(1e-14));
    std::vector<double> scores(4);
    CHECK(pairwise_loss_and_scores(e, sl, scores) == doctest::Approx(ref).epsilon(1e-14));
    for (int i = 0; i < 4; ++i) CHECK(scores[i] == doctest::Approx(scores_ref[i]).epsilon(1e-14));
  }
}
