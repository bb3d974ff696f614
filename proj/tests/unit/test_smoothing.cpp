#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dcrr/errors.hpp"
#include "dcrr/smoothing.hpp"
#include "oracles.hpp"

using dcrr::SmoothedLoss;

TEST_SUITE("smoothing") {
  TEST_CASE("closed-form values at reference points") {
    const SmoothedLoss epa(dcrr::EpanechnikovKernel{}, 1.0);
    CHECK(epa.loss(0.0) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(epa.dloss(0.5) == doctest::Approx(0.6875).epsilon(1e-15));
    CHECK(epa.ddloss(0.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(epa.loss(2.5) == 2.5);
    CHECK(epa.loss(-1.0) == doctest::Approx(1.0));
    CHECK(epa.dloss(-3.0) == -1.0);
    CHECK(epa.ddloss(1.5) == 0.0);

    const SmoothedLoss gau(dcrr::GaussianKernel{}, 1.0);
    CHECK(gau.loss(0.0) == doctest::Approx(0.7978845608).epsilon(1e-10));
    CHECK(gau.dloss(1.0) == doctest::Approx(0.6826894921).epsilon(1e-10));
    CHECK(gau.ddloss(0.0) == doctest::Approx(2.0 * 0.3989422804).epsilon(1e-10));
  }

  TEST_CASE("loss matches quadrature of the convolution") {
    for (bool gaussian : {false, true}) {
      for (double h : {0.3, 1.0, 2.5}) {
        const SmoothedLoss sl = gaussian ? SmoothedLoss(dcrr::GaussianKernel{}, h)
                                         : SmoothedLoss(dcrr::EpanechnikovKernel{}, h);
        for (double u : {-3.0, -1.0, -0.7, -0.2, 0.0, 0.05, 0.4, 0.99, 1.7, 4.0}) {
          const double ref = oracle::convolved_abs(u, h, gaussian);
          CAPTURE(gaussian);
          CAPTURE(h);
          CAPTURE(u);
          CHECK(sl.loss(u) == doctest::Approx(ref).epsilon(1e-6));
        }
      }
    }
  }

  TEST_CASE("derivatives match finite differences") {
    for (bool gaussian : {false, true}) {
      for (double h : {0.5, 1.0, 2.0}) {
        const SmoothedLoss sl = gaussian ? SmoothedLoss(dcrr::GaussianKernel{}, h)
                                         : SmoothedLoss(dcrr::EpanechnikovKernel{}, h);
        for (double u : {-2.7, -0.8, -0.3, 0.1, 0.45, 0.9, 1.3, 3.1}) {
          const double step = 1e-5;
          const double d1 = oracle::central_difference([&](double x) { return sl.loss(x); }, u, step);
          const double d2 = oracle::central_difference([&](double x) { return sl.dloss(x); }, u, step);
          CAPTURE(gaussian);
          CAPTURE(u);
          CHECK(sl.dloss(u) == doctest::Approx(d1).epsilon(1e-6).scale(1.0));
          CHECK(sl.ddloss(u) == doctest::Approx(d2).epsilon(1e-6).scale(1.0));
        }
      }
    }
  }

  TEST_CASE("shape: even, convex, above |u|, tends to |u| as h shrinks") {
    for (const dcrr::Kernel& k : {dcrr::Kernel{dcrr::GaussianKernel{}}, dcrr::Kernel{dcrr::EpanechnikovKernel{}}}) {
      const SmoothedLoss sl(k, 0.8);
      for (double u = -4.0; u <= 4.0; u += 0.173) {
        CHECK(sl.loss(u) == doctest::Approx(sl.loss(-u)).epsilon(1e-14));
        CHECK(sl.dloss(u) == doctest::Approx(-sl.dloss(-u)).epsilon(1e-14));
        CHECK(sl.ddloss(u) >= 0.0);
        CHECK(sl.loss(u) >= std::abs(u) - 1e-15);
        CHECK(std::abs(sl.dloss(u)) <= 1.0);
      }
      const SmoothedLoss narrow(k, 1e-4);
      CHECK(narrow.loss(0.37) == doctest::Approx(0.37).epsilon(1e-6));
    }
  }

  TEST_CASE("kernel densities integrate to one and cdfs agree") {
    for (const dcrr::Kernel& k : {dcrr::Kernel{dcrr::GaussianKernel{}}, dcrr::Kernel{dcrr::EpanechnikovKernel{}}}) {
      const double mass = oracle::simpson([&](double t) { return dcrr::kernel_density(k, t); }, -12.0, 12.0, 24000);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
      for (double t : {-1.5, -0.4, 0.0, 0.6, 2.0}) {
        // Split at the support edges so the Epanechnikov kinks fall on panel boundaries.
        const auto density = [&](double s) { return dcrr::kernel_density(k, s); };
        double ref = 0.0, lo = -12.0;
        for (double edge : {-1.0, 1.0, t}) {
          const double hi = std::min(edge, t);
          if (hi > lo) ref += oracle::simpson(density, lo, hi, 8000);
          lo = std::max(lo, hi);
        }
        CHECK(dcrr::kernel_cdf(k, t) == doctest::Approx(ref).epsilon(1e-8).scale(1.0));
      }
    }
  }

  TEST_CASE("names and errors") {
    CHECK(dcrr::kernel_name(dcrr::kernel_from_name("gaussian")) == "gaussian");
    CHECK(dcrr::kernel_name(dcrr::kernel_from_name("epanechnikov")) == "epanechnikov");
    CHECK_THROWS_AS(dcrr::kernel_from_name("uniform"), dcrr::ConfigError);
    CHECK_THROWS_AS(SmoothedLoss(dcrr::GaussianKernel{}, 0.0), dcrr::ConfigError);
    CHECK_THROWS_AS(SmoothedLoss(dcrr::GaussianKernel{}, -1.0), dcrr::ConfigError);
    const SmoothedLoss sl(dcrr::GaussianKernel{}, 1.0);
    CHECK_THROWS_AS(sl.loss(std::numeric_limits<double>::quiet_NaN()), dcrr::DomainError);
    CHECK_THROWS_AS(sl.dloss(std::numeric_limits<double>::infinity()), dcrr::DomainError);
  }
}
