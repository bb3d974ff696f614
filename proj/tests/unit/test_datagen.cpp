#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dcrr/datagen.hpp"
#include "dcrr/errors.hpp"
#include "dcrr/rng.hpp"

using namespace dcrr;

namespace {

double median_abs(std::vector<double> xs) {
  for (auto& x : xs) x = std::abs(x);
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2), xs.end());
  return xs[xs.size() / 2];
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("dcrr_test_" + name);
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(42, 3, 1), b(42, 3, 1), c(42, 3, 2), d(42, 4, 1);
    for (int i = 0; i < 100; ++i) {
      const auto x = a();
      CHECK(x == b());
      CHECK(x != c());
      CHECK(x != d());
    }
  }

  TEST_CASE("uniform and below stay in range") {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
      const double u = rng.uniform();
      CHECK((u >= 0.0 && u < 1.0));
      const double v = rng.uniform_open();
      CHECK((v > 0.0 && v < 1.0));
      CHECK(rng.below(7) < 7u);
    }
  }

  TEST_CASE("sampling laws: moments and quantiles") {
    Rng rng(2024);
    const int n = 200000;
    std::vector<double> z(n), t(n), c(n);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      z[i] = rng.normal();
      sum += z[i];
      sq += z[i] * z[i];
      t[i] = std::numbers::sqrt2 * rng.student_t(4);
      c[i] = rng.cauchy();
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.015));
    // Median of |N(0,1)| is 0.67449; of |t(4)| is 0.74070; of |Cauchy| is 1.
    CHECK(median_abs(z) == doctest::Approx(0.674490).epsilon(0.01));
    CHECK(median_abs(t) == doctest::Approx(std::numbers::sqrt2 * 0.740697).epsilon(0.01));
    CHECK(median_abs(c) == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("scaled t(4) errors have variance 4") {
    // Variance of sqrt(2) t(4) is 2 * 4 / (4 - 2) = 4. The fourth moment is
    // infinite, so check a truncated second moment against its exact value
    // E[X^2; |X| <= 10] from quadrature of the density.
    const auto density = [](double x) {
      const double u = x / std::numbers::sqrt2;
      return 3.0 / 8.0 * std::pow(1.0 + u * u / 4.0, -2.5) / std::numbers::sqrt2;
    };
    double exact = 0.0;
    const int panels = 200000;
    const double h = 20.0 / panels;
    for (int i = 0; i <= panels; ++i) {
      const double x = -10.0 + i * h;
      const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      exact += w * x * x * density(x);
    }
    exact *= h / 3.0;

    const auto beta = make_beta_star(3);
    const Dataset data = sample_dataset(DesignSpec{3, Covariance::identity(), 11}, ErrorLaw::ScaledT4, beta, 400000);
    const Vector eps = data.y - data.X * beta.beta_star;
    double trunc = 0.0;
    for (Eigen::Index i = 0; i < eps.size(); ++i)
      if (std::abs(eps[i]) <= 10.0) trunc += eps[i] * eps[i];
    trunc /= static_cast<double>(eps.size());
    CHECK(trunc == doctest::Approx(exact).epsilon(0.02));
    CHECK(exact > 3.5);
  }

  TEST_CASE("true model and covariance") {
    const TrueModel m = make_beta_star(10);
    CHECK(m.s() == 3);
    CHECK(m.beta_star.norm() == doctest::Approx(3.0));
    CHECK(m.support == std::vector<Index>{0, 1, 2});
    CHECK_THROWS_AS(make_beta_star(2), ConfigError);

    const DesignSpec spec{6, Covariance::autoregressive(0.5), 1};
    const Matrix S = covariance_matrix(spec);
    CHECK(S(0, 3) == doctest::Approx(0.125));
    CHECK(S(4, 4) == 1.0);
    const Matrix L = covariance_factor(spec);
    CHECK((L * L.transpose() - S).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(L(0, 1) == 0.0);
    CHECK_THROWS_AS(covariance_matrix(DesignSpec{4, Covariance::autoregressive(1.0), 1}), ConfigError);
  }

  TEST_CASE("sampled covariates follow the design covariance") {
    const DesignSpec spec{5, Covariance::autoregressive(0.5), 99};
    const auto model = make_beta_star(5);
    const Dataset data = sample_dataset(spec, ErrorLaw::Zero, model, 40000);
    const Matrix emp = data.X.transpose() * data.X / 40000.0;
    CHECK((emp - covariance_matrix(spec)).cwiseAbs().maxCoeff() < 0.03);
    CHECK((data.y - data.X * model.beta_star).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("data do not depend on how it is partitioned") {
    const DesignSpec spec{8, Covariance::autoregressive(0.5), 5};
    const auto model = make_beta_star(8);
    const Sampler sampler(spec);
    const Dataset a = sampler.sample(ErrorLaw::Normal, model, 60, 3);
    const Dataset b = sampler.sample(ErrorLaw::Normal, model, 60, 3);
    CHECK(a.X == b.X);
    CHECK(a.y == b.y);
    const Dataset c = sampler.sample(ErrorLaw::Normal, model, 60, 4);
    CHECK(a.y != c.y);

    for (std::size_t M : {1u, 3u, 5u}) {
      const Partition part = partition(a.X, a.y, M);
      REQUIRE(part.shards.size() == M);
      CHECK(part.master == 0);
      const Shard pooled = pool(part.shards);
      CHECK(pooled.X() == a.X);
      CHECK(pooled.y() == a.y);
      for (std::size_t m = 0; m < M; ++m) CHECK(part.shards[m].machine_id() == m + 1);
    }
    CHECK_THROWS_AS(partition(a.X, a.y, 7), ConfigError);

    const std::vector<std::size_t> sizes{10, 30, 20};
    const Partition uneven = partition(a.X, a.y, sizes);
    CHECK(uneven.master == 1);
    CHECK(uneven.master_shard().rows() == 30);
    CHECK(uneven.shards[2].y()[0] == a.y[40]);
  }

  TEST_CASE("shard validation") {
    CHECK_THROWS_AS(Shard(Matrix::Zero(1, 2), Vector::Zero(1), 1), ConfigError);
    Matrix X = Matrix::Zero(3, 2);
    X(1, 1) = std::nan("");
    CHECK_THROWS_AS(Shard(X, Vector::Zero(3), 1), ConfigError);
    CHECK_THROWS_AS(Shard(Matrix::Zero(3, 2), Vector::Zero(4), 1), ConfigError);
    CHECK(error_law_from_name("cauchy") == ErrorLaw::Cauchy);
    CHECK(error_law_name(ErrorLaw::ScaledT4) == "t4");
    CHECK_THROWS_AS(error_law_from_name("laplace"), ConfigError);
  }

  TEST_CASE("csv ingestion") {
    const auto path = write_temp("ok.csv",
                                 "id,x1,name,x2,k,y\n"
                                 "1,1.0,a,2.0,5,10\n"
                                 "2,3.0,b,NA,5,11\n"
                                 "3,5.0,c,6.0,5,12\n"
                                 "4,7.0,d,8.0,5,\n"
                                 "5,9.0,e,1.0,5,13\n");
    const CsvData d = load_csv(path, "y", true);
    CHECK(d.dropped_rows == 2);
    CHECK(d.y.size() == 3);
    CHECK(d.dropped_columns == std::vector<std::string>{"name"});
    CHECK(d.feature_names == std::vector<std::string>{"id", "x1", "x2", "k"});
    CHECK(d.constant_columns == std::vector<std::string>{"k"});
    CHECK(d.X.col(1).sum() == doctest::Approx(0.0).scale(1.0));
    CHECK(d.X.col(3).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.y[2] == 13.0);

    const CsvData raw = load_csv(path, "y", false);
    CHECK(raw.X(0, 1) == 1.0);

    CHECK_THROWS_AS(load_csv(write_temp("ragged.csv", "a,y\n1,2\n3\n"), "y", false), IngestionError);
    CHECK_THROWS_AS(load_csv(write_temp("empty.csv", ""), "y", false), IngestionError);
    CHECK_THROWS_AS(load_csv(write_temp("norows.csv", "a,y\nNA,1\n"), "y", false), IngestionError);
    CHECK_THROWS_AS(load_csv(path, "missing", false), IngestionError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", "y", false), IngestionError);
  }
}
