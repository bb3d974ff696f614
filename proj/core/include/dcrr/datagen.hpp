#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcrr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::size_t;

struct Covariance {
  enum class Kind { Identity, Autoregressive };

  Kind kind = Kind::Autoregressive;
  double rho = 0.5;

  static Covariance identity() { return {Kind::Identity, 0.0}; }
  static Covariance autoregressive(double rho) { return {Kind::Autoregressive, rho}; }
};

struct DesignSpec {
  std::size_t p = 1000;
  Covariance covariance = Covariance::autoregressive(0.5);
  std::uint64_t seed = 20240101;
};

/// Error distributions. `Zero` is the degenerate eps == 0 law used by noiseless tests.
enum class ErrorLaw { Normal, ScaledT4, Cauchy, Zero };

ErrorLaw error_law_from_name(std::string_view name);
std::string_view error_law_name(ErrorLaw law) noexcept;

struct TrueModel {
  Vector beta_star;
  std::vector<Index> support;  ///< zero-based, ascending

  std::size_t s() const noexcept { return support.size(); }
};

/// beta* = (sqrt3, sqrt3, sqrt3, 0, ..., 0). Throws ConfigError when p < 3.
TrueModel make_beta_star(std::size_t p);

/// Builds a TrueModel from an arbitrary coefficient vector.
TrueModel true_model_from(const Vector& beta_star);

/// Population covariance: AR(rho) has entries rho^|i-j|.
Matrix covariance_matrix(const DesignSpec& spec);

/// Lower-triangular Cholesky factor of the covariance. Throws ConfigError if not positive definite.
Matrix covariance_factor(const DesignSpec& spec);

struct Dataset {
  Matrix X;
  Vector y;
};

/// Draws rows of X i.i.d. N(0, Sigma) through the Cholesky factor and sets y = X beta* + eps.
///
/// Random streams: (seed, replicate, 0) drives the covariates row by row and
/// (seed, replicate, 1) drives the errors, so the pooled data do not depend on
/// how it is later partitioned.
class Sampler {
 public:
  explicit Sampler(DesignSpec spec);

  const DesignSpec& spec() const noexcept { return spec_; }
  const Matrix& factor() const noexcept { return factor_; }

  Dataset sample(ErrorLaw law, const TrueModel& model, std::size_t n_total,
                 std::uint64_t replicate = 0) const;

 private:
  DesignSpec spec_;
  Matrix factor_;
};

Dataset sample_dataset(const DesignSpec& spec, ErrorLaw law, const TrueModel& model,
                       std::size_t n_total, std::uint64_t replicate = 0);

/// One machine's immutable block of observations. Copies share storage.
class Shard {
 public:
  Shard(Matrix X, Vector y, std::size_t machine_id);

  const Matrix& X() const noexcept { return data_->X; }
  const Vector& y() const noexcept { return data_->y; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(data_->y.size()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(data_->X.cols()); }
  /// One-based machine identifier.
  std::size_t machine_id() const noexcept { return machine_id_; }

 private:
  struct Data {
    Matrix X;
    Vector y;
  };
  std::shared_ptr<const Data> data_;
  std::size_t machine_id_;
};

struct Partition {
  std::vector<Shard> shards;  ///< ordered by machine id
  std::size_t master = 0;     ///< zero-based index into shards

  const Shard& master_shard() const { return shards.at(master); }
};

/// Balanced contiguous blocks; M must divide N. Shard 1 is the master.
Partition partition(const Matrix& X, const Vector& y, std::size_t machines);

/// Unbalanced contiguous blocks of the given sizes. The largest shard (first on ties) is the master.
Partition partition(const Matrix& X, const Vector& y, std::span<const std::size_t> sizes);

/// Stacks shards in machine order into a single pooled shard with id 0.
Shard pool(std::span<const Shard> shards);

struct CsvData {
  Matrix X;
  Vector y;
  std::vector<std::string> feature_names;
  std::vector<std::string> dropped_columns;   ///< non-numeric columns
  std::vector<std::string> constant_columns;  ///< zero after centering
  std::size_t dropped_rows = 0;               ///< rows with a missing value
};

/// Reads a comma-separated file with a header row. Non-numeric columns are
/// dropped; rows with missing values (empty, NA, NaN) are dropped and counted.
/// With `center`, covariate columns are mean-centered.
CsvData load_csv(const std::filesystem::path& path, std::string_view response_column,
                 bool center);

}  // namespace dcrr
