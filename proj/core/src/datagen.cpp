#include "dcrr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dcrr/errors.hpp"
#include "dcrr/rng.hpp"

namespace dcrr {

ErrorLaw error_law_from_name(std::string_view name) {
  if (name == "normal") return ErrorLaw::Normal;
  if (name == "t4" || name == "scaled_t4") return ErrorLaw::ScaledT4;
  if (name == "cauchy") return ErrorLaw::Cauchy;
  if (name == "zero") return ErrorLaw::Zero;
  throw ConfigError("unknown error law '" + std::string(name) +
                    "' (expected normal, t4, cauchy or zero)");
}

std::string_view error_law_name(ErrorLaw law) noexcept {
  switch (law) {
    case ErrorLaw::Normal: return "normal";
    case ErrorLaw::ScaledT4: return "t4";
    case ErrorLaw::Cauchy: return "cauchy";
    case ErrorLaw::Zero: return "zero";
  }
  return "unknown";
}

TrueModel make_beta_star(std::size_t p) {
  if (p < 3) throw ConfigError("make_beta_star needs p >= 3, got " + std::to_string(p));
  Vector beta = Vector::Zero(static_cast<Eigen::Index>(p));
  beta.head(3).setConstant(std::numbers::sqrt3);
  return {beta, {0, 1, 2}};
}

TrueModel true_model_from(const Vector& beta_star) {
  TrueModel model{beta_star, {}};
  for (Eigen::Index j = 0; j < beta_star.size(); ++j)
    if (beta_star[j] != 0.0) model.support.push_back(static_cast<Index>(j));
  return model;
}

Matrix covariance_matrix(const DesignSpec& spec) {
  if (spec.p < 1) throw ConfigError("design dimension p must be >= 1");
  const auto p = static_cast<Eigen::Index>(spec.p);
  if (spec.covariance.kind == Covariance::Kind::Identity) return Matrix::Identity(p, p);
  const double rho = spec.covariance.rho;
  if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("AR coefficient rho must lie in (-1, 1)");
  Matrix sigma(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      sigma(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return sigma;
}

Matrix covariance_factor(const DesignSpec& spec) {
  const Matrix sigma = covariance_matrix(spec);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw ConfigError("covariance matrix is not positive definite");
  return llt.matrixL();
}

Sampler::Sampler(DesignSpec spec) : spec_(spec), factor_(covariance_factor(spec)) {}

Dataset Sampler::sample(ErrorLaw law, const TrueModel& model, std::size_t n_total,
                        std::uint64_t replicate) const {
  if (n_total < 1) throw ConfigError("sample size must be >= 1");
  if (static_cast<std::size_t>(model.beta_star.size()) != spec_.p)
    throw ConfigError("true model dimension does not match design dimension");
  const auto n = static_cast<Eigen::Index>(n_total);
  const auto p = static_cast<Eigen::Index>(spec_.p);

  Rng covariate_rng(spec_.seed, replicate, 0);
  Matrix Z(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) Z(i, j) = covariate_rng.normal();

  Dataset data;
  if (spec_.covariance.kind == Covariance::Kind::Identity) {
    data.X = std::move(Z);
  } else {
    // Row i of X is L z_i, i.e. X = Z L^T.
    data.X = Z * factor_.transpose().triangularView<Eigen::Upper>();
  }

  Rng error_rng(spec_.seed, replicate, 1);
  Vector eps(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (law) {
      case ErrorLaw::Normal: eps[i] = error_rng.normal(); break;
      case ErrorLaw::ScaledT4: eps[i] = std::numbers::sqrt2 * error_rng.student_t(4); break;
      case ErrorLaw::Cauchy: eps[i] = error_rng.cauchy(); break;
      case ErrorLaw::Zero: eps[i] = 0.0; break;
    }
  }
  data.y = data.X * model.beta_star + eps;
  return data;
}

Dataset sample_dataset(const DesignSpec& spec, ErrorLaw law, const TrueModel& model,
                       std::size_t n_total, std::uint64_t replicate) {
  return Sampler(spec).sample(law, model, n_total, replicate);
}

Shard::Shard(Matrix X, Vector y, std::size_t machine_id) : machine_id_(machine_id) {
  if (X.rows() != y.size()) throw ConfigError("shard X and y have different row counts");
  if (y.size() < 2) throw ConfigError("a shard needs at least two observations for pairwise losses");
  if (!X.allFinite() || !y.allFinite()) throw ConfigError("shard contains non-finite entries");
  data_ = std::make_shared<const Data>(Data{std::move(X), std::move(y)});
}

namespace {

Partition split_blocks(const Matrix& X, const Vector& y, std::span<const std::size_t> sizes) {
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  if (total != static_cast<std::size_t>(y.size()) || X.rows() != y.size())
    throw ConfigError("shard sizes do not sum to the number of observations");
  Partition part;
  Eigen::Index start = 0;
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    if (sizes[m] < 2)
      throw ConfigError("shard " + std::to_string(m + 1) + " has fewer than two observations");
    const auto len = static_cast<Eigen::Index>(sizes[m]);
    part.shards.emplace_back(X.middleRows(start, len), y.segment(start, len), m + 1);
    start += len;
  }
  return part;
}

}  // namespace

Partition partition(const Matrix& X, const Vector& y, std::size_t machines) {
  if (machines < 1) throw ConfigError("machine count must be >= 1");
  const auto n_total = static_cast<std::size_t>(y.size());
  if (n_total % machines != 0)
    throw ConfigError("machine count " + std::to_string(machines) + " does not divide N = " +
                      std::to_string(n_total));
  std::vector<std::size_t> sizes(machines, n_total / machines);
  Partition part = split_blocks(X, y, sizes);
  part.master = 0;
  return part;
}

Partition partition(const Matrix& X, const Vector& y, std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw ConfigError("at least one shard size is required");
  Partition part = split_blocks(X, y, sizes);
  part.master = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  return part;
}

Shard pool(std::span<const Shard> shards) {
  if (shards.empty()) throw ConfigError("cannot pool an empty shard list");
  Eigen::Index rows = 0;
  const auto p = static_cast<Eigen::Index>(shards.front().cols());
  for (const auto& s : shards) {
    if (static_cast<Eigen::Index>(s.cols()) != p) throw ConfigError("shards have different dimensions");
    rows += static_cast<Eigen::Index>(s.rows());
  }
  Matrix X(rows, p);
  Vector y(rows);
  Eigen::Index at = 0;
  for (const auto& s : shards) {
    const auto len = static_cast<Eigen::Index>(s.rows());
    X.middleRows(at, len) = s.X();
    y.segment(at, len) = s.y();
    at += len;
  }
  return Shard(std::move(X), std::move(y), 0);
}

}  // namespace dcrr
