#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dcrr/cluster.hpp"
#include "dcrr/config.hpp"
#include "dcrr/datagen.hpp"

namespace dcrr {

struct Metrics {
  double l1 = 0.0;
  double l2 = 0.0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t ms = 0;
};

Metrics compute_metrics(const Vector& beta_hat, const TrueModel& model);

struct MethodOutcome {
  std::string method;  ///< row label, e.g. "DCRR-SCAD (T=6)"
  Metrics metrics;
  CommLedger ledger;
  double wall_ms = 0.0;
  /// ||beta^(T) - beta^(ora,T)||_inf for DCRR-SCAD rows when oracle fits ran; NaN otherwise.
  double oracle_gap = std::numeric_limits<double>::quiet_NaN();
};

struct ReplicateRecord {
  std::size_t machines = 0;
  std::size_t replicate = 0;
  bool ok = false;
  std::string error;
  std::vector<MethodOutcome> methods;

  const MethodOutcome* find(std::string_view label) const;
};

struct MetricSummary {
  std::string name;
  double mean = 0.0;
  double se = 0.0;  ///< sample sd / sqrt(replicates); 0 for a single replicate
};

struct MethodSummary {
  std::size_t machines = 0;
  std::string method;
  std::size_t replicates = 0;
  std::vector<MetricSummary> metrics;
  double wall_ms = 0.0;  ///< mean; reported separately since it is not reproducible

  const MetricSummary& metric(std::string_view name) const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::uint64_t hash = 0;
  std::vector<ReplicateRecord> records;  ///< ordered by (machines entry, replicate)
  std::vector<MethodSummary> summary;    ///< ordered by (machines entry, row label order)
  std::size_t failures = 0;

  const MethodSummary& find(std::size_t machines, std::string_view method) const;
};

/// Row labels in table order for the configured methods.
std::vector<std::string> row_labels(const ExperimentConfig& config);

/// Runs one replicate for M machines (public for tests and the acceptance suite).
ReplicateRecord run_replicate(const ExperimentConfig& config, std::size_t machines, std::size_t replicate);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Replicates run on a worker pool; aggregation is by replicate index so the
/// means are identical for any thread count. Failed replicates are excluded
/// and counted; more than 10% failures for any M aborts with Error.
ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Writes <name>_M<M>.csv (method,metric,mean,se,replicates,config_hash) per
/// machine count, <name>.md, and <name>_timing.csv. Returns the files written.
std::vector<std::filesystem::path> write_results(const ExperimentResult& result, const std::filesystem::path& dir);

std::string markdown_table(const ExperimentResult& result);

struct CsvFitOptions {
  std::filesystem::path csv;
  std::string response;
  Method method = Method::DcrrScad;
  std::size_t machines = 1;
  std::size_t stages = 2;
  std::size_t k1 = 8;
  Kernel kernel = EpanechnikovKernel{};
  double bandwidth = 1.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
  bool center = true;
  std::vector<std::string> workers;  ///< network backend when nonempty
  std::size_t threads = 1;
};

struct CsvFitResult {
  std::vector<std::string> features;
  Vector beta;
  double intercept = 0.0;  ///< median training residual
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t model_size = 0;
  double test_mae = 0.0;
  double test_rmse = 0.0;
  double null_mae = 0.0;   ///< predicting the training mean
  double null_rmse = 0.0;
  CommLedger ledger;
  std::size_t dropped_rows = 0;
  std::vector<std::string> dropped_columns;
  std::vector<std::string> constant_columns;
};

/// Shuffled train/test split under seed, fit on the training rows, report
/// prediction errors of y - yhat on the test rows.
CsvFitResult fit_csv(const CsvFitOptions& options);

}  // namespace dcrr
