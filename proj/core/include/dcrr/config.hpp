#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcrr/cluster.hpp"
#include "dcrr/datagen.hpp"
#include "dcrr/penalty.hpp"
#include "dcrr/selection.hpp"
#include "dcrr/smoothing.hpp"
#include "dcrr/solver.hpp"

namespace dcrr {

enum class Method { CrrLasso, CrrScad, CrrOra, DcrrLasso, DcrrScad, DcrrOra, DcCrrLasso, DcCrrScad };

Method method_from_name(std::string_view name);
std::string_view method_name(Method method) noexcept;

/// Whether a method reports one row per stage count in ExperimentConfig::stages.
bool method_is_staged(Method method) noexcept;

struct ExperimentConfig {
  std::string name = "experiment";
  DesignSpec design;
  ErrorLaw error = ErrorLaw::Normal;
  std::size_t local_n = 100;              ///< rows per machine
  std::vector<std::size_t> machines{5};   ///< one block of rows per entry
  std::vector<Method> methods;
  Kernel kernel = EpanechnikovKernel{};
  double bandwidth = 1.0;
  std::size_t k1 = 8;
  std::vector<std::size_t> stages{2, 6};  ///< reported T values; each fit runs to the largest
  std::size_t baseline_stages = 0;        ///< folded stages for CRR-SCAD / DC-CRR-SCAD; 0 means max(stages)
  PenaltySpec penalty = PenaltySpec::scad(0.0);
  GridSpec grid;
  SolverConfig solver;
  std::optional<double> C_N;
  std::optional<std::size_t> K_N;
  std::size_t replicates = 100;
  std::uint64_t seed = 20240101;
  std::size_t threads = 0;     ///< replicate workers; 0 means all hardware threads
  bool dc_majority = false;    ///< DC support by majority vote instead of union
  Aggregation aggregation = Aggregation::Unweighted;
  double oracle_tolerance = 1e-6;
  std::string output = "results";

  std::size_t max_stage() const;
  std::size_t effective_baseline_stages() const;

  /// Multiplies p and replicates by f (rounded; p stays >= 10, replicates >= 1).
  void apply_scale(double f);
  void validate() const;

  /// Stable text form of every field that affects results.
  std::string canonical() const;
};

/// FNV-1a 64 of the canonical form.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Parses a YAML experiment description. Unknown keys are rejected.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace dcrr
