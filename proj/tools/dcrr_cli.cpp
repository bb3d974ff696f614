// dcrr: simulation runner, CSV fitting, network worker and protocol dump.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dcrr/config.hpp"
#include "dcrr/errors.hpp"
#include "dcrr/experiment.hpp"
#include "dcrr/wire.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

struct SimulateArgs {
  std::string config;
  double scale = 1.0;
  std::string out;
  std::size_t threads = 0;
  bool quiet = false;
};

int run_simulate(const SimulateArgs& args) {
  auto config = dcrr::load_experiment_config(args.config);
  if (args.scale != 1.0) config.apply_scale(args.scale);
  if (args.threads > 0) config.threads = args.threads;
  config.validate();
  const std::string out = args.out.empty() ? config.output : args.out;

  dcrr::ProgressFn progress;
  if (!args.quiet)
    progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\rreplicates " << done << "/" << total << std::flush;
      if (done == total) std::cerr << "\n";
    };
  const auto result = dcrr::run_experiment(config, progress);
  std::cout << dcrr::markdown_table(result);
  for (const auto& path : dcrr::write_results(result, out)) std::cerr << "wrote " << path.string() << "\n";
  return 0;
}

struct FitArgs {
  dcrr::CsvFitOptions options;
  std::string csv;
  std::string method = "DCRR-SCAD";
  std::string kernel = "epanechnikov";
  std::string workers;
  bool no_center = false;
};

int run_fit(FitArgs args) {
  auto& o = args.options;
  o.csv = args.csv;
  o.method = dcrr::method_from_name(args.method);
  o.kernel = dcrr::kernel_from_name(args.kernel);
  o.center = !args.no_center;
  if (args.workers.empty())
    if (const char* env = std::getenv("DCRR_WORKERS")) args.workers = env;
  o.workers = split_list(args.workers);
  if (!o.workers.empty() && o.machines == 1) o.machines = o.workers.size();

  const auto r = dcrr::fit_csv(o);
  std::cout << "method " << args.method << "  machines " << o.machines << "  train " << r.n_train << "  test "
            << r.n_test << "\n";
  if (r.dropped_rows > 0) std::cout << "dropped rows with missing values: " << r.dropped_rows << "\n";
  for (const auto& c : r.dropped_columns) std::cout << "dropped non-numeric column: " << c << "\n";
  for (const auto& c : r.constant_columns) std::cout << "constant column (coefficient forced to zero): " << c << "\n";
  std::cout << "selected " << r.model_size << " of " << r.features.size() << " covariates\n";
  std::cout << "intercept " << r.intercept << "\n";
  for (std::size_t j = 0; j < r.features.size(); ++j)
    if (r.beta[static_cast<Eigen::Index>(j)] != 0.0)
      std::cout << "  " << r.features[j] << " " << r.beta[static_cast<Eigen::Index>(j)] << "\n";
  if (r.n_test > 0) {
    std::cout << "test MAE  " << r.test_mae << "  (null " << r.null_mae << ")\n";
    std::cout << "test RMSE " << r.test_rmse << "  (null " << r.null_rmse << ")\n";
  }
  if (r.ledger.rounds > 0)
    std::cout << "rounds " << r.ledger.rounds << " (gradient " << r.ledger.gradient_rounds << ", loss "
              << r.ledger.loss_rounds << "), bytes down " << r.ledger.bytes_down << ", up " << r.ledger.bytes_up
              << "\n";
  return 0;
}

int run_worker(const std::string& listen, std::size_t max_connections, std::size_t threads) {
  const auto [host, port] = dcrr::wire::parse_endpoint(listen);
  dcrr::wire::Listener listener(host, port);
  std::cout << "listening on " << host << ":" << listener.port() << std::endl;
  dcrr::wire::serve(listener, max_connections, dcrr::ExecutionPolicy{threads});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed convoluted rank regression"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation study from a YAML config");
  simulate->add_option("--config", sim.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--scale", sim.scale, "Multiply p and replicates by this factor");
  simulate->add_option("--out", sim.out, "Output directory (default: config 'output')");
  simulate->add_option("--threads", sim.threads, "Replicate workers (default: config, 0 = all cores)");
  simulate->add_flag("--quiet", sim.quiet, "No progress output");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a CSV file and report held-out error");
  fit_cmd->add_option("--csv", fit.csv, "Input CSV with a header row")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--response", fit.options.response, "Response column")->required();
  fit_cmd->add_option("--method", fit.method, "CRR-LASSO, CRR-SCAD, DCRR-LASSO, DCRR-SCAD, DC-CRR-LASSO, DC-CRR-SCAD")
      ->capture_default_str();
  fit_cmd->add_option("--machines", fit.options.machines, "Number of shards")->capture_default_str();
  fit_cmd->add_option("--stages", fit.options.stages, "Total stages T for SCAD methods")->capture_default_str();
  fit_cmd->add_option("--k1", fit.options.k1, "l1-stage iterations")->capture_default_str();
  fit_cmd->add_option("--kernel", fit.kernel, "gaussian or epanechnikov")->capture_default_str();
  fit_cmd->add_option("--bandwidth", fit.options.bandwidth, "Smoothing bandwidth h")->capture_default_str();
  fit_cmd->add_option("--test-fraction", fit.options.test_fraction, "Held-out fraction")->capture_default_str();
  fit_cmd->add_option("--seed", fit.options.seed, "Split seed")->capture_default_str();
  fit_cmd->add_option("--threads", fit.options.threads, "Threads for pairwise evaluations")->capture_default_str();
  fit_cmd->add_option("--workers", fit.workers, "Comma-separated host:port list (or DCRR_WORKERS)");
  fit_cmd->add_flag("--no-center", fit.no_center, "Do not center covariates");

  std::string listen;
  std::size_t max_connections = 0;
  std::size_t worker_threads = 1;
  auto* worker = app.add_subcommand("worker", "Serve shard evaluations over TCP");
  worker->add_option("--listen", listen, "host:port (port 0 picks a free port)")->required();
  worker->add_option("--max-connections", max_connections, "Exit after this many masters (0 = never)");
  worker->add_option("--threads", worker_threads, "Threads for pairwise evaluations");

  auto* dump = app.add_subcommand("protocol-dump", "Print the worker wire format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fit_cmd) return run_fit(fit);
    if (*worker) return run_worker(listen, max_connections, worker_threads);
    if (*dump) {
      std::cout << dcrr::wire::describe_protocol();
      return 0;
    }
  } catch (const dcrr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dcrr::IngestionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
