#include "dcrr/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dcrr/errors.hpp"

namespace dcrr {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kMethodNames{{
    {Method::CrrLasso, "CRR-LASSO"},
    {Method::CrrScad, "CRR-SCAD"},
    {Method::CrrOra, "CRR-ORA"},
    {Method::DcrrLasso, "DCRR-LASSO"},
    {Method::DcrrScad, "DCRR-SCAD"},
    {Method::DcrrOra, "DCRR-ORA"},
    {Method::DcCrrLasso, "DC-CRR-LASSO"},
    {Method::DcCrrScad, "DC-CRR-SCAD"},
}};

void reject_unknown(const YAML::Node& node, std::string_view where, std::initializer_list<std::string_view> keys) {
  for (const auto& item : node) {
    const auto key = item.first.as<std::string>();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T get(const YAML::Node& node, const char* key, T fallback) {
  const auto child = node[key];
  if (!child) return fallback;
  try {
    return child.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Method method_from_name(std::string_view name) {
  for (const auto& [method, text] : kMethodNames)
    if (text == name) return method;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string_view method_name(Method method) noexcept {
  for (const auto& [m, text] : kMethodNames)
    if (m == method) return text;
  return "?";
}

bool method_is_staged(Method method) noexcept { return method == Method::DcrrScad || method == Method::DcrrOra; }

std::size_t ExperimentConfig::max_stage() const { return stages.empty() ? 1 : *std::max_element(stages.begin(), stages.end()); }

std::size_t ExperimentConfig::effective_baseline_stages() const {
  return baseline_stages == 0 ? std::max<std::size_t>(2, max_stage()) : baseline_stages;
}

void ExperimentConfig::apply_scale(double f) {
  if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("scale must be positive");
  design.p = std::max<std::size_t>(10, static_cast<std::size_t>(std::llround(static_cast<double>(design.p) * f)));
  replicates = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(replicates) * f)));
}

void ExperimentConfig::validate() const {
  if (design.p < 3) throw ConfigError("p must be at least 3");
  if (design.covariance.kind == Covariance::Kind::Autoregressive && !(std::abs(design.covariance.rho) < 1.0))
    throw ConfigError("AR correlation must lie in (-1, 1)");
  if (local_n < 2) throw ConfigError("local_n must be at least 2");
  if (machines.empty()) throw ConfigError("machines list is empty");
  for (auto M : machines)
    if (M < 1) throw ConfigError("machine counts must be positive");
  if (methods.empty()) throw ConfigError("methods list is empty");
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
  if (k1 < 1) throw ConfigError("k1 must be at least 1");
  if (stages.empty()) throw ConfigError("stages list is empty");
  for (auto t : stages)
    if (t < 2) throw ConfigError("reported stage counts must be at least 2");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (!(oracle_tolerance > 0.0)) throw ConfigError("oracle_tolerance must be positive");
  penalty.validate();
  if (penalty.kind == PenaltyKind::L1) throw ConfigError("folded stages need a scad or mcp penalty");
  grid.validate();
  solver.validate();
  if (C_N && !(*C_N > 0.0)) throw ConfigError("C_N must be positive");
  if (K_N && *K_N < 1) throw ConfigError("K_N must be at least 1");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "p=" << design.p << ";cov=" << (design.covariance.kind == Covariance::Kind::Identity ? "identity" : "ar")
     << ";rho=" << format_double(design.covariance.rho) << ";error=" << error_law_name(error) << ";n=" << local_n
     << ";machines=";
  for (auto M : machines) os << M << ',';
  os << ";methods=";
  for (auto m : methods) os << method_name(m) << ',';
  os << ";kernel=" << kernel_name(kernel) << ";h=" << format_double(bandwidth) << ";k1=" << k1 << ";stages=";
  for (auto t : stages) os << t << ',';
  os << ";baseline_stages=" << effective_baseline_stages() << ";penalty=" << penalty_kind_name(penalty.kind)
     << ";a=" << format_double(penalty.a) << ";grid=" << grid.count << ',' << format_double(grid.min_ratio)
     << ";solver=" << solver.max_iter << ',' << format_double(solver.tol) << ',' << format_double(solver.kkt_tol)
     << ";C_N=" << (C_N ? format_double(*C_N) : "default") << ";K_N=" << (K_N ? std::to_string(*K_N) : "default")
     << ";replicates=" << replicates << ";seed=" << seed << ";dc=" << (dc_majority ? "majority" : "union")
     << ";aggregation=" << (aggregation == Aggregation::Unweighted ? "unweighted" : "size");
  return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping");
  reject_unknown(root, "config",
                 {"name", "seed", "replicates", "threads", "design", "error", "local_n", "machines", "methods",
                  "kernel", "bandwidth", "k1", "stages", "baseline_stages", "penalty", "grid", "solver", "criterion",
                  "dc_support", "aggregation", "oracle_tolerance", "output"});

  ExperimentConfig c;
  c.name = get<std::string>(root, "name", c.name);
  c.seed = get<std::uint64_t>(root, "seed", c.seed);
  c.replicates = get<std::size_t>(root, "replicates", c.replicates);
  c.threads = get<std::size_t>(root, "threads", c.threads);
  c.local_n = get<std::size_t>(root, "local_n", c.local_n);
  c.bandwidth = get<double>(root, "bandwidth", c.bandwidth);
  c.k1 = get<std::size_t>(root, "k1", c.k1);
  c.baseline_stages = get<std::size_t>(root, "baseline_stages", c.baseline_stages);
  c.oracle_tolerance = get<double>(root, "oracle_tolerance", c.oracle_tolerance);
  c.output = get<std::string>(root, "output", c.output);
  c.error = error_law_from_name(get<std::string>(root, "error", "normal"));
  c.kernel = kernel_from_name(get<std::string>(root, "kernel", "epanechnikov"));
  c.machines = get<std::vector<std::size_t>>(root, "machines", c.machines);
  c.stages = get<std::vector<std::size_t>>(root, "stages", c.stages);

  if (const auto design = root["design"]) {
    reject_unknown(design, "design", {"p", "covariance", "rho"});
    c.design.p = get<std::size_t>(design, "p", c.design.p);
    const auto cov = get<std::string>(design, "covariance", "ar");
    if (cov == "ar")
      c.design.covariance = Covariance::autoregressive(get<double>(design, "rho", 0.5));
    else if (cov == "identity")
      c.design.covariance = Covariance::identity();
    else
      throw ConfigError("covariance must be 'ar' or 'identity'");
  }
  c.design.seed = c.seed;

  const auto method_names = get<std::vector<std::string>>(root, "methods", {});
  std::set<Method> seen;
  for (const auto& name : method_names) {
    const Method m = method_from_name(name);
    if (seen.insert(m).second) c.methods.push_back(m);
  }

  if (const auto penalty = root["penalty"]) {
    reject_unknown(penalty, "penalty", {"kind", "a"});
    const auto kind = penalty_kind_from_name(get<std::string>(penalty, "kind", "scad"));
    c.penalty = kind == PenaltyKind::MCP ? PenaltySpec::mcp(0.0) : PenaltySpec::scad(0.0);
    if (kind == PenaltyKind::L1) c.penalty = PenaltySpec::l1(0.0);
    if (penalty["a"]) c.penalty.a = get<double>(penalty, "a", c.penalty.a);
  }
  if (const auto grid = root["grid"]) {
    reject_unknown(grid, "grid", {"count", "min_ratio"});
    c.grid.count = get<std::size_t>(grid, "count", c.grid.count);
    c.grid.min_ratio = get<double>(grid, "min_ratio", c.grid.min_ratio);
  }
  if (const auto solver = root["solver"]) {
    reject_unknown(solver, "solver", {"max_iter", "tol", "kkt_tol"});
    c.solver.max_iter = get<std::size_t>(solver, "max_iter", c.solver.max_iter);
    c.solver.tol = get<double>(solver, "tol", c.solver.tol);
    c.solver.kkt_tol = get<double>(solver, "kkt_tol", c.solver.kkt_tol);
  }
  if (const auto criterion = root["criterion"]) {
    reject_unknown(criterion, "criterion", {"C_N", "K_N"});
    if (criterion["C_N"]) c.C_N = get<double>(criterion, "C_N", 1.0);
    if (criterion["K_N"]) c.K_N = get<std::size_t>(criterion, "K_N", 1);
  }
  const auto dc = get<std::string>(root, "dc_support", "union");
  if (dc != "union" && dc != "majority") throw ConfigError("dc_support must be 'union' or 'majority'");
  c.dc_majority = dc == "majority";
  const auto aggregation = get<std::string>(root, "aggregation", "unweighted");
  if (aggregation == "unweighted")
    c.aggregation = Aggregation::Unweighted;
  else if (aggregation == "size")
    c.aggregation = Aggregation::SizeWeighted;
  else
    throw ConfigError("aggregation must be 'unweighted' or 'size'");

  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str());
}

}  // namespace dcrr
