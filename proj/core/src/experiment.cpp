#include "dcrr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "dcrr/errors.hpp"
#include "dcrr/estimator.hpp"
#include "dcrr/parallel.hpp"
#include "dcrr/rankloss.hpp"
#include "dcrr/rng.hpp"

namespace dcrr {

Metrics compute_metrics(const Vector& beta_hat, const TrueModel& model) {
  if (beta_hat.size() != model.beta_star.size()) throw ConfigError("estimate and truth differ in dimension");
  Metrics m;
  const Vector d = beta_hat - model.beta_star;
  m.l1 = d.lpNorm<1>();
  m.l2 = d.norm();
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const bool selected = beta_hat[j] != 0.0;
    const bool active = model.beta_star[j] != 0.0;
    m.ms += selected;
    m.fp += selected && !active;
    m.fn += !selected && active;
  }
  return m;
}

const MethodOutcome* ReplicateRecord::find(std::string_view label) const {
  for (const auto& m : methods)
    if (m.method == label) return &m;
  return nullptr;
}

const MetricSummary& MethodSummary::metric(std::string_view name) const {
  for (const auto& m : metrics)
    if (m.name == name) return m;
  throw Error("no metric named " + std::string(name));
}

const MethodSummary& ExperimentResult::find(std::size_t machines, std::string_view method) const {
  for (const auto& s : summary)
    if (s.machines == machines && s.method == method) return s;
  throw Error("no summary row for M=" + std::to_string(machines) + " " + std::string(method));
}

namespace {

std::string staged_label(Method m, std::size_t t) {
  return std::string(method_name(m)) + " (T=" + std::to_string(t) + ")";
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

bool wants(const ExperimentConfig& c, Method m) {
  return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
}

InfoCriterionConfig criterion_for(const ExperimentConfig& c, std::size_t N, std::size_t n) {
  auto criterion = InfoCriterionConfig::defaults(N, n);
  if (c.C_N) criterion.C_N = *c.C_N;
  if (c.K_N) criterion.K_N = *c.K_N;
  return criterion;
}

DcrrConfig fit_config(const ExperimentConfig& c, std::size_t T) {
  DcrrConfig d;
  d.k1 = c.k1;
  d.T = T;
  d.penalty = c.penalty;
  d.grid = c.grid;
  d.solver = c.solver;
  return d;
}

Vector dc_combine(const std::vector<FitReport>& local, std::size_t stage, bool majority) {
  const Eigen::Index p = local.front().beta_hat.size();
  Vector avg = Vector::Zero(p);
  std::vector<std::size_t> votes(static_cast<std::size_t>(p), 0);
  for (const auto& r : local) {
    const Vector& b = r.stage(stage);
    avg += b;
    for (Eigen::Index j = 0; j < p; ++j) votes[static_cast<std::size_t>(j)] += b[j] != 0.0;
  }
  avg /= static_cast<double>(local.size());
  if (majority)
    for (Eigen::Index j = 0; j < p; ++j)
      if (2 * votes[static_cast<std::size_t>(j)] <= local.size()) avg[j] = 0.0;
  return avg;
}

std::uint64_t replicate_key(std::size_t machines, std::size_t replicate) {
  return static_cast<std::uint64_t>(machines) * 1000003ULL + replicate;
}

ReplicateRecord replicate_with(const ExperimentConfig& c, const Sampler& sampler, const TrueModel& model,
                               std::size_t M, std::size_t r) {
  ReplicateRecord record;
  record.machines = M;
  record.replicate = r;
  try {
    const Dataset data = sampler.sample(c.error, model, M * c.local_n, replicate_key(M, r));
    Partition part = partition(data.X, data.y, M);
    const SmoothedLoss sl(c.kernel, c.bandwidth);
    const std::size_t N = M * c.local_n;
    auto add = [&](std::string label, const Vector& beta, CommLedger ledger, double ms) {
      record.methods.push_back({std::move(label), compute_metrics(beta, model), ledger, ms});
      return &record.methods.back();
    };

    if (wants(c, Method::CrrLasso) || wants(c, Method::CrrScad) || wants(c, Method::CrrOra)) {
      const Shard pooled = pool(part.shards);
      if (wants(c, Method::CrrLasso) || wants(c, Method::CrrScad)) {
        const auto start = std::chrono::steady_clock::now();
        DcrrConfig d = fit_config(c, wants(c, Method::CrrScad) ? c.effective_baseline_stages() : 1);
        d.criterion = criterion_for(c, N, N);
        const FitReport fit = fit_centralized(pooled, sl, d);
        const double ms = elapsed_ms(start);
        if (wants(c, Method::CrrLasso)) add("CRR-LASSO", fit.stage(1), {}, ms);
        if (wants(c, Method::CrrScad)) add("CRR-SCAD", fit.beta_hat, {}, ms);
      }
      if (wants(c, Method::CrrOra)) {
        const auto start = std::chrono::steady_clock::now();
        const SolveResult ora = fit_centralized_oracle(pooled, sl, model.support, c.solver);
        add("CRR-ORA", ora.beta, {}, elapsed_ms(start));
      }
    }

    if (wants(c, Method::DcrrLasso) || wants(c, Method::DcrrScad) || wants(c, Method::DcrrOra)) {
      const auto start = std::chrono::steady_clock::now();
      const bool staged = wants(c, Method::DcrrScad) || wants(c, Method::DcrrOra);
      DcrrConfig d = fit_config(c, staged ? c.max_stage() : 1);
      d.criterion = criterion_for(c, N, part.master_shard().rows());
      if (wants(c, Method::DcrrOra)) d.oracle_support = model.support;
      InProcessCluster cluster(part, sl);
      cluster.set_aggregation(c.aggregation);
      DcrrEstimator estimator(cluster, d);
      const FitReport fit = estimator.fit();
      const double ms = elapsed_ms(start);
      if (wants(c, Method::DcrrLasso)) add("DCRR-LASSO", fit.stage(1), fit.stage_ledgers.at(0), ms);
      for (std::size_t t : c.stages) {
        if (wants(c, Method::DcrrScad)) {
          auto* row = add(staged_label(Method::DcrrScad, t), fit.stage(t), fit.stage_ledgers.at(t - 1), ms);
          if (wants(c, Method::DcrrOra)) row->oracle_gap = (fit.stage(t) - fit.oracle(t)).lpNorm<Eigen::Infinity>();
        }
        if (wants(c, Method::DcrrOra))
          add(staged_label(Method::DcrrOra, t), fit.oracle(t), fit.stage_ledgers.at(t - 1), ms);
      }
    }

    if (wants(c, Method::DcCrrLasso) || wants(c, Method::DcCrrScad)) {
      const auto start = std::chrono::steady_clock::now();
      const std::size_t T = wants(c, Method::DcCrrScad) ? c.effective_baseline_stages() : 1;
      DcrrConfig d = fit_config(c, T);
      d.criterion = criterion_for(c, N, c.local_n);
      const auto dc = fit_divide_and_conquer(part.shards, sl, d);
      const double ms = elapsed_ms(start);
      if (wants(c, Method::DcCrrLasso)) add("DC-CRR-LASSO", dc_combine(dc.local, 1, c.dc_majority), {}, ms);
      if (wants(c, Method::DcCrrScad)) add("DC-CRR-SCAD", dc_combine(dc.local, T, c.dc_majority), {}, ms);
    }
    record.ok = true;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    record.ok = false;
    record.error = e.what();
    record.methods.clear();
  }
  return record;
}

MetricSummary summarize(std::string name, const std::vector<double>& xs) {
  MetricSummary s{std::move(name)};
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

const std::vector<std::string> kMetricNames{"l1", "l2", "FP", "FN", "MS", "rounds", "gradient_rounds",
                                            "loss_rounds", "bytes_down", "bytes_up"};

}  // namespace

std::vector<std::string> row_labels(const ExperimentConfig& c) {
  std::vector<std::string> labels;
  for (Method m : {Method::CrrLasso, Method::CrrScad, Method::DcrrLasso}) {
    if (wants(c, m)) labels.emplace_back(method_name(m));
  }
  for (std::size_t t : c.stages) {
    if (wants(c, Method::DcrrScad)) labels.push_back(staged_label(Method::DcrrScad, t));
    if (wants(c, Method::DcrrOra)) labels.push_back(staged_label(Method::DcrrOra, t));
  }
  for (Method m : {Method::CrrOra, Method::DcCrrLasso, Method::DcCrrScad}) {
    if (wants(c, m)) labels.emplace_back(method_name(m));
  }
  return labels;
}

ReplicateRecord run_replicate(const ExperimentConfig& config, std::size_t machines, std::size_t replicate) {
  config.validate();
  const Sampler sampler(config.design);
  return replicate_with(config, sampler, make_beta_star(config.design.p), machines, replicate);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  result.hash = config_hash(config);
  const Sampler sampler(config.design);
  const TrueModel model = make_beta_star(config.design.p);

  const std::size_t R = config.replicates;
  const std::size_t total = config.machines.size() * R;
  result.records.resize(total);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  const std::size_t threads = config.threads == 0 ? hardware_threads() : config.threads;
  parallel_for(total, threads, [&](std::size_t task) {
    const std::size_t M = config.machines[task / R];
    result.records[task] = replicate_with(config, sampler, model, M, task % R);
    const std::size_t finished = ++done;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(finished, total);
    }
  });

  const auto labels = row_labels(config);
  for (std::size_t mi = 0; mi < config.machines.size(); ++mi) {
    const std::size_t M = config.machines[mi];
    std::size_t failed = 0;
    std::string first_error;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& rec = result.records[mi * R + r];
      if (!rec.ok) {
        if (failed++ == 0) first_error = rec.error;
      }
    }
    result.failures += failed;
    if (10 * failed > R)
      throw Error(std::to_string(failed) + " of " + std::to_string(R) + " replicates failed for M=" +
                  std::to_string(M) + "; first error: " + first_error);

    for (const auto& label : labels) {
      MethodSummary summary;
      summary.machines = M;
      summary.method = label;
      std::vector<std::vector<double>> columns(kMetricNames.size());
      double wall = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const auto& rec = result.records[mi * R + r];
        if (!rec.ok) continue;
        const MethodOutcome* o = rec.find(label);
        if (o == nullptr) continue;
        const double values[] = {o->metrics.l1,
                                 o->metrics.l2,
                                 static_cast<double>(o->metrics.fp),
                                 static_cast<double>(o->metrics.fn),
                                 static_cast<double>(o->metrics.ms),
                                 static_cast<double>(o->ledger.rounds),
                                 static_cast<double>(o->ledger.gradient_rounds),
                                 static_cast<double>(o->ledger.loss_rounds),
                                 static_cast<double>(o->ledger.bytes_down),
                                 static_cast<double>(o->ledger.bytes_up)};
        for (std::size_t k = 0; k < kMetricNames.size(); ++k) columns[k].push_back(values[k]);
        wall += o->wall_ms;
      }
      summary.replicates = columns[0].size();
      for (std::size_t k = 0; k < kMetricNames.size(); ++k)
        summary.metrics.push_back(summarize(kMetricNames[k], columns[k]));
      summary.wall_ms = summary.replicates ? wall / static_cast<double>(summary.replicates) : 0.0;
      result.summary.push_back(std::move(summary));
    }
  }
  return result;
}

std::string markdown_table(const ExperimentResult& result) {
  const std::vector<std::string> header{"M", "Method", "l1", "l2", "FP", "FN", "MS", "rounds"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : result.summary) {
    auto cell = [&](const char* name, int digits) {
      const auto& m = s.metric(name);
      return fmt(m.mean, digits) + " (" + fmt(m.se, digits) + ")";
    };
    rows.push_back({std::to_string(s.machines), s.method, cell("l1", 3), cell("l2", 3), cell("FP", 2), cell("FN", 2),
                    cell("MS", 2), fmt(s.metric("rounds").mean, 1)});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t k = 0; k < header.size(); ++k) {
    width[k] = header[k].size();
    for (const auto& row : rows) width[k] = std::max(width[k], row[k].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    os << '|';
    for (std::size_t k = 0; k < cells.size(); ++k) os << ' ' << cells[k] << std::string(width[k] - cells[k].size(), ' ') << " |";
    os << '\n';
  };
  os << "### " << result.config.name << " (replicates " << result.config.replicates << ", p " << result.config.design.p
     << ", error " << error_law_name(result.config.error) << ")\n\n";
  line(header);
  os << '|';
  for (std::size_t k = 0; k < header.size(); ++k) os << std::string(width[k] + 2, '-') << '|';
  os << '\n';
  for (const auto& row : rows) line(row);
  if (result.failures > 0) os << "\n" << result.failures << " replicate(s) failed and were excluded.\n";
  return os.str();
}

std::vector<std::filesystem::path> write_results(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(result.hash));
  auto open = [&](const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    written.push_back(path);
    return out;
  };
  for (std::size_t M : result.config.machines) {
    auto out = open(dir / (result.config.name + "_M" + std::to_string(M) + ".csv"));
    out << "method,metric,mean,se,replicates,config_hash\n";
    for (const auto& s : result.summary) {
      if (s.machines != M) continue;
      for (const auto& m : s.metrics)
        out << s.method << ',' << m.name << ',' << fmt_g(m.mean) << ',' << fmt_g(m.se) << ',' << s.replicates << ','
            << hash << '\n';
    }
  }
  {
    auto out = open(dir / (result.config.name + "_timing.csv"));
    out << "machines,method,wall_ms_mean,replicates\n";
    for (const auto& s : result.summary)
      out << s.machines << ',' << s.method << ',' << fmt(s.wall_ms, 3) << ',' << s.replicates << '\n';
  }
  {
    auto out = open(dir / (result.config.name + ".md"));
    out << markdown_table(result);
  }
  return written;
}

CsvFitResult fit_csv(const CsvFitOptions& o) {
  if (!(o.test_fraction >= 0.0 && o.test_fraction < 1.0)) throw ConfigError("test fraction must lie in [0, 1)");
  if (o.machines < 1) throw ConfigError("machines must be at least 1");
  if (o.method == Method::CrrOra || o.method == Method::DcrrOra)
    throw ConfigError("oracle methods need a known support and cannot fit real data");
  if (!o.workers.empty() && o.workers.size() != o.machines)
    throw ConfigError("need one worker endpoint per machine");

  const CsvData data = load_csv(o.csv, o.response, o.center);
  const std::size_t n = static_cast<std::size_t>(data.y.size());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(o.seed, 0, 2);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_test = static_cast<std::size_t>(std::floor(o.test_fraction * static_cast<double>(n)));
  const std::size_t n_train = n - n_test;
  if (n_train < 2 * o.machines) throw ConfigError("too few training rows for the requested number of machines");

  const Eigen::Index p = data.X.cols();
  Matrix Xtr(static_cast<Eigen::Index>(n_train), p), Xte(static_cast<Eigen::Index>(n_test), p);
  Vector ytr(static_cast<Eigen::Index>(n_train)), yte(static_cast<Eigen::Index>(n_test));
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = static_cast<Eigen::Index>(order[i]);
    if (i < n_train) {
      Xtr.row(static_cast<Eigen::Index>(i)) = data.X.row(src);
      ytr[static_cast<Eigen::Index>(i)] = data.y[src];
    } else {
      Xte.row(static_cast<Eigen::Index>(i - n_train)) = data.X.row(src);
      yte[static_cast<Eigen::Index>(i - n_train)] = data.y[src];
    }
  }

  std::vector<std::size_t> sizes(o.machines, n_train / o.machines);
  for (std::size_t m = 0; m < n_train % o.machines; ++m) ++sizes[m];
  const Partition part = partition(Xtr, ytr, sizes);
  const SmoothedLoss sl(o.kernel, o.bandwidth);
  const ExecutionPolicy policy{o.threads};

  const bool lasso = o.method == Method::CrrLasso || o.method == Method::DcrrLasso || o.method == Method::DcCrrLasso;
  DcrrConfig d;
  d.k1 = o.k1;
  d.T = lasso ? 1 : o.stages;

  CsvFitResult out;
  switch (o.method) {
    case Method::CrrLasso:
    case Method::CrrScad:
      out.beta = fit_centralized(pool(part.shards), sl, d, policy).beta_hat;
      break;
    case Method::DcrrLasso:
    case Method::DcrrScad: {
      std::unique_ptr<Cluster> cluster;
      if (o.workers.empty())
        cluster = std::make_unique<InProcessCluster>(part, sl, false, policy);
      else
        cluster = std::make_unique<NetworkCluster>(part, sl, o.workers);
      DcrrEstimator estimator(*cluster, d, policy);
      const FitReport fit = estimator.fit();
      out.beta = fit.beta_hat;
      out.ledger = fit.ledger;
      break;
    }
    case Method::DcCrrLasso:
    case Method::DcCrrScad:
      out.beta = fit_divide_and_conquer(part.shards, sl, d, policy).average;
      break;
    default:
      break;
  }

  Vector resid = ytr - Xtr * out.beta;
  std::vector<double> r(resid.data(), resid.data() + resid.size());
  const std::size_t mid = r.size() / 2;
  std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(mid), r.end());
  out.intercept = r[mid];
  if (r.size() % 2 == 0) {
    const double lower = *std::max_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(mid));
    out.intercept = 0.5 * (out.intercept + lower);
  }

  out.features = data.feature_names;
  out.n_train = n_train;
  out.n_test = n_test;
  out.model_size = support_size(out.beta);
  out.dropped_rows = data.dropped_rows;
  out.dropped_columns = data.dropped_columns;
  out.constant_columns = data.constant_columns;
  if (n_test > 0) {
    const Vector err = yte - (Xte * out.beta).array().matrix() - Vector::Constant(yte.size(), out.intercept);
    const double ybar = ytr.mean();
    const Vector null_err = yte.array() - ybar;
    const double nt = static_cast<double>(n_test);
    out.test_mae = err.lpNorm<1>() / nt;
    out.test_rmse = std::sqrt(err.squaredNorm() / nt);
    out.null_mae = null_err.lpNorm<1>() / nt;
    out.null_rmse = std::sqrt(null_err.squaredNorm() / nt);
  }
  return out;
}

}  // namespace dcrr
