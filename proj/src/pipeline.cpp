#include "mhgmm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "mhgmm/errors.hpp"
#include "mhgmm/io.hpp"

namespace mhgmm {

namespace {

// Runs body(i) for i in [0, count) on up to `jobs` threads. The first
// exception thrown by any task is rethrown after all workers finish.
void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(jobs, count); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Fits on the full sample keyed by configuration; the seed depends only on
// the configuration, so the result does not depend on who asks first.
class FullFitCache {
 public:
  FullFitCache(const Eigen::MatrixXd& data, const FitOptions& options, std::uint64_t seed)
      : data_(data), options_(options), seed_(seed) {}

  GmmModel get(const Configuration& config) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = cache_.find(config); it != cache_.end()) return it->second;
    }
    GmmModel model = fit_em(data_, config, Shape::LB, options_,
                            stream_seed(seed_, {static_cast<std::uint64_t>(ConfigurationHash{}(config))}));
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(config, std::move(model)).first->second;
  }

 private:
  const Eigen::MatrixXd& data_;
  FitOptions options_;
  std::uint64_t seed_;
  std::mutex mutex_;
  std::map<Configuration, GmmModel> cache_;
};

nlohmann::json support_json(const Configuration& c) {
  std::vector<int> s;
  s.reserve(c.support.size());
  for (int j : c.support) s.push_back(j + 1);
  return s;
}

nlohmann::json config_json(const Configuration& c) { return {{"K", c.k}, {"S", support_json(c)}}; }

}  // namespace

std::string to_string(ClusteringMode mode) {
  switch (mode) {
    case ClusteringMode::Direct: return "direct";
    case ClusteringMode::Aggregated: return "aggregated";
    case ClusteringMode::Both: return "both";
  }
  return "direct";
}

ClusteringMode parse_clustering_mode(const std::string& name) {
  if (name == "direct") return ClusteringMode::Direct;
  if (name == "aggregated") return ClusteringMode::Aggregated;
  if (name == "both") return ClusteringMode::Both;
  throw ConfigError("unknown clustering mode '" + name + "' (expected direct, aggregated or both)");
}

void RunConfig::validate(int n, int d) const {
  if (splits < 1) throw ConfigError("number of splits must be >= 1");
  if (lambdas.empty()) throw ConfigError("temperature grid must not be empty");
  for (double l : lambdas)
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("temperatures must be positive and finite");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (k_max < 1) throw ConfigError("K_max must be >= 1");
  if (k0 < 1 || k0 > k_max) throw ConfigError("K0 must lie in [1, K_max]");
  if (window < 1) throw ConfigError("selection window must be >= 1");
  if (prune_target && (*prune_target < 0 || *prune_target > d))
    throw ConfigError("prune target must lie in [0, d]");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  if (prior_intensity <= 0.0) throw ConfigError("prior intensity must be positive");
  if (fit.n_starts < 1 || fit.max_iter < 1 || !(fit.tol > 0.0) || !(fit.variance_floor > 0.0))
    throw ConfigError("invalid EM options");
  if (n < 2) throw DataError("need at least two observations");
}

PipelineReport run_pipeline(const Dataset& input, const RunConfig& config) {
  input.validate();
  const Dataset data = input.standardized ? input : standardize(input);
  const int n = data.n();
  const int d = data.d();
  config.validate(n, d);

  const int n_lambda = static_cast<int>(config.lambdas.size());
  ChainOptions chain_options;
  chain_options.steps = config.steps;
  chain_options.k0 = config.k0;
  chain_options.k_max = config.k_max;
  chain_options.prune = config.prune;
  chain_options.prune_target = config.prune_target;
  chain_options.prior_intensity = config.prior_intensity;

  std::vector<std::unique_ptr<StateEvaluator>> evaluators;
  for (int b = 0; b < config.splits; ++b) {
    const auto b64 = static_cast<std::uint64_t>(b);
    const SplitPair sp = split(data, config.split_fraction, stream_seed(config.seed, {1, b64}));
    evaluators.push_back(std::make_unique<StateEvaluator>(data, sp, config.fit, stream_seed(config.seed, {2, b64})));
  }

  std::vector<ChainTrajectory> chains(static_cast<std::size_t>(config.splits) * n_lambda);
  std::vector<Configuration> selected(chains.size());
  parallel_for(static_cast<int>(chains.size()), config.jobs, [&](int task) {
    const int b = task / n_lambda;
    const int li = task % n_lambda;
    ChainTrajectory traj = run_chain(*evaluators[b], config.lambdas[li],
                                     stream_seed(config.seed, {3, static_cast<std::uint64_t>(b),
                                                               static_cast<std::uint64_t>(li)}),
                                     chain_options);
    traj.split_id = b;
    selected[task] = select_configuration(traj, config.window);
    chains[task] = std::move(traj);
  });

  FullFitCache refits(data.values, config.fit, stream_seed(config.seed, {4}));
  {
    std::vector<Configuration> unique(selected.begin(), selected.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    parallel_for(static_cast<int>(unique.size()), config.jobs, [&](int i) { refits.get(unique[i]); });
  }

  PipelineReport report;
  report.n = n;
  report.d = d;
  report.seed = config.seed;
  report.criterion = config.criterion;
  report.splits.resize(config.splits);
  parallel_for(config.splits, config.jobs, [&](int b) {
    std::vector<TemperatureCandidate> candidates;
    for (int li = 0; li < n_lambda; ++li) {
      const Configuration& c = selected[static_cast<std::size_t>(b) * n_lambda + li];
      candidates.push_back({config.lambdas[li], c, refits.get(c)});
    }
    const TemperatureChoice choice = select_temperature(candidates, data.values, config.criterion);
    SplitResult& r = report.splits[b];
    r.split_id = b;
    r.lambdas = config.lambdas;
    for (const auto& c : candidates) r.per_lambda.push_back(c.config);
    r.scores = choice.scores;
    r.chosen_lambda = choice.lambda;
    r.config = choice.config;
    r.model = candidates[choice.index].model;
    r.clustering = map_clustering(r.model, data.values);
  });

  std::vector<Configuration> per_split;
  for (const auto& r : report.splits) per_split.push_back(r.config);
  report.vote = majority_vote(per_split, d);

  report.final_model = refits.get(report.vote.config);
  report.direct = map_clustering(report.final_model, data.values);
  if (config.mode != ClusteringMode::Direct) {
    std::vector<Clustering> clusterings;
    for (const auto& r : report.splits) clusterings.push_back(r.clustering);
    report.aggregated = aggregated_clustering(clusterings, std::min(report.vote.config.k, n));
  }
  if (data.labels) {
    report.ari_direct = ari(report.direct.labels, *data.labels);
    if (report.aggregated) report.ari_aggregated = ari(report.aggregated->labels, *data.labels);
  }
  for (const auto& e : evaluators) report.fits += e->fit_count();
  if (config.keep_trajectories) {
    report.trajectories.resize(config.splits);
    for (int b = 0; b < config.splits; ++b)
      for (int li = 0; li < n_lambda; ++li)
        report.trajectories[b].push_back(std::move(chains[static_cast<std::size_t>(b) * n_lambda + li]));
  }
  return report;
}

nlohmann::json report_to_json(const PipelineReport& report) {
  nlohmann::json j;
  j["eta_hat"] = config_json(report.vote.config);
  j["importance"] = std::vector<double>(report.vote.importance.begin(), report.vote.importance.end());
  j["chosen_by"] = to_string(report.criterion);
  auto per_split = nlohmann::json::array();
  for (const auto& r : report.splits) {
    nlohmann::json s = {{"b", r.split_id + 1}, {"lambda", r.chosen_lambda}, {"K", r.config.k},
                        {"S", support_json(r.config)}};
    auto grid = nlohmann::json::array();
    for (std::size_t i = 0; i < r.lambdas.size(); ++i)
      grid.push_back({{"lambda", r.lambdas[i]},
                      {"K", r.per_lambda[i].k},
                      {"S", support_json(r.per_lambda[i])},
                      {"score", r.scores[i]}});
    s["per_lambda"] = grid;
    per_split.push_back(s);
  }
  j["per_split"] = per_split;
  j["n"] = report.n;
  j["d"] = report.d;
  j["seed"] = report.seed;
  j["ari_direct"] = report.ari_direct ? nlohmann::json(*report.ari_direct) : nlohmann::json(nullptr);
  j["ari_aggregated"] = report.ari_aggregated ? nlohmann::json(*report.ari_aggregated) : nlohmann::json(nullptr);
  return j;
}

void write_pipeline_outputs(const PipelineReport& report, const Dataset& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    return out;
  };
  {
    auto out = open(fs::path(dir) / "report.json");
    out << report_to_json(report).dump(2) << '\n';
  }
  {
    auto out = open(fs::path(dir) / "model.json");
    out << to_json(report.final_model).dump(2) << '\n';
  }
  {
    auto out = open(fs::path(dir) / "clusters.csv");
    write_csv(out, data, CsvOptions{true, true}, &report.direct);
  }
  if (report.aggregated) {
    auto out = open(fs::path(dir) / "clusters_aggregated.csv");
    write_csv(out, data, CsvOptions{true, true}, &*report.aggregated);
  }
  {
    auto out = open(fs::path(dir) / "importance.csv");
    out << "variable,importance\n" << std::setprecision(17);
    for (Eigen::Index j = 0; j < report.vote.importance.size(); ++j)
      out << (j + 1) << ',' << report.vote.importance(j) << '\n';
  }
  {
    auto out = open(fs::path(dir) / "splits.csv");
    out << "b,lambda,K,S\n";
    for (const auto& r : report.splits) {
      out << (r.split_id + 1) << ',' << r.chosen_lambda << ',' << r.config.k << ',';
      for (std::size_t i = 0; i < r.config.support.size(); ++i) out << (i ? ";" : "") << (r.config.support[i] + 1);
      out << '\n';
    }
  }
  if (!report.trajectories.empty()) {
    const fs::path tdir = fs::path(dir) / "trajectories";
    fs::create_directories(tdir);
    for (const auto& per_b : report.trajectories)
      for (std::size_t li = 0; li < per_b.size(); ++li) {
        auto out = open(tdir / ("b" + std::to_string(per_b[li].split_id + 1) + "_lambda" + std::to_string(li + 1) + ".csv"));
        write_trajectory_csv(per_b[li], out);
      }
  }
}

std::vector<int> ExperimentTable::k_histogram() const {
  int k_top = true_k;
  for (const auto& r : rows) k_top = std::max(k_top, r.k_hat);
  std::vector<int> hist(k_top + 1, 0);
  for (const auto& r : rows) ++hist[r.k_hat];
  return hist;
}

double ExperimentTable::mean_true_active() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.true_active;
  return s / static_cast<double>(rows.size());
}

double ExperimentTable::mean_false_active() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.false_active;
  return s / static_cast<double>(rows.size());
}

double ExperimentTable::median_ari() const {
  if (rows.empty()) return 0.0;
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.ari_direct);
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

ExperimentTable run_experiment(ExperimentId id, const RunConfig& base, const ExperimentOptions& options) {
  if (options.replications < 1) throw ConfigError("replications must be >= 1");
  const MixtureSpec spec = experiment_spec(id);
  ExperimentTable table;
  table.experiment = id;
  table.true_k = spec.k();
  table.true_support = spec.active_count();
  for (int r = 0; r < options.replications; ++r) {
    const auto r64 = static_cast<std::uint64_t>(r);
    ExperimentRow row;
    row.replication = r + 1;
    row.data_seed = stream_seed(options.seed, {10, r64});
    Dataset data = simulate(spec, row.data_seed);
    data.provenance = "simulated:" + to_string(id);
    RunConfig cfg = base;
    cfg.seed = stream_seed(options.seed, {11, r64});
    cfg.keep_trajectories = false;
    const PipelineReport report = run_pipeline(data, cfg);
    row.eta_hat = report.vote.config;
    row.k_hat = report.vote.config.k;
    for (int j : report.vote.config.support) (j < spec.active_count() ? row.true_active : row.false_active)++;
    row.false_inactive = spec.active_count() - row.true_active;
    row.true_inactive = (spec.d - spec.active_count()) - row.false_active;
    row.ari_direct = report.ari_direct.value_or(0.0);
    row.ari_aggregated = report.ari_aggregated;
    if (options.hellinger_draws > 0) {
      const TruthDensity truth(spec, data.column_means, data.column_sds);
      row.hellinger = mc_hellinger_sq(
          report.final_model, [&truth](Rng& rng) { return truth.sample(rng); },
          [&truth](const Eigen::VectorXd& z) { return truth.log_density(z); }, options.hellinger_draws,
          stream_seed(options.seed, {12, r64}));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

nlohmann::json experiment_to_json(const ExperimentTable& table) {
  nlohmann::json j;
  j["experiment"] = to_string(table.experiment);
  j["replications"] = table.rows.size();
  j["true_K"] = table.true_k;
  j["true_support_size"] = table.true_support;
  j["K_histogram"] = table.k_histogram();
  j["mean_true_active"] = table.mean_true_active();
  j["mean_false_active"] = table.mean_false_active();
  j["median_ari_direct"] = table.median_ari();
  auto rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json o = {{"replication", r.replication},
                        {"data_seed", r.data_seed},
                        {"eta_hat", config_json(r.eta_hat)},
                        {"true_active", r.true_active},
                        {"false_active", r.false_active},
                        {"true_inactive", r.true_inactive},
                        {"false_inactive", r.false_inactive},
                        {"ari_direct", r.ari_direct}};
    o["ari_aggregated"] = r.ari_aggregated ? nlohmann::json(*r.ari_aggregated) : nlohmann::json(nullptr);
    if (r.hellinger)
      o["hellinger_sq"] = {{"estimate", r.hellinger->estimate}, {"std_error", r.hellinger->std_error}};
    rows.push_back(o);
  }
  j["rows"] = rows;
  return j;
}

void write_experiment_csv(const ExperimentTable& table, std::ostream& out) {
  out << "replication,K,true_active,false_active,true_inactive,false_inactive,ari_direct,ari_aggregated,hellinger_sq\n";
  out << std::setprecision(10);
  for (const auto& r : table.rows) {
    out << r.replication << ',' << r.k_hat << ',' << r.true_active << ',' << r.false_active << ','
        << r.true_inactive << ',' << r.false_inactive << ',' << r.ari_direct << ',';
    if (r.ari_aggregated) out << *r.ari_aggregated;
    out << ',';
    if (r.hellinger) out << r.hellinger->estimate;
    out << '\n';
  }
}

}  // namespace mhgmm
