#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhgmm/aggregate.hpp"
#include "mhgmm/data.hpp"
#include "mhgmm/eval.hpp"
#include "mhgmm/gmm.hpp"
#include "mhgmm/mh.hpp"

namespace mhgmm {

enum class ClusteringMode { Direct, Aggregated, Both };
std::string to_string(ClusteringMode mode);
ClusteringMode parse_clustering_mode(const std::string& name);

/// Default temperature grid.
inline const std::vector<double> kDefaultLambdas{1, 2, 5, 10, 20, 30, 50, 75, 100};

struct RunConfig {
  int splits = 20;
  std::vector<double> lambdas = kDefaultLambdas;
  double split_fraction = 0.5;
  int steps = 300;
  int k0 = 2;
  int k_max = 10;
  Criterion criterion = Criterion::Bic;
  bool prune = true;
  std::optional<int> prune_target;
  int window = 100;
  double prior_intensity = 1.0;
  std::uint64_t seed = 0;
  ClusteringMode mode = ClusteringMode::Direct;
  int jobs = 1;
  FitOptions fit;
  /// Keep every chain trajectory in the report (needed to write trajectory CSVs).
  bool keep_trajectories = true;

  /// Throws ConfigError on invalid combinations; `d` and `n` are the data dimensions.
  void validate(int n, int d) const;
};

struct PipelineReport {
  int n = 0;
  int d = 0;
  std::uint64_t seed = 0;
  Criterion criterion = Criterion::Bic;
  std::vector<SplitResult> splits;
  /// Indexed [split][lambda] when kept.
  std::vector<std::vector<ChainTrajectory>> trajectories;
  Vote vote;
  GmmModel final_model;
  Clustering direct;
  std::optional<Clustering> aggregated;
  std::optional<double> ari_direct;
  std::optional<double> ari_aggregated;
  long fits = 0;
};

/// Standardizes (when needed), then for every split runs one chain per
/// temperature, selects a configuration per chain, picks the temperature by
/// AIC/BIC, votes across splits and produces the final clustering(s).
/// Deterministic given config.seed regardless of config.jobs.
PipelineReport run_pipeline(const Dataset& data, const RunConfig& config);

nlohmann::json report_to_json(const PipelineReport& report);

/// Writes report.json, model.json, clusters.csv, importance.csv,
/// splits.csv and (when kept) trajectories/b<b>_lambda<i>.csv into `dir`.
void write_pipeline_outputs(const PipelineReport& report, const Dataset& data, const std::string& dir);

struct ExperimentRow {
  int replication = 0;
  std::uint64_t data_seed = 0;
  int k_hat = 0;
  int true_active = 0;
  int false_active = 0;
  int true_inactive = 0;
  int false_inactive = 0;
  double ari_direct = 0.0;
  std::optional<double> ari_aggregated;
  std::optional<HellingerEstimate> hellinger;
  Configuration eta_hat;
};

struct ExperimentTable {
  ExperimentId experiment = ExperimentId::Illustrative;
  int true_k = 0;
  int true_support = 0;
  std::vector<ExperimentRow> rows;

  /// Histogram of selected K (index = K).
  std::vector<int> k_histogram() const;
  double mean_true_active() const;
  double mean_false_active() const;
  double median_ari() const;
};

struct ExperimentOptions {
  int replications = 10;
  std::uint64_t seed = 0;
  /// Monte-Carlo draws for the Hellinger risk of the final fit; 0 disables it.
  int hellinger_draws = 0;
};

/// Repeats simulate + run_pipeline and tabulates selection and clustering quality.
ExperimentTable run_experiment(ExperimentId id, const RunConfig& base, const ExperimentOptions& options);

nlohmann::json experiment_to_json(const ExperimentTable& table);
void write_experiment_csv(const ExperimentTable& table, std::ostream& out);

}  // namespace mhgmm
