#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mhgmm/gmm.hpp"
#include "mhgmm/mh.hpp"

namespace mhgmm {

enum class Criterion { Aic, Bic };
std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& name);

/// Most visited configuration among the last `window` states of the
/// post-pruning trajectory; ties go to the configuration visited latest.
/// A window longer than the post-pruning segment uses the whole segment
/// (with a warning on stderr).
Configuration select_configuration(const ChainTrajectory& trajectory, int window = 100);

/// One temperature's candidate: the selected configuration and its refit on the full sample.
struct TemperatureCandidate {
  double lambda = 0.0;
  Configuration config;
  GmmModel model;
};

struct TemperatureChoice {
  std::size_t index = 0;
  double lambda = 0.0;
  Configuration config;
  std::vector<double> scores;  // criterion value per candidate
};

/// argmin over candidates of 2 NLL(X) + penalty * free_params, with penalty 1
/// (AIC) or ln n (BIC); ties go to the smaller lambda. Throws ConfigError on an
/// empty grid.
TemperatureChoice select_temperature(const std::vector<TemperatureCandidate>& candidates,
                                     const Eigen::MatrixXd& full_data, Criterion criterion);

struct SplitResult {
  int split_id = 0;
  std::vector<double> lambdas;
  std::vector<Configuration> per_lambda;  // eta(b, lambda)
  std::vector<double> scores;             // criterion per lambda
  double chosen_lambda = 0.0;
  Configuration config;                   // eta(b)
  GmmModel model;                         // fit of eta(b) on the full sample
  Clustering clustering;                  // MAP clustering of the full sample
};

struct Vote {
  Configuration config;
  Eigen::VectorXd importance;  // fraction of splits in which each variable is active
};

/// Variables active in a strict majority of splits; K is the mean K rounded
/// to nearest with halves rounded down.
Vote majority_vote(const std::vector<Configuration>& per_split, int d);

/// a_ij = number of clusterings placing i and j together.
Eigen::MatrixXi similarity_matrix(const std::vector<Clustering>& clusterings);

/// Average-linkage agglomerative clustering on exp(-a_ij / B), cut at k clusters.
/// Labels are numbered by first appearance.
Clustering aggregated_clustering(const std::vector<Clustering>& clusterings, int k);

/// Average-linkage agglomerative clustering of a dissimilarity matrix cut at k clusters.
Clustering average_linkage(const Eigen::MatrixXd& dissimilarity, int k);

/// Fit on the whole sample at the voted configuration, then MAP clustering.
std::pair<GmmModel, Clustering> final_fit(const Eigen::MatrixXd& full_data, const Configuration& config,
                                          Shape shape, const FitOptions& options, std::uint64_t seed);

}  // namespace mhgmm
