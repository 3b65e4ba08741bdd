#pragma once

#include <Eigen/Dense>
#include "json.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mhgmm {

/// The meta-parameter eta = (K, S): number of mixture components and the
/// sorted set of active (clustering-relevant) variables, 0-based.
struct Configuration {
  int k = 1;
  std::vector<int> support;

  int support_size() const { return static_cast<int>(support.size()); }
  bool contains(int j) const;

  /// Sorts and deduplicates `support`; throws ConfigError on an index outside [0, d).
  void normalize(int d);

  auto operator<=>(const Configuration&) const = default;
  bool operator==(const Configuration&) const = default;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const;
};

/// "K=2 S={1;2;3}" with 1-based indices.
std::string to_string(const Configuration& c);

/// Covariance constraint family on the active block. Only LB (one diagonal
/// covariance shared by all components) is implemented.
enum class Shape { LB };

std::string to_string(Shape shape);
Shape parse_shape(const std::string& name);

/// A fitted constrained mixture. Coordinates outside the support are
/// standard normal in every component and are never stored.
struct GmmModel {
  Configuration config;
  Shape shape = Shape::LB;
  int d = 0;
  Eigen::VectorXd proportions;  // K
  Eigen::MatrixXd means;        // K x |S|
  Eigen::VectorXd variances;    // |S|, shared across components

  int k() const { return config.k; }
  void validate() const;
};

/// Cluster assignments, 0-based in [0, k).
struct Clustering {
  std::vector<int> labels;
  int k = 1;

  int n() const { return static_cast<int>(labels.size()); }
  std::vector<int> sizes() const;
};

/// ln of the standard normal density summed over a vector.
double standard_normal_log_density(const Eigen::Ref<const Eigen::VectorXd>& x);

/// ln f_theta(x): standard normal on the complement of S plus the log of the
/// |S|-dimensional mixture on S.
double log_density(const GmmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Row-wise ln f_theta over a data matrix.
Eigen::VectorXd log_densities(const GmmModel& model, const Eigen::MatrixXd& data);

/// Sum of -ln f_theta over all rows. Throws DataError on an empty matrix.
double neg_log_likelihood(const GmmModel& model, const Eigen::MatrixXd& data);

/// Posterior membership probabilities t_ik (n x K).
Eigen::MatrixXd responsibilities(const GmmModel& model, const Eigen::MatrixXd& data);

/// argmax_k p_k phi_k(x_i); ties go to the lowest component index.
Clustering map_clustering(const GmmModel& model, const Eigen::MatrixXd& data);

/// Number of free parameters of the configuration under the shape:
/// (K-1) + K|S| + |S| for LB. With `legacy_formula` returns (K+1)|S| - 1
/// instead, which is what some theoretical treatments quote for LB.
int free_params(const Configuration& config, Shape shape, bool legacy_formula = false);

struct FitOptions {
  int n_starts = 3;
  double tol = 1e-6;
  int max_iter = 200;
  double variance_floor = 1e-4;
  /// k-means restarts inside each EM start.
  int kmeans_restarts = 1;
};

struct FitDiagnostics {
  /// Full-data NLL after each E-step of the winning start.
  std::vector<double> nll_trace;
  /// Trace indices at which an empty component was re-seeded; EM monotonicity
  /// holds between consecutive entries.
  std::vector<int> reseed_points;
  int iterations = 0;
  bool converged = false;
  int best_start = 0;
};

/// Constrained maximum likelihood by EM on `data` (all rows; the caller
/// passes the estimation sample). Deterministic given the seed.
GmmModel fit_em(const Eigen::MatrixXd& data, const Configuration& config, Shape shape,
                const FitOptions& options, std::uint64_t seed, FitDiagnostics* diagnostics = nullptr);

/// EM from explicit starting parameters, no restarts. Exposed for tests.
GmmModel run_em_from(const Eigen::MatrixXd& data, GmmModel init, const FitOptions& options,
                     FitDiagnostics* diagnostics = nullptr);

nlohmann::json to_json(const GmmModel& model);
GmmModel model_from_json(const nlohmann::json& j);

}  // namespace mhgmm
