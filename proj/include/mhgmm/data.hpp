#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mhgmm/rng.hpp"

namespace mhgmm {

/// An n x d numeric sample. Labels are 0-based cluster ids when known
/// (simulated data); the I/O layer converts to 1-based on disk.
struct Dataset {
  Eigen::MatrixXd values;
  std::optional<std::vector<int>> labels;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_sds;
  bool standardized = false;
  std::string provenance;

  int n() const { return static_cast<int>(values.rows()); }
  int d() const { return static_cast<int>(values.cols()); }

  /// Throws DataError unless n >= 2, d >= 1 and every entry is finite.
  void validate() const;
};

/// Disjoint learning (X1) / estimation (X2) index sets covering 0..n-1.
struct SplitPair {
  std::vector<int> learn_indices;
  std::vector<int> estimate_indices;
  std::uint64_t seed = 0;
};

/// Centers every column and scales non-constant columns to unit sample sd
/// (divisor n - 1). Constant columns are centered, get sd 0 recorded and
/// produce a warning on stderr.
Dataset standardize(const Dataset& dataset);

/// Uniform random partition with |X1| = round(fraction * n).
SplitPair split(const Dataset& dataset, double fraction, std::uint64_t seed);

/// Gathers the given rows of a matrix.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows);

/// A Gaussian mixture with identity covariance whose first `active_means[k].size()`
/// coordinates carry component-specific means; the remaining coordinates are N(0,1).
struct MixtureSpec {
  int d = 0;
  std::vector<std::vector<double>> active_means;  // K rows of equal length s <= d
  std::vector<int> sizes;                         // K cluster sizes

  int k() const { return static_cast<int>(sizes.size()); }
  int active_count() const {
    return active_means.empty() ? 0 : static_cast<int>(active_means.front().size());
  }
  void validate() const;
};

/// Named generators for the three reference experiments.
enum class ExperimentId { Illustrative, Exp1, Exp2 };

ExperimentId parse_experiment_id(const std::string& name);
std::string to_string(ExperimentId id);
MixtureSpec experiment_spec(ExperimentId id);

/// Draws each component's block of rows in order, keeps labels, then
/// standardizes the whole sample.
Dataset simulate(const MixtureSpec& spec, std::uint64_t seed);
Dataset simulate(ExperimentId id, std::uint64_t seed);

/// The generating density of a simulated dataset, expressed in the
/// standardized coordinates of that dataset. Used for Monte-Carlo risk.
class TruthDensity {
 public:
  TruthDensity(const MixtureSpec& spec, const Eigen::VectorXd& column_means,
               const Eigen::VectorXd& column_sds);

  double log_density(const Eigen::VectorXd& z) const;
  Eigen::VectorXd sample(Rng& rng) const;
  int d() const { return spec_.d; }

 private:
  MixtureSpec spec_;
  Eigen::MatrixXd means_;  // K x d, raw coordinates
  Eigen::VectorXd log_weights_;
  Eigen::VectorXd shift_;
  Eigen::VectorXd scale_;
  double log_jacobian_ = 0.0;
};

}  // namespace mhgmm
