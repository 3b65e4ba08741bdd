#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "mhgmm/gmm.hpp"
#include "mhgmm/rng.hpp"

namespace mhgmm {

/// Cross-tabulation of two labelings of the same observations. Labels may
/// be arbitrary non-negative integers; rows/columns follow sorted label order.
struct ContingencyTable {
  Eigen::MatrixX<long long> counts;
  std::vector<long long> row_sums;
  std::vector<long long> col_sums;
  long long total = 0;

  static ContingencyTable build(const std::vector<int>& a, const std::vector<int>& b);
};

/// Hubert-Arabie adjusted Rand index. When both partitions are trivial
/// (max index equals expected index) returns 1 for identical partitions, 0 otherwise.
double ari(const std::vector<int>& a, const std::vector<int>& b);
double ari(const Clustering& a, const Clustering& b);

struct HellingerEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

using LogDensityFn = std::function<double(const Eigen::VectorXd&)>;
using SamplerFn = std::function<Eigen::VectorXd(Rng&)>;

/// Monte-Carlo squared Hellinger distance 1 - E_{x~f*}[sqrt(f(x)/f*(x))],
/// clamped to [0, 1]. Requires n_mc >= 100.
HellingerEstimate mc_hellinger_sq(const LogDensityFn& model_log_density, const SamplerFn& truth_sampler,
                                  const LogDensityFn& truth_log_density, int n_mc, std::uint64_t seed);

HellingerEstimate mc_hellinger_sq(const GmmModel& model, const SamplerFn& truth_sampler,
                                  const LogDensityFn& truth_log_density, int n_mc, std::uint64_t seed);

}  // namespace mhgmm
