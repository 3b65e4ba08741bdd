#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "mhgmm/gmm.hpp"

namespace mhgmm {

struct KMeansResult {
  Clustering clustering;
  Eigen::MatrixXd centers;  // K x d
  double inertia = 0.0;     // within-cluster sum of squares
};

/// Lloyd's algorithm with k-means++ seeding; keeps the restart with the
/// lowest within-cluster sum of squares. Deterministic given the seed.
/// Throws ConfigError when k > n or k < 1.
KMeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed, int restarts = 10,
                    int max_iter = 100);

}  // namespace mhgmm
