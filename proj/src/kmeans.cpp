#include "mhgmm/kmeans.hpp"

#include <limits>

#include "mhgmm/errors.hpp"
#include "mhgmm/rng.hpp"

namespace mhgmm {

namespace {

// Squared distances from every row to every center (n x K).
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centers) {
  Eigen::MatrixXd out(data.rows(), centers.rows());
  for (Eigen::Index c = 0; c < centers.rows(); ++c)
    out.col(c) = (data.rowwise() - centers.row(c)).rowwise().squaredNorm();
  return out;
}

Eigen::MatrixXd plus_plus_seed(const Eigen::MatrixXd& data, int k, Rng& rng) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centers(k, data.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = data.row(first(rng));
  Eigen::VectorXd best = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = best.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= best(i);
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = data.row(pick);
    best = best.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Eigen::MatrixXd& data, Eigen::MatrixXd centers, int max_iter) {
  const Eigen::Index n = data.rows();
  const int k = static_cast<int>(centers.rows());
  std::vector<int> labels(n, -1);
  Eigen::VectorXd nearest(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::MatrixXd dist = squared_distances(data, centers);
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      nearest(i) = dist.row(i).minCoeff(&arg);
      if (labels[i] != static_cast<int>(arg)) {
        labels[i] = static_cast<int>(arg);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += data.row(i);
      ++counts(labels[i]);
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0) {
        centers.row(c) = sums.row(c) / counts(c);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its center.
      Eigen::Index far = 0;
      nearest.maxCoeff(&far);
      centers.row(c) = data.row(far);
      nearest(far) = 0.0;
    }
  }
  KMeansResult out;
  const Eigen::MatrixXd dist = squared_distances(data, centers);
  out.clustering.k = k;
  out.clustering.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    out.inertia += dist.row(i).minCoeff(&arg);
    out.clustering.labels[i] = static_cast<int>(arg);
  }
  out.centers = std::move(centers);
  return out;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed, int restarts, int max_iter) {
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (k > data.rows()) throw ConfigError("kmeans: k exceeds the number of observations");
  if (restarts < 1) throw ConfigError("kmeans: restarts must be >= 1");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(stream_seed(seed, {static_cast<std::uint64_t>(r)}));
    KMeansResult run = lloyd(data, plus_plus_seed(data, k, rng), max_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

}  // namespace mhgmm
