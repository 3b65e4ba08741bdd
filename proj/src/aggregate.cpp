#include "mhgmm/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>

#include "mhgmm/errors.hpp"

namespace mhgmm {

std::string to_string(Criterion c) { return c == Criterion::Aic ? "aic" : "bic"; }

Criterion parse_criterion(const std::string& name) {
  if (name == "aic" || name == "AIC") return Criterion::Aic;
  if (name == "bic" || name == "BIC") return Criterion::Bic;
  throw ConfigError("unknown criterion '" + name + "' (expected aic or bic)");
}

Configuration select_configuration(const ChainTrajectory& trajectory, int window) {
  if (window < 1) throw ConfigError("selection window must be >= 1");
  const int begin_post = std::min(trajectory.pruning_end, trajectory.size());
  const int post = trajectory.size() - begin_post;
  if (post <= 0) {
    if (trajectory.states.empty()) throw DataError("select_configuration: empty trajectory");
    std::cerr << "warning: chain never left the pruning phase; using its last state\n";
    return trajectory.states.back().config;
  }
  if (window > post)
    std::cerr << "warning: selection window " << window << " exceeds the " << post
              << " post-pruning states; using all of them\n";
  const int first = trajectory.size() - std::min(window, post);

  struct Tally {
    int count = 0;
    int last_seen = -1;
  };
  std::map<Configuration, Tally> tally;
  for (int i = first; i < trajectory.size(); ++i) {
    auto& t = tally[trajectory.states[i].config];
    ++t.count;
    t.last_seen = i;
  }
  const auto best = std::max_element(tally.begin(), tally.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count < b.second.count;
    return a.second.last_seen < b.second.last_seen;
  });
  return best->first;
}

TemperatureChoice select_temperature(const std::vector<TemperatureCandidate>& candidates,
                                     const Eigen::MatrixXd& full_data, Criterion criterion) {
  if (candidates.empty()) throw ConfigError("select_temperature: empty temperature grid");
  const double penalty = criterion == Criterion::Aic ? 1.0 : std::log(static_cast<double>(full_data.rows()));
  TemperatureChoice out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const double score =
        2.0 * neg_log_likelihood(c.model, full_data) + penalty * free_params(c.config, c.model.shape);
    out.scores.push_back(score);
    const bool better = score < best || (score == best && c.lambda < candidates[out.index].lambda);
    if (better) {
      best = score;
      out.index = i;
    }
  }
  out.lambda = candidates[out.index].lambda;
  out.config = candidates[out.index].config;
  return out;
}

Vote majority_vote(const std::vector<Configuration>& per_split, int d) {
  if (per_split.empty()) throw ConfigError("majority_vote: no split results");
  const long b = static_cast<long>(per_split.size());
  Eigen::VectorXi active = Eigen::VectorXi::Zero(d);
  long k_sum = 0;
  for (const auto& c : per_split) {
    for (int j : c.support) {
      if (j < 0 || j >= d) throw ConfigError("majority_vote: support index outside [0, d)");
      ++active(j);
    }
    k_sum += c.k;
  }
  Vote out;
  out.importance = active.cast<double>() / static_cast<double>(b);
  for (int j = 0; j < d; ++j)
    if (2L * active(j) > b) out.config.support.push_back(j);
  // Nearest integer to k_sum / b with exact halves rounded down.
  out.config.k = static_cast<int>(std::max(1L, (2 * k_sum + b - 1) / (2 * b)));
  return out;
}

Eigen::MatrixXi similarity_matrix(const std::vector<Clustering>& clusterings) {
  if (clusterings.empty()) throw ConfigError("similarity_matrix: no clusterings");
  const int n = clusterings.front().n();
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n, n);
  for (const auto& c : clusterings) {
    if (c.n() != n) throw DataError("similarity_matrix: clusterings differ in length");
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (c.labels[i] == c.labels[j]) ++a(i, j);
  }
  a.triangularView<Eigen::StrictlyLower>() = a.transpose().triangularView<Eigen::StrictlyLower>();
  return a;
}

Clustering average_linkage(const Eigen::MatrixXd& dissimilarity, int k) {
  const int n = static_cast<int>(dissimilarity.rows());
  if (dissimilarity.cols() != n) throw DataError("average_linkage: dissimilarity must be square");
  if (k < 1 || k > n) throw ConfigError("average_linkage: k must lie in [1, n]");
  Eigen::MatrixXd dist = dissimilarity;
  std::vector<int> size(n, 1);
  std::vector<int> owner(n);  // cluster representative per observation
  std::vector<int> alive(n);
  for (int i = 0; i < n; ++i) owner[i] = alive[i] = i;

  while (static_cast<int>(alive.size()) > k) {
    // Closest pair; ties go to the lexicographically smallest (i, j).
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t p = 0; p < alive.size(); ++p)
      for (std::size_t q = p + 1; q < alive.size(); ++q) {
        const double v = dist(alive[p], alive[q]);
        if (v < best) {
          best = v;
          bi = p;
          bj = q;
        }
      }
    const int i = alive[bi];
    const int j = alive[bj];
    const double wi = size[i];
    const double wj = size[j];
    for (int m : alive) {
      if (m == i || m == j) continue;
      const double v = (wi * dist(i, m) + wj * dist(j, m)) / (wi + wj);
      dist(i, m) = dist(m, i) = v;
    }
    size[i] += size[j];
    for (int& o : owner)
      if (o == j) o = i;
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  Clustering out;
  out.k = k;
  out.labels.resize(n);
  std::map<int, int> relabel;
  for (int i = 0; i < n; ++i) {
    auto [it, inserted] = relabel.emplace(owner[i], static_cast<int>(relabel.size()));
    out.labels[i] = it->second;
  }
  return out;
}

Clustering aggregated_clustering(const std::vector<Clustering>& clusterings, int k) {
  const Eigen::MatrixXi a = similarity_matrix(clusterings);
  const double b = static_cast<double>(clusterings.size());
  if (k > a.rows()) throw ConfigError("aggregated_clustering: K exceeds the number of observations");
  const Eigen::MatrixXd dissim = (-a.cast<double>().array() / b).exp().matrix();
  return average_linkage(dissim, k);
}

std::pair<GmmModel, Clustering> final_fit(const Eigen::MatrixXd& full_data, const Configuration& config,
                                          Shape shape, const FitOptions& options, std::uint64_t seed) {
  GmmModel model = fit_em(full_data, config, shape, options, seed);
  Clustering clustering = map_clustering(model, full_data);
  return {std::move(model), std::move(clustering)};
}

}  // namespace mhgmm
