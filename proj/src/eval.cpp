#include "mhgmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mhgmm/errors.hpp"

namespace mhgmm {

namespace {

long long pairs(long long m) { return m * (m - 1) / 2; }

std::map<int, int> dense_index(const std::vector<int>& labels) {
  std::map<int, int> idx;
  for (int l : labels) idx.emplace(l, 0);
  int next = 0;
  for (auto& [label, slot] : idx) slot = next++;
  return idx;
}

}  // namespace

ContingencyTable ContingencyTable::build(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("contingency table: labelings differ in length");
  const auto ra = dense_index(a);
  const auto rb = dense_index(b);
  ContingencyTable t;
  t.counts = Eigen::MatrixX<long long>::Zero(static_cast<Eigen::Index>(ra.size()), static_cast<Eigen::Index>(rb.size()));
  for (std::size_t i = 0; i < a.size(); ++i) ++t.counts(ra.at(a[i]), rb.at(b[i]));
  t.row_sums.assign(ra.size(), 0);
  t.col_sums.assign(rb.size(), 0);
  for (Eigen::Index r = 0; r < t.counts.rows(); ++r)
    for (Eigen::Index c = 0; c < t.counts.cols(); ++c) {
      t.row_sums[r] += t.counts(r, c);
      t.col_sums[c] += t.counts(r, c);
    }
  t.total = static_cast<long long>(a.size());
  return t;
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  const ContingencyTable t = ContingencyTable::build(a, b);
  long long index = 0;
  for (Eigen::Index r = 0; r < t.counts.rows(); ++r)
    for (Eigen::Index c = 0; c < t.counts.cols(); ++c) index += pairs(t.counts(r, c));
  long long sum_a = 0;
  long long sum_b = 0;
  for (long long v : t.row_sums) sum_a += pairs(v);
  for (long long v : t.col_sums) sum_b += pairs(v);
  const long long total_pairs = pairs(t.total);

  // Identical partitions have index == sum_a == sum_b.
  const bool identical = index == sum_a && index == sum_b;
  if (total_pairs == 0) return identical ? 1.0 : 0.0;
  const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / static_cast<double>(total_pairs);
  const double max_index = 0.5 * static_cast<double>(sum_a + sum_b);
  if (max_index == expected) return identical ? 1.0 : 0.0;
  return (static_cast<double>(index) - expected) / (max_index - expected);
}

double ari(const Clustering& a, const Clustering& b) { return ari(a.labels, b.labels); }

HellingerEstimate mc_hellinger_sq(const LogDensityFn& model_log_density, const SamplerFn& truth_sampler,
                                  const LogDensityFn& truth_log_density, int n_mc, std::uint64_t seed) {
  if (n_mc < 100) throw ConfigError("mc_hellinger_sq: n_mc must be >= 100");
  Rng rng(seed);
  double mean = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    const Eigen::VectorXd x = truth_sampler(rng);
    const double lf = model_log_density(x);
    const double lt = truth_log_density(x);
    if (!std::isfinite(lt) || std::isnan(lf))
      throw NumericalError("mc_hellinger_sq: non-finite log-density at a sampled point");
    const double ratio = std::exp(0.5 * (lf - lt));
    // Welford update.
    const double delta = ratio - mean;
    mean += delta / (i + 1);
    m2 += delta * (ratio - mean);
  }
  HellingerEstimate out;
  out.estimate = std::clamp(1.0 - mean, 0.0, 1.0);
  out.std_error = std::sqrt(m2 / (n_mc - 1) / n_mc);
  return out;
}

HellingerEstimate mc_hellinger_sq(const GmmModel& model, const SamplerFn& truth_sampler,
                                  const LogDensityFn& truth_log_density, int n_mc, std::uint64_t seed) {
  return mc_hellinger_sq([&model](const Eigen::VectorXd& x) { return log_density(model, x); }, truth_sampler,
                         truth_log_density, n_mc, seed);
}

}  // namespace mhgmm
