#include "mhgmm/data.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "mhgmm/errors.hpp"

namespace mhgmm {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;
}

void Dataset::validate() const {
  if (values.rows() < 2) throw DataError("dataset needs at least 2 observations");
  if (values.cols() < 1) throw DataError("dataset needs at least 1 variable");
  if (!values.allFinite()) throw DataError("dataset contains missing or non-finite values");
  if (labels && static_cast<int>(labels->size()) != n())
    throw DataError("label count does not match observation count");
}

Dataset standardize(const Dataset& dataset) {
  dataset.validate();
  Dataset out = dataset;
  const int n = dataset.n();
  out.column_means = dataset.values.colwise().mean().transpose();
  out.column_sds.resize(dataset.d());
  for (int j = 0; j < dataset.d(); ++j) {
    auto col = out.values.col(j);
    col.array() -= out.column_means(j);
    const double sd = std::sqrt(col.squaredNorm() / (n - 1));
    // Exact-zero test would miss columns like (0.1, 0.1, 0.1) after centering.
    if (sd <= 1e-12 * std::max(1.0, std::abs(out.column_means(j)))) {
      std::cerr << "warning: column " << (j + 1) << " is constant; left centered\n";
      col.setZero();
      out.column_sds(j) = 0.0;
    } else {
      col /= sd;
      out.column_sds(j) = sd;
    }
  }
  out.standardized = true;
  return out;
}

SplitPair split(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("split fraction must lie strictly between 0 and 1");
  const int n = dataset.n();
  const long n1 = std::lround(fraction * n);
  if (n1 < 1 || n1 >= n)
    throw ConfigError("split fraction " + std::to_string(fraction) + " leaves an empty part for n = " +
                      std::to_string(n));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  SplitPair out;
  out.seed = seed;
  out.learn_indices.assign(perm.begin(), perm.begin() + n1);
  out.estimate_indices.assign(perm.begin() + n1, perm.end());
  std::sort(out.learn_indices.begin(), out.learn_indices.end());
  std::sort(out.estimate_indices.begin(), out.estimate_indices.end());
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

void MixtureSpec::validate() const {
  if (d < 1) throw ConfigError("mixture spec: d must be >= 1");
  if (sizes.empty()) throw ConfigError("mixture spec: at least one component required");
  if (active_means.size() != sizes.size())
    throw ConfigError("mixture spec: one mean vector per component required");
  for (int s : sizes)
    if (s <= 0) throw ConfigError("mixture spec: cluster sizes must be positive");
  const auto s = active_means.front().size();
  for (const auto& m : active_means)
    if (m.size() != s) throw ConfigError("mixture spec: mean vectors differ in length");
  if (static_cast<int>(s) > d) throw ConfigError("mixture spec: more active means than dimensions");
}

ExperimentId parse_experiment_id(const std::string& name) {
  if (name == "illustrative") return ExperimentId::Illustrative;
  if (name == "exp1") return ExperimentId::Exp1;
  if (name == "exp2") return ExperimentId::Exp2;
  throw ConfigError("unknown experiment '" + name + "' (expected illustrative, exp1 or exp2)");
}

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Illustrative: return "illustrative";
    case ExperimentId::Exp1: return "exp1";
    case ExperimentId::Exp2: return "exp2";
  }
  return "unknown";
}

MixtureSpec experiment_spec(ExperimentId id) {
  MixtureSpec spec;
  spec.d = 100;
  switch (id) {
    case ExperimentId::Illustrative:
      spec.active_means = {std::vector<double>(15, 1.0), std::vector<double>(15, 0.0)};
      spec.sizes = {100, 100};
      break;
    case ExperimentId::Exp1: {
      std::vector<double> a(20);
      for (int j = 0; j < 20; ++j) a[j] = 1.0 - 0.05 * j;
      std::vector<double> neg(20);
      std::transform(a.begin(), a.end(), neg.begin(), [](double v) { return -v; });
      spec.active_means = {a, std::vector<double>(20, 0.0), neg};
      spec.sizes = {200, 200, 400};
      break;
    }
    case ExperimentId::Exp2:
      spec.active_means = {std::vector<double>(15, 2.0), std::vector<double>(15, 0.3),
                           std::vector<double>(15, -0.3), std::vector<double>(15, -2.0)};
      spec.sizes = {100, 200, 200, 100};
      break;
  }
  return spec;
}

Dataset simulate(const MixtureSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int n = std::accumulate(spec.sizes.begin(), spec.sizes.end(), 0);
  const int s = spec.active_count();
  Dataset raw;
  raw.values.resize(n, spec.d);
  raw.labels = std::vector<int>(n);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  int row = 0;
  for (int k = 0; k < spec.k(); ++k) {
    for (int i = 0; i < spec.sizes[k]; ++i, ++row) {
      for (int j = 0; j < spec.d; ++j) {
        const double mu = j < s ? spec.active_means[k][j] : 0.0;
        raw.values(row, j) = mu + normal(rng);
      }
      (*raw.labels)[row] = k;
    }
  }
  Dataset out = standardize(raw);
  out.provenance = "simulated";
  return out;
}

Dataset simulate(ExperimentId id, std::uint64_t seed) {
  Dataset out = simulate(experiment_spec(id), seed);
  out.provenance = "simulated:" + to_string(id);
  return out;
}

TruthDensity::TruthDensity(const MixtureSpec& spec, const Eigen::VectorXd& column_means,
                           const Eigen::VectorXd& column_sds)
    : spec_(spec), shift_(column_means), scale_(column_sds) {
  spec_.validate();
  if (column_means.size() != spec.d || column_sds.size() != spec.d)
    throw ConfigError("truth density: standardization vectors must have length d");
  if ((column_sds.array() <= 0.0).any())
    throw ConfigError("truth density: standardization sds must be positive");
  const int k = spec.k();
  means_ = Eigen::MatrixXd::Zero(k, spec.d);
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < spec.active_count(); ++j) means_(c, j) = spec.active_means[c][j];
  const double total = std::accumulate(spec.sizes.begin(), spec.sizes.end(), 0.0);
  log_weights_.resize(k);
  for (int c = 0; c < k; ++c) log_weights_(c) = std::log(spec.sizes[c] / total);
  log_jacobian_ = scale_.array().log().sum();
}

double TruthDensity::log_density(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd x = shift_ + scale_.cwiseProduct(z);
  Eigen::VectorXd terms(means_.rows());
  for (Eigen::Index c = 0; c < means_.rows(); ++c) {
    const double sq = (x.transpose() - means_.row(c)).squaredNorm();
    terms(c) = log_weights_(c) - 0.5 * (spec_.d * kLogTwoPi + sq);
  }
  const double mx = terms.maxCoeff();
  return mx + std::log((terms.array() - mx).exp().sum()) + log_jacobian_;
}

Eigen::VectorXd TruthDensity::sample(Rng& rng) const {
  std::discrete_distribution<int> pick(spec_.sizes.begin(), spec_.sizes.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  const int c = pick(rng);
  Eigen::VectorXd x(spec_.d);
  for (int j = 0; j < spec_.d; ++j) x(j) = means_(c, j) + normal(rng);
  return (x - shift_).cwiseQuotient(scale_);
}

}  // namespace mhgmm
