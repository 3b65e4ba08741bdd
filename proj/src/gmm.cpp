#include "mhgmm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mhgmm/errors.hpp"
#include "mhgmm/kmeans.hpp"
#include "mhgmm/rng.hpp"

namespace mhgmm {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

// Log of p_k * phi(x_S; mu_k, diag(var)) for every row and component (n x K).
// `active` holds the data restricted to the support columns.
Eigen::MatrixXd component_log_scores(const GmmModel& model, const Eigen::MatrixXd& active) {
  const Eigen::Index n = active.rows();
  const int k = model.k();
  Eigen::MatrixXd scores(n, k);
  if (model.variances.size() == 0) {
    scores.rowwise() = model.proportions.array().log().matrix().transpose();
    return scores;
  }
  const Eigen::VectorXd inv_var = model.variances.cwiseInverse();
  const double log_norm = -0.5 * (static_cast<double>(model.variances.size()) * kLogTwoPi +
                                  model.variances.array().log().sum());
  // (x - m)' V^{-1} (x - m) = x' V^{-1} x - 2 x' V^{-1} m + m' V^{-1} m
  const Eigen::MatrixXd scaled_means = model.means * inv_var.asDiagonal();
  const Eigen::VectorXd x_term = active.array().square().matrix() * inv_var;
  const Eigen::VectorXd m_term = scaled_means.cwiseProduct(model.means).rowwise().sum();
  scores.noalias() = active * scaled_means.transpose();
  for (int c = 0; c < k; ++c)
    scores.col(c) = (std::log(model.proportions(c)) + log_norm - 0.5 * m_term(c)) +
                    (scores.col(c) - 0.5 * x_term).array();
  return scores;
}

// Row-wise log-sum-exp.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& scores) {
  const Eigen::VectorXd mx = scores.rowwise().maxCoeff();
  Eigen::VectorXd out(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (!std::isfinite(mx(i))) {
      out(i) = mx(i);
      continue;
    }
    out(i) = mx(i) + std::log((scores.row(i).array() - mx(i)).exp().sum());
  }
  return out;
}

Eigen::MatrixXd active_columns(const Eigen::MatrixXd& data, const Configuration& config) {
  return data(Eigen::all, config.support);
}

// Sum over rows of the standard normal log-density on the complement of S.
double noise_log_likelihood(const Eigen::MatrixXd& data, const Configuration& config) {
  double total = -0.5 * kLogTwoPi * static_cast<double>(data.rows()) *
                 static_cast<double>(data.cols() - config.support_size());
  Eigen::VectorXd col_sq = data.colwise().squaredNorm().transpose();
  for (int j : config.support) col_sq(j) = 0.0;
  return total - 0.5 * col_sq.sum();
}

void check_dimension(const GmmModel& model, Eigen::Index cols) {
  if (cols != model.d)
    throw DataError("dimension mismatch: model has d = " + std::to_string(model.d) + ", data has " +
                    std::to_string(cols));
}

}  // namespace

bool Configuration::contains(int j) const {
  return std::binary_search(support.begin(), support.end(), j);
}

void Configuration::normalize(int d) {
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (!support.empty() && (support.front() < 0 || support.back() >= d))
    throw ConfigError("support index outside [1, " + std::to_string(d) + "]");
  if (k < 1) throw ConfigError("cluster count must be >= 1");
}

std::size_t ConfigurationHash::operator()(const Configuration& c) const {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(c.k));
  for (int j : c.support) h = mix64(h ^ static_cast<std::uint64_t>(j));
  return static_cast<std::size_t>(h);
}

std::string to_string(const Configuration& c) {
  std::ostringstream os;
  os << "K=" << c.k << " S={";
  for (std::size_t i = 0; i < c.support.size(); ++i) os << (i ? ";" : "") << (c.support[i] + 1);
  os << "}";
  return os.str();
}

std::string to_string(Shape) { return "LB"; }

Shape parse_shape(const std::string& name) {
  if (name == "LB" || name == "lb") return Shape::LB;
  throw ConfigError("unsupported shape '" + name + "' (only LB is available)");
}

void GmmModel::validate() const {
  const int s = config.support_size();
  if (proportions.size() != config.k || means.rows() != config.k || means.cols() != s ||
      variances.size() != s)
    throw DataError("model parameter shapes do not match its configuration");
  if (std::abs(proportions.sum() - 1.0) > 1e-9 || (proportions.array() < 0.0).any())
    throw DataError("model proportions must be non-negative and sum to 1");
  if ((variances.array() <= 0.0).any()) throw DataError("model variances must be positive");
  if (!config.support.empty() && config.support.back() >= d)
    throw DataError("model support exceeds its dimension");
}

std::vector<int> Clustering::sizes() const {
  std::vector<int> out(k, 0);
  for (int l : labels) ++out[l];
  return out;
}

double standard_normal_log_density(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return -0.5 * (static_cast<double>(x.size()) * kLogTwoPi + x.squaredNorm());
}

double log_density(const GmmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dimension(model, x.size());
  Eigen::MatrixXd row = x.transpose();
  return log_densities(model, row)(0);
}

Eigen::VectorXd log_densities(const GmmModel& model, const Eigen::MatrixXd& data) {
  check_dimension(model, data.cols());
  const Eigen::MatrixXd active = active_columns(data, model.config);
  Eigen::VectorXd noise = -0.5 * (data.rowwise().squaredNorm() - active.rowwise().squaredNorm());
  noise.array() -= 0.5 * kLogTwoPi * static_cast<double>(model.d - model.config.support_size());
  return noise + log_sum_exp_rows(component_log_scores(model, active));
}

double neg_log_likelihood(const GmmModel& model, const Eigen::MatrixXd& data) {
  if (data.rows() == 0) throw DataError("negative log-likelihood of an empty sample");
  const double nll = -log_densities(model, data).sum();
  if (!std::isfinite(nll)) throw NumericalError("non-finite negative log-likelihood");
  return nll;
}

Eigen::MatrixXd responsibilities(const GmmModel& model, const Eigen::MatrixXd& data) {
  check_dimension(model, data.cols());
  Eigen::MatrixXd scores = component_log_scores(model, active_columns(data, model.config));
  const Eigen::VectorXd lse = log_sum_exp_rows(scores);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) scores.row(i) = (scores.row(i).array() - lse(i)).exp();
  return scores;
}

Clustering map_clustering(const GmmModel& model, const Eigen::MatrixXd& data) {
  check_dimension(model, data.cols());
  const Eigen::MatrixXd scores = component_log_scores(model, active_columns(data, model.config));
  Clustering out;
  out.k = model.k();
  out.labels.resize(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < model.k(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    out.labels[i] = best;
  }
  return out;
}

int free_params(const Configuration& config, Shape, bool legacy_formula) {
  const int s = config.support_size();
  if (legacy_formula) return std::max(0, (config.k + 1) * s - 1);
  return (config.k - 1) + config.k * s + s;
}

GmmModel run_em_from(const Eigen::MatrixXd& data, GmmModel model, const FitOptions& options,
                     FitDiagnostics* diagnostics) {
  check_dimension(model, data.cols());
  const Eigen::Index n = data.rows();
  const int k = model.k();
  const Eigen::MatrixXd active = active_columns(data, model.config);
  const double noise = noise_log_likelihood(data, model.config);
  const Eigen::VectorXd sum_sq = active.colwise().squaredNorm().transpose();
  FitDiagnostics diag;

  bool reseeded = false;
  bool just_reseeded = false;
  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    // E-step at the current parameters.
    Eigen::MatrixXd t = component_log_scores(model, active);
    const Eigen::VectorXd lse = log_sum_exp_rows(t);
    const double nll = -(noise + lse.sum());
    if (!std::isfinite(nll)) throw NumericalError("EM produced a non-finite likelihood");
    diag.nll_trace.push_back(nll);
    diag.iterations = iter;
    if (!just_reseeded && std::isfinite(prev) && (prev - nll) < options.tol * std::abs(prev)) {
      diag.converged = true;
      break;
    }
    just_reseeded = false;
    if (iter >= options.max_iter || active.cols() == 0) {
      diag.converged = active.cols() == 0;
      break;
    }
    prev = nll;
    for (Eigen::Index i = 0; i < n; ++i) t.row(i) = (t.row(i).array() - lse(i)).exp();

    // M-step for the shared-diagonal shape.
    // Pooled within-component variance: sum_i x_ij^2 - sum_c n_c m_cj^2.
    const Eigen::VectorXd nk = t.colwise().sum().transpose();
    const Eigen::MatrixXd weighted = t.transpose() * active;
    Eigen::VectorXd var = sum_sq;
    for (int c = 0; c < k; ++c) {
      if (nk(c) <= 0.0) continue;
      model.means.row(c) = weighted.row(c) / nk(c);
      var -= nk(c) * model.means.row(c).cwiseAbs2().transpose();
    }
    model.variances = (var / static_cast<double>(n)).cwiseMax(options.variance_floor);
    model.proportions = nk / static_cast<double>(n);

    const double empty_below = 1.0 / (2.0 * static_cast<double>(n));
    if (!reseeded && (model.proportions.array() < empty_below).any()) {
      // Re-seed starved components on the points the current fit explains worst.
      std::vector<Eigen::Index> order(n);
      for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return lse(a) != lse(b) ? lse(a) < lse(b) : a < b;
      });
      std::size_t next = 0;
      for (int c = 0; c < k; ++c) {
        if (model.proportions(c) >= empty_below) continue;
        model.means.row(c) = active.row(order[next++]);
        model.proportions(c) = 1.0 / static_cast<double>(n);
      }
      model.proportions /= model.proportions.sum();
      reseeded = true;
      just_reseeded = true;
      diag.reseed_points.push_back(static_cast<int>(diag.nll_trace.size()));
    }
  }
  if (diagnostics) *diagnostics = std::move(diag);
  return model;
}

GmmModel fit_em(const Eigen::MatrixXd& data, const Configuration& config, Shape shape,
                const FitOptions& options, std::uint64_t seed, FitDiagnostics* diagnostics) {
  if (config.k < 1) throw ConfigError("fit_em: K must be >= 1");
  if (config.k > data.rows())
    throw DataError("fit_em: K = " + std::to_string(config.k) + " exceeds the sample size " +
                    std::to_string(data.rows()));
  if (options.n_starts < 1) throw ConfigError("fit_em: n_starts must be >= 1");
  const int s = config.support_size();
  if (!config.support.empty() && config.support.back() >= data.cols())
    throw DataError("fit_em: support index exceeds data dimension");

  GmmModel init;
  init.config = config;
  init.shape = shape;
  init.d = static_cast<int>(data.cols());
  init.proportions = Eigen::VectorXd::Constant(config.k, 1.0 / config.k);
  init.means = Eigen::MatrixXd::Zero(config.k, s);
  init.variances = Eigen::VectorXd::Ones(s);

  if (s == 0) {
    // Pure-noise model: nothing to estimate.
    return run_em_from(data, init, options, diagnostics);
  }

  const Eigen::MatrixXd active = active_columns(data, config);
  const Eigen::RowVectorXd mean = active.colwise().mean();
  init.variances = ((active.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(data.rows()))
                       .transpose()
                       .cwiseMax(options.variance_floor);

  GmmModel best;
  FitDiagnostics best_diag;
  double best_nll = std::numeric_limits<double>::infinity();
  for (int start = 0; start < options.n_starts; ++start) {
    GmmModel candidate = init;
    const auto km = kmeans(active, config.k, stream_seed(seed, {static_cast<std::uint64_t>(start)}),
                           options.kmeans_restarts);
    candidate.means = km.centers;
    FitDiagnostics diag;
    candidate = run_em_from(data, std::move(candidate), options, &diag);
    const double nll = diag.nll_trace.back();
    if (nll < best_nll) {
      best_nll = nll;
      best = std::move(candidate);
      best_diag = std::move(diag);
      best_diag.best_start = start;
    }
    if (config.k == 1) break;  // every start is identical
  }
  if (!std::isfinite(best_nll)) throw NumericalError("fit_em: no start produced a finite fit");
  if (diagnostics) *diagnostics = std::move(best_diag);
  return best;
}

nlohmann::json to_json(const GmmModel& model) {
  nlohmann::json j;
  j["K"] = model.config.k;
  std::vector<int> s;
  for (int v : model.config.support) s.push_back(v + 1);
  j["S"] = s;
  j["shape"] = to_string(model.shape);
  j["d"] = model.d;
  j["proportions"] = std::vector<double>(model.proportions.begin(), model.proportions.end());
  auto means = nlohmann::json::array();
  for (Eigen::Index c = 0; c < model.means.rows(); ++c) {
    std::vector<double> row(model.means.cols());
    for (Eigen::Index j2 = 0; j2 < model.means.cols(); ++j2) row[j2] = model.means(c, j2);
    means.push_back(row);
  }
  j["means"] = means;
  j["variances"] = std::vector<double>(model.variances.begin(), model.variances.end());
  return j;
}

GmmModel model_from_json(const nlohmann::json& j) {
  try {
    GmmModel m;
    m.config.k = j.at("K").get<int>();
    for (int v : j.at("S").get<std::vector<int>>()) m.config.support.push_back(v - 1);
    m.d = j.at("d").get<int>();
    m.config.normalize(m.d);
    m.shape = parse_shape(j.at("shape").get<std::string>());
    const auto p = j.at("proportions").get<std::vector<double>>();
    m.proportions = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    const auto rows = j.at("means").get<std::vector<std::vector<double>>>();
    m.means.resize(static_cast<Eigen::Index>(rows.size()), m.config.support_size());
    for (std::size_t c = 0; c < rows.size(); ++c) {
      if (static_cast<int>(rows[c].size()) != m.config.support_size())
        throw DataError("model JSON: mean row length differs from |S|");
      for (std::size_t q = 0; q < rows[c].size(); ++q) m.means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(q)) = rows[c][q];
    }
    const auto v = j.at("variances").get<std::vector<double>>();
    m.variances = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace mhgmm
