#include "mhgmm/mh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>

#include "mhgmm/errors.hpp"
#include "mhgmm/kmeans.hpp"

namespace mhgmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// H(K, .) as probabilities of (K-1, K, K+1).
struct ClusterMove {
  double down = 0.0;
  double stay = 0.0;
  double up = 0.0;
};

ClusterMove cluster_kernel(int k, int k_max) {
  if (k_max <= 1) return {0.0, 1.0, 0.0};
  if (k <= 1) return {0.0, 0.5, 0.5};
  if (k >= k_max) return {0.5, 0.5, 0.0};
  return {0.25, 0.5, 0.25};
}

// Probability of an add move given that K is unchanged.
double add_probability(int support_size, int d) {
  if (support_size == 0) return 1.0;
  if (support_size == d) return 0.0;
  return 0.5;
}

std::vector<int> complement(const Configuration& c, int d) {
  std::vector<int> out;
  out.reserve(d - c.support_size());
  for (int j = 0, q = 0; j < d; ++j) {
    if (q < c.support_size() && c.support[q] == j) {
      ++q;
      continue;
    }
    out.push_back(j);
  }
  return out;
}

// Add weights: between-variance over candidates outside S, uniform when all vanish.
std::vector<double> add_weights(const BetweenVariance& bv, const std::vector<int>& candidates) {
  std::vector<double> w(candidates.size());
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    w[i] = std::max(0.0, bv.per_variable(candidates[i]));
    total += w[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) std::fill(w.begin(), w.end(), 1.0);
  return w;
}

std::vector<double> remove_weights(const BetweenVariance& bv, const std::vector<int>& candidates) {
  std::vector<double> w(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    w[i] = 1.0 / (std::max(0.0, bv.per_variable(candidates[i])) + kInverseVarbEpsilon);
  return w;
}

std::size_t draw_index(const std::vector<double>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  // Rounding fallthrough: last candidate with positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

double log_weight_fraction(const std::vector<double>& weights, std::size_t pick) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  return std::log(weights[pick]) - std::log(total);
}

}  // namespace

std::string to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::Init: return "init";
    case MoveKind::KDown: return "k_down";
    case MoveKind::KUp: return "k_up";
    case MoveKind::Add: return "add";
    case MoveKind::Remove: return "remove";
    case MoveKind::Prune: return "prune";
  }
  return "unknown";
}

BetweenVariance between_variance(const Clustering& clustering, const Eigen::MatrixXd& data) {
  if (clustering.n() != data.rows()) throw DataError("between_variance: label count differs from n");
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(clustering.k, data.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(clustering.k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = clustering.labels[i];
    if (l < 0 || l >= clustering.k) throw DataError("between_variance: label out of range");
    sums.row(l) += data.row(i);
    counts(l) += 1.0;
  }
  const Eigen::RowVectorXd global = data.colwise().mean();
  BetweenVariance out;
  out.per_variable = Eigen::VectorXd::Zero(data.cols());
  for (int c = 0; c < clustering.k; ++c) {
    if (counts(c) == 0.0) continue;
    const Eigen::RowVectorXd diff = sums.row(c) / counts(c) - global;
    out.per_variable += counts(c) * diff.array().square().matrix().transpose();
  }
  out.per_variable /= static_cast<double>(n);
  out.total = out.per_variable.sum();
  return out;
}

Proposal propose(const ChainState& state, Rng& rng, const KernelParams& params) {
  const Configuration& cur = state.config;
  const ClusterMove h = cluster_kernel(cur.k, params.k_max);
  const double u = uniform01(rng);
  Proposal out;
  out.config = cur;
  if (u < h.down) {
    out.config.k = cur.k - 1;
    out.kind = MoveKind::KDown;
    out.log_fwd = std::log(h.down);
    return out;
  }
  if (u < h.down + h.up) {
    out.config.k = cur.k + 1;
    out.kind = MoveKind::KUp;
    out.log_fwd = std::log(h.up);
    return out;
  }
  const double p_add = add_probability(cur.support_size(), params.d);
  if (uniform01(rng) < p_add) {
    const std::vector<int> candidates = complement(cur, params.d);
    const auto w = add_weights(state.between, candidates);
    const std::size_t pick = draw_index(w, rng);
    out.config.support.insert(std::lower_bound(out.config.support.begin(), out.config.support.end(), candidates[pick]),
                              candidates[pick]);
    out.kind = MoveKind::Add;
    out.log_fwd = std::log(h.stay) + std::log(p_add) + log_weight_fraction(w, pick);
  } else {
    const auto w = remove_weights(state.between, cur.support);
    const std::size_t pick = draw_index(w, rng);
    out.config.support.erase(out.config.support.begin() + static_cast<std::ptrdiff_t>(pick));
    out.kind = MoveKind::Remove;
    out.log_fwd = std::log(h.stay) + std::log(1.0 - p_add) + log_weight_fraction(w, pick);
  }
  return out;
}

double transition_log_prob(const ChainState& from, const Configuration& to, const KernelParams& params) {
  const Configuration& cur = from.config;
  const ClusterMove h = cluster_kernel(cur.k, params.k_max);
  if (to.k != cur.k) {
    if (to.support != cur.support) return kNegInf;
    if (to.k == cur.k - 1 && h.down > 0.0) return std::log(h.down);
    if (to.k == cur.k + 1 && h.up > 0.0) return std::log(h.up);
    return kNegInf;
  }
  const int diff = to.support_size() - cur.support_size();
  const double p_add = add_probability(cur.support_size(), params.d);
  if (diff == 1 && p_add > 0.0) {
    std::vector<int> added;
    std::set_difference(to.support.begin(), to.support.end(), cur.support.begin(), cur.support.end(),
                        std::back_inserter(added));
    if (added.size() != 1) return kNegInf;
    const std::vector<int> candidates = complement(cur, params.d);
    const auto pos = std::lower_bound(candidates.begin(), candidates.end(), added.front()) - candidates.begin();
    const auto w = add_weights(from.between, candidates);
    return std::log(h.stay) + std::log(p_add) + log_weight_fraction(w, static_cast<std::size_t>(pos));
  }
  if (diff == -1 && p_add < 1.0) {
    std::vector<int> removed;
    std::set_difference(cur.support.begin(), cur.support.end(), to.support.begin(), to.support.end(),
                        std::back_inserter(removed));
    if (removed.size() != 1) return kNegInf;
    const auto pos = std::lower_bound(cur.support.begin(), cur.support.end(), removed.front()) - cur.support.begin();
    const auto w = remove_weights(from.between, cur.support);
    return std::log(h.stay) + std::log(1.0 - p_add) + log_weight_fraction(w, static_cast<std::size_t>(pos));
  }
  return kNegInf;
}

double acceptance_log_ratio(const ChainState& old_state, const ChainState& new_state, double lambda,
                            double log_fwd, double log_bwd, const PriorParams& prior) {
  return -lambda * (new_state.nll_x1 - old_state.nll_x1) + log_prior(new_state.config, prior) -
         log_prior(old_state.config, prior) + log_bwd - log_fwd;
}

Configuration initial_support(const Eigen::MatrixXd& data, int k0, std::uint64_t seed) {
  if (k0 < 1) throw ConfigError("initial cluster count must be >= 1");
  const int n = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());
  Configuration out;
  out.k = k0;
  out.support.resize(d);
  std::iota(out.support.begin(), out.support.end(), 0);
  if (n <= d) return out;

  const BetweenVariance bv = between_variance(kmeans(data, k0, seed).clustering, data);
  std::vector<int> order = out.support;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return bv.per_variable(a) > bv.per_variable(b); });
  order.resize(std::min(n, d));
  std::sort(order.begin(), order.end());
  out.support = std::move(order);
  return out;
}

Proposal prune_step(const ChainState& state, int target, Rng& rng) {
  const Configuration& cur = state.config;
  const int s = cur.support_size();
  if (s <= target) throw ConfigError("prune_step: support already at or below target");
  std::uniform_int_distribution<int> batch(1, (s + 1) / 2);
  const int m = std::min(batch(rng), s - std::max(target, 0));

  std::vector<int> pool = cur.support;
  std::vector<double> w = remove_weights(state.between, pool);
  std::vector<int> removed;
  for (int r = 0; r < m; ++r) {
    const std::size_t pick = draw_index(w, rng);
    removed.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    w.erase(w.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  Proposal out;
  out.config.k = cur.k;
  out.config.support = std::move(pool);
  out.kind = MoveKind::Prune;
  return out;
}

StateEvaluator::StateEvaluator(const Dataset& data, const SplitPair& split, FitOptions fit_options,
                               std::uint64_t seed, Shape shape)
    : full_(data.values),
      learn_(take_rows(data.values, split.learn_indices)),
      estimate_(take_rows(data.values, split.estimate_indices)),
      fit_options_(fit_options),
      seed_(seed),
      shape_(shape) {
  if (learn_.rows() == 0 || estimate_.rows() == 0) throw ConfigError("split has an empty part");
}

std::shared_ptr<const ChainState> StateEvaluator::evaluate(const Configuration& config) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(config); it != cache_.end()) return it->second;
  }
  std::shared_ptr<ChainState> state;
  try {
    auto fresh = std::make_shared<ChainState>();
    fresh->config = config;
    fresh->model = fit_em(estimate_, config, shape_, fit_options_,
                          stream_seed(seed_, {static_cast<std::uint64_t>(ConfigurationHash{}(config))}));
    fresh->nll_x1 = neg_log_likelihood(fresh->model, learn_);
    fresh->clustering = map_clustering(fresh->model, full_);
    fresh->between = between_variance(fresh->clustering, full_);
    state = std::move(fresh);
  } catch (const std::exception& e) {
    std::cerr << "warning: fit failed for " << to_string(config) << ": " << e.what() << "\n";
  }
  ++fit_count_;
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = cache_.emplace(config, std::move(state));
  return it->second;
}

double ChainTrajectory::acceptance_rate() const {
  const int mh_steps = size() - pruning_end - 1;
  if (mh_steps <= 0) return 0.0;
  int accepted = 0;
  for (int i = pruning_end + 1; i < size(); ++i) accepted += states[i].accepted ? 1 : 0;
  return static_cast<double>(accepted) / mh_steps;
}

ChainTrajectory run_chain(StateEvaluator& evaluator, double lambda, std::uint64_t seed,
                          const ChainOptions& options) {
  if (options.steps < 1) throw ConfigError("chain needs at least one step");
  if (!(lambda > 0.0)) throw ConfigError("temperature must be positive");
  if (options.k0 < 1 || options.k0 > options.k_max) throw ConfigError("K0 must lie in [1, K_max]");
  const int d = evaluator.d();
  const KernelParams kernel{d, options.k_max};
  const PriorParams prior{d, options.k_max, options.prior_intensity};
  const int target = options.prune_target.value_or((d + 2) / 3);

  Rng rng(seed);
  ChainTrajectory traj;
  traj.seed = seed;
  traj.lambda = lambda;
  traj.states.reserve(options.steps);

  auto state = evaluator.evaluate(initial_support(evaluator.full(), options.k0, stream_seed(seed, {0})));
  if (!state) throw NumericalError("chain: the initial configuration could not be fitted");
  traj.states.push_back({0, state->config, state->nll_x1, true, MoveKind::Init});

  bool pruning = options.prune && state->config.support_size() > target;
  traj.pruning_end = pruning ? options.steps : 0;
  for (int u = 1; u < options.steps; ++u) {
    TrajectoryStep rec;
    rec.step = u;
    if (pruning) {
      const Proposal prop = prune_step(*state, target, rng);
      rec.kind = prop.kind;
      if (auto next = evaluator.evaluate(prop.config)) {
        state = std::move(next);
        rec.accepted = true;
      }
      if (state->config.support_size() <= target) {
        pruning = false;
        traj.pruning_end = u;
      }
    } else {
      const Proposal prop = propose(*state, rng, kernel);
      rec.kind = prop.kind;
      const double log_u = std::log(uniform01(rng));
      if (auto next = evaluator.evaluate(prop.config)) {
        const double log_bwd = transition_log_prob(*next, state->config, kernel);
        const double log_r = acceptance_log_ratio(*state, *next, lambda, prop.log_fwd, log_bwd, prior);
        if (log_u <= std::min(0.0, log_r)) {
          state = std::move(next);
          rec.accepted = true;
        }
      }
    }
    rec.config = state->config;
    rec.nll_x1 = state->nll_x1;
    traj.states.push_back(std::move(rec));
  }
  return traj;
}

ChainTrajectory run_chain(const Dataset& data, const SplitPair& split, double lambda, std::uint64_t seed,
                          const ChainOptions& options, const FitOptions& fit_options) {
  StateEvaluator evaluator(data, split, fit_options, stream_seed(seed, {1}));
  return run_chain(evaluator, lambda, seed, options);
}

void write_trajectory_csv(const ChainTrajectory& trajectory, std::ostream& out) {
  out << "step,K,S,nll_X1,accepted,move_kind\n";
  out << std::setprecision(17);
  for (const auto& st : trajectory.states) {
    out << st.step << ',' << st.config.k << ',';
    for (std::size_t i = 0; i < st.config.support.size(); ++i) out << (i ? ";" : "") << (st.config.support[i] + 1);
    out << ',' << st.nll_x1 << ',' << (st.accepted ? 1 : 0) << ',' << to_string(st.kind) << '\n';
  }
}

}  // namespace mhgmm
