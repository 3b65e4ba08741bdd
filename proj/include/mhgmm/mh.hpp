#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mhgmm/data.hpp"
#include "mhgmm/gmm.hpp"
#include "mhgmm/prior.hpp"
#include "mhgmm/rng.hpp"

namespace mhgmm {

/// Spread of the cluster barycenters around the global barycenter,
/// per variable and in total.
struct BetweenVariance {
  Eigen::VectorXd per_variable;
  double total = 0.0;
};

BetweenVariance between_variance(const Clustering& clustering, const Eigen::MatrixXd& data);

/// A configuration together with everything the sampler derives from it:
/// the fit on X2, its NLL on X1, the MAP clustering of the full sample and
/// that clustering's between-variance.
struct ChainState {
  Configuration config;
  GmmModel model;
  Clustering clustering;
  double nll_x1 = 0.0;
  BetweenVariance between;
};

enum class MoveKind { Init, KDown, KUp, Add, Remove, Prune };
std::string to_string(MoveKind kind);

struct KernelParams {
  int d = 1;
  int k_max = 10;
};

struct Proposal {
  Configuration config;
  /// ln W(current, proposed); 0 for pruning moves, which sit outside the kernel.
  double log_fwd = 0.0;
  MoveKind kind = MoveKind::Init;
};

/// Regularizer added to between-variances before inverting them.
inline constexpr double kInverseVarbEpsilon = 1e-12;

/// Draws from W(eta, .) = H(K, .) M_{K,K~}(S, .).
Proposal propose(const ChainState& state, Rng& rng, const KernelParams& params);

/// ln W(from.config, to); -infinity when `to` is unreachable in one step.
double transition_log_prob(const ChainState& from, const Configuration& to, const KernelParams& params);

/// ln r = -lambda (L_new - L_old) + ln pi(new) - ln pi(old) + ln W(new, old) - ln W(old, new).
/// The move is accepted iff U <= min(1, r).
double acceptance_log_ratio(const ChainState& old_state, const ChainState& new_state, double lambda,
                            double log_fwd, double log_bwd, const PriorParams& prior);

/// Starting configuration: every variable when n <= d, otherwise the n
/// variables with the largest between-variance under a k-means clustering.
Configuration initial_support(const Eigen::MatrixXd& data, int k0, std::uint64_t seed);

/// Batch removal used while |S| > target: removes m ~ U{1..ceil(|S|/2)}
/// variables (clamped so |S| - m >= target), drawn without replacement with
/// probability proportional to inverse between-variance.
Proposal prune_step(const ChainState& state, int target, Rng& rng);

/// Evaluates and memoizes chain states for one split. The fit for a given
/// configuration depends only on (X2, configuration, seed), so chains at
/// different temperatures on the same split may share an evaluator.
/// Thread-safe.
class StateEvaluator {
 public:
  StateEvaluator(const Dataset& data, const SplitPair& split, FitOptions fit_options, std::uint64_t seed,
                 Shape shape = Shape::LB);

  /// Null when EM fails for this configuration (the failure is cached too).
  std::shared_ptr<const ChainState> evaluate(const Configuration& config);

  const Eigen::MatrixXd& full() const { return full_; }
  const Eigen::MatrixXd& learn() const { return learn_; }
  const Eigen::MatrixXd& estimate() const { return estimate_; }
  int d() const { return static_cast<int>(full_.cols()); }
  /// Number of EM fits run so far (cache misses).
  long fit_count() const { return fit_count_.load(); }

 private:
  Eigen::MatrixXd full_;
  Eigen::MatrixXd learn_;
  Eigen::MatrixXd estimate_;
  FitOptions fit_options_;
  std::uint64_t seed_;
  Shape shape_;
  std::mutex mutex_;
  std::unordered_map<Configuration, std::shared_ptr<const ChainState>, ConfigurationHash> cache_;
  std::atomic<long> fit_count_{0};
};

struct ChainOptions {
  int steps = 300;
  int k0 = 2;
  int k_max = 10;
  bool prune = true;
  /// Defaults to ceil(d / 3).
  std::optional<int> prune_target;
  double prior_intensity = 1.0;
};

struct TrajectoryStep {
  int step = 0;
  Configuration config;  // state after this step
  double nll_x1 = 0.0;
  bool accepted = false;
  MoveKind kind = MoveKind::Init;
};

struct ChainTrajectory {
  std::vector<TrajectoryStep> states;
  /// Index of the first state of the exact MH phase; states before it are
  /// pruning burn-in.
  int pruning_end = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  int split_id = 0;

  int size() const { return static_cast<int>(states.size()); }
  double acceptance_rate() const;
};

/// Runs one chain of `options.steps` states (the initial state included).
/// Deterministic given the evaluator's inputs, lambda, seed and options.
ChainTrajectory run_chain(StateEvaluator& evaluator, double lambda, std::uint64_t seed,
                          const ChainOptions& options);

/// Convenience overload with a private evaluator.
ChainTrajectory run_chain(const Dataset& data, const SplitPair& split, double lambda, std::uint64_t seed,
                          const ChainOptions& options, const FitOptions& fit_options = {});

/// CSV with columns step,K,S,nll_X1,accepted,move_kind; S is a
/// semicolon-joined list of 1-based indices.
void write_trajectory_csv(const ChainTrajectory& trajectory, std::ostream& out);

}  // namespace mhgmm
