#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "mhgmm/errors.hpp"
#include "mhgmm/mh.hpp"
#include "support/oracles.hpp"

using namespace mhgmm;

namespace {

ChainState state_with(Configuration config, std::vector<double> varb) {
  ChainState s;
  s.config = std::move(config);
  s.between.per_variable = Eigen::Map<Eigen::VectorXd>(varb.data(), static_cast<Eigen::Index>(varb.size()));
  s.between.total = s.between.per_variable.sum();
  return s;
}

std::map<Configuration, double> empirical_proposals(const ChainState& s, const KernelParams& kp, int draws,
                                                    std::uint64_t seed) {
  Rng rng(seed);
  std::map<Configuration, double> freq;
  for (int i = 0; i < draws; ++i) freq[propose(s, rng, kp).config] += 1.0 / draws;
  return freq;
}

}  // namespace

TEST_CASE("between_variance") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 9;
  Clustering one;
  one.k = 1;
  one.labels = {0, 0, 0, 0};
  const BetweenVariance z = between_variance(one, x);
  CHECK(z.per_variable.cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd pts(2, 1);
  pts << -1.0, 1.0;
  Clustering two;
  two.k = 2;
  two.labels = {0, 1};
  CHECK(between_variance(two, pts).total == doctest::Approx(1.0));

  Clustering mixed;
  mixed.k = 3;
  mixed.labels = {0, 2, 2, 1};
  const BetweenVariance bv = between_variance(mixed, x);
  CHECK(std::abs(bv.total - bv.per_variable.sum()) < 1e-10);
  CHECK((bv.per_variable.array() >= 0.0).all());
  // Per-variable formula by hand for column 0: G = 4, clusters {1}, {7}, {3,5}.
  CHECK(bv.per_variable(0) == doctest::Approx((9.0 + 9.0 + 0.0) / 4.0));
}

TEST_CASE("cluster-count kernel boundaries") {
  const KernelParams kp{4, 3};
  const ChainState full = state_with({1, {0, 1, 2, 3}}, {1, 1, 1, 1});
  CHECK(std::exp(transition_log_prob(full, {2, {0, 1, 2, 3}}, kp)) == doctest::Approx(0.5));
  // From S = {1..d} with K unchanged the only variable move is a removal.
  double removal = 0.0;
  for (int j = 0; j < 4; ++j) {
    Configuration c{1, {0, 1, 2, 3}};
    c.support.erase(c.support.begin() + j);
    removal += std::exp(transition_log_prob(full, c, kp));
  }
  CHECK(removal == doctest::Approx(0.5));

  const ChainState top = state_with({3, {0}}, {1, 1, 1, 1});
  CHECK(std::exp(transition_log_prob(top, {2, {0}}, kp)) == doctest::Approx(0.5));
  CHECK(transition_log_prob(top, {4, {0}}, kp) == -INFINITY);
}

TEST_CASE("interior state splits 1/4 down, 1/4 up, 1/4 add, 1/4 remove") {
  const KernelParams kp{4, 3};
  const ChainState s = state_with({2, {1, 2}}, {0.3, 0.7, 0.1, 2.0});
  double add = 0.0, remove = 0.0;
  for (const auto& c : oracle::all_configurations(4, 3)) {
    const double p = std::exp(transition_log_prob(s, c, kp));
    if (c.k == 2 && c.support_size() == 3) add += p;
    if (c.k == 2 && c.support_size() == 1) remove += p;
  }
  CHECK(add == doctest::Approx(0.25));
  CHECK(remove == doctest::Approx(0.25));
  CHECK(std::exp(transition_log_prob(s, {1, {1, 2}}, kp)) == doctest::Approx(0.25));
  CHECK(std::exp(transition_log_prob(s, {3, {1, 2}}, kp)) == doctest::Approx(0.25));
  CHECK(transition_log_prob(s, s.config, kp) == -INFINITY);
}

TEST_CASE("add candidates are weighted by between-variance") {
  const KernelParams kp{4, 1};  // K frozen: every proposal is a variable move
  const ChainState s = state_with({1, {3}}, {2.0, 1.0, 1.0, 5.0});
  const double p_add = 0.5;
  CHECK(std::exp(transition_log_prob(s, {1, {0, 3}}, kp)) == doctest::Approx(p_add * 0.5));
  CHECK(std::exp(transition_log_prob(s, {1, {1, 3}}, kp)) == doctest::Approx(p_add * 0.25));
  CHECK(std::exp(transition_log_prob(s, {1, {2, 3}}, kp)) == doctest::Approx(p_add * 0.25));
}

TEST_CASE("removal weights use inverse between-variance; zero weights fall back to uniform") {
  const KernelParams kp{3, 1};
  const ChainState s = state_with({1, {0, 1}}, {1.0, 3.0, 0.0});
  // Inverse weights 1 and 1/3 -> 3/4 and 1/4 of the removal half.
  CHECK(std::exp(transition_log_prob(s, {1, {1}}, kp)) == doctest::Approx(0.5 * 0.75));
  CHECK(std::exp(transition_log_prob(s, {1, {0}}, kp)) == doctest::Approx(0.5 * 0.25));

  const ChainState flat = state_with({1, {}}, {0.0, 0.0, 0.0});
  for (int j = 0; j < 3; ++j) CHECK(std::exp(transition_log_prob(flat, {1, {j}}, kp)) == doctest::Approx(1.0 / 3));
}

TEST_CASE("proposal kernel is normalized and matches its sampler") {
  const KernelParams kp{4, 3};
  Rng rng(12);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  int checked = 0;
  for (const auto& from : oracle::all_configurations(4, 3)) {
    std::vector<double> varb(4);
    for (auto& v : varb) v = (checked % 5 == 0) ? 0.0 : u(rng);
    const ChainState s = state_with(from, varb);
    double total = 0.0;
    for (const auto& to : oracle::all_configurations(4, 3)) total += std::exp(transition_log_prob(s, to, kp));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    if (checked++ % 8 == 0) {
      const auto freq = empirical_proposals(s, kp, 40000, static_cast<std::uint64_t>(checked));
      for (const auto& [c, f] : freq) {
        CHECK(std::abs(f - std::exp(transition_log_prob(s, c, kp))) < 0.015);
        Rng r2(checked);
        (void)r2;
      }
    }
    // The sampler's own forward probability agrees with the kernel.
    Rng r(static_cast<std::uint64_t>(checked));
    const Proposal p = propose(s, r, kp);
    CHECK(p.log_fwd == doctest::Approx(transition_log_prob(s, p.config, kp)).epsilon(1e-12));
  }
}

TEST_CASE("acceptance ratio") {
  const PriorParams prior{4, 3};
  ChainState a = state_with({2, {0, 1}}, {1, 1, 1, 1});
  a.nll_x1 = 50.0;
  CHECK(acceptance_log_ratio(a, a, 7.0, -1.2, -1.2, prior) == 0.0);

  ChainState b = state_with({2, {0, 1, 2}}, {1, 1, 1, 1});
  b.nll_x1 = 48.0;
  const double expected_prior = log_prior(b.config, prior) - log_prior(a.config, prior);
  CHECK(acceptance_log_ratio(a, b, 0.0, -1.0, -2.0, prior) == doctest::Approx(expected_prior - 1.0));
  CHECK(acceptance_log_ratio(a, b, 3.0, -1.0, -2.0, prior) == doctest::Approx(6.0 + expected_prior - 1.0));
}

TEST_CASE("initial support") {
  Eigen::MatrixXd wide = Eigen::MatrixXd::Random(50, 100);
  CHECK(initial_support(wide, 2, 1).support_size() == 100);
  Eigen::MatrixXd tall = Eigen::MatrixXd::Random(200, 100);
  const Configuration c = initial_support(tall, 3, 1);
  CHECK(c.k == 3);
  CHECK(c.support_size() == 100);
  CHECK_THROWS_AS(initial_support(tall, 0, 1), ConfigError);
}

TEST_CASE("prune step") {
  Configuration big{2, {}};
  for (int j = 0; j < 100; ++j) big.support.push_back(j);
  const ChainState s = state_with(big, std::vector<double>(100, 1.0));
  Rng rng(4);
  std::set<int> sizes;
  std::vector<int> removed_count(100, 0);
  for (int i = 0; i < 2000; ++i) {
    const Proposal p = prune_step(s, 33, rng);
    const int m = 100 - p.config.support_size();
    CHECK(m >= 1);
    CHECK(m <= 50);
    CHECK(p.config.support_size() >= 33);
    CHECK(p.config.k == 2);
    CHECK(std::is_sorted(p.config.support.begin(), p.config.support.end()));
    sizes.insert(m);
    std::set<int> kept(p.config.support.begin(), p.config.support.end());
    for (int j = 0; j < 100; ++j)
      if (!kept.count(j)) ++removed_count[j];
  }
  CHECK(sizes.size() == 50);  // every batch size in 1..50 shows up
  // Equal weights: each variable removed about equally often.
  const auto [lo, hi] = std::minmax_element(removed_count.begin(), removed_count.end());
  CHECK(*hi < 1.5 * *lo);

  Configuration near{2, {}};
  for (int j = 0; j < 35; ++j) near.support.push_back(j);
  const ChainState t = state_with(near, std::vector<double>(100, 1.0));
  for (int i = 0; i < 200; ++i) CHECK(prune_step(t, 33, rng).config.support_size() >= 33);
  CHECK_THROWS_AS(prune_step(t, 35, rng), ConfigError);

  // Low between-variance variables go first.
  std::vector<double> varb(100, 1.0);
  varb[7] = 1e-6;
  const ChainState w = state_with(big, varb);
  int gone = 0;
  for (int i = 0; i < 200; ++i) gone += prune_step(w, 33, rng).config.contains(7) ? 0 : 1;
  CHECK(gone == 200);
}

TEST_CASE("chains are deterministic, cached and well formed") {
  const Dataset ds = oracle::small_two_cluster(30, 6, 2, 3.0, 5);
  const SplitPair sp = split(ds, 0.5, 9);
  ChainOptions opt;
  opt.steps = 60;
  opt.k_max = 4;
  opt.prune_target = 3;

  StateEvaluator ev(ds, sp, FitOptions{}, 77);
  const ChainTrajectory a = run_chain(ev, 2.0, 123, opt);
  const long fits = ev.fit_count();
  const ChainTrajectory b = run_chain(ev, 2.0, 123, opt);
  CHECK(ev.fit_count() == fits);  // every configuration was cached
  REQUIRE(a.size() == opt.steps);
  CHECK(a.pruning_end <= a.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.states[i].config == b.states[i].config);
    CHECK(a.states[i].nll_x1 == b.states[i].nll_x1);
    CHECK(a.states[i].accepted == b.states[i].accepted);
    CHECK(a.states[i].config.k <= opt.k_max);
  }
  for (int i = a.pruning_end + 1; i < a.size(); ++i) CHECK(a.states[i].kind != MoveKind::Prune);

  // nll on X1 is a function of the configuration.
  std::map<Configuration, double> seen;
  for (const auto& st : a.states) {
    auto [it, inserted] = seen.emplace(st.config, st.nll_x1);
    CHECK(it->second == st.nll_x1);
  }

  StateEvaluator fresh(ds, sp, FitOptions{}, 77);
  const ChainTrajectory c = run_chain(fresh, 2.0, 123, opt);
  for (int i = 0; i < a.size(); ++i) CHECK(c.states[i].config == a.states[i].config);

  const double rate = run_chain(ds, sp, 1.0, 5, ChainOptions{200, 2, 4, false, std::nullopt, 1.0}).acceptance_rate();
  CHECK(rate > 0.0);
  CHECK(rate < 1.0);
}

TEST_CASE("single-step chain is just the initial state") {
  const Dataset ds = oracle::small_two_cluster(20, 4, 2, 3.0, 1);
  ChainOptions opt;
  opt.steps = 1;
  opt.prune = false;
  const ChainTrajectory t = run_chain(ds, split(ds, 0.5, 1), 1.0, 1, opt);
  REQUIRE(t.size() == 1);
  CHECK(t.states[0].kind == MoveKind::Init);
  CHECK(t.states[0].config.k == 2);
  CHECK(t.states[0].config.support_size() == 4);
  CHECK(t.pruning_end == 0);
}

TEST_CASE("detailed balance holds exhaustively at d = 3, K_max = 2") {
  const Dataset ds = oracle::small_two_cluster(25, 3, 1, 2.5, 3);
  StateEvaluator ev(ds, split(ds, 0.5, 2), FitOptions{}, 8);
  const KernelParams kp{3, 2};
  const PriorParams prior{3, 2};
  const double lambda = 0.5;
  const auto post = oracle::exact_posterior(ev, 2, lambda);
  REQUIRE(post.size() == 16);
  for (const auto& [a, pa] : post)
    for (const auto& [b, pb] : post) {
      if (a == b) continue;
      const auto sa = ev.evaluate(a);
      const auto sb = ev.evaluate(b);
      const double fwd = transition_log_prob(*sa, b, kp);
      const double bwd = transition_log_prob(*sb, a, kp);
      CHECK(std::isinf(fwd) == std::isinf(bwd));
      if (std::isinf(fwd)) continue;
      const double r = acceptance_log_ratio(*sa, *sb, lambda, fwd, bwd, prior);
      const double lhs = std::log(pa) + fwd + std::min(0.0, r);
      const double rhs = std::log(pb) + bwd + std::min(0.0, -r);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("trajectory CSV layout") {
  ChainTrajectory t;
  t.states.push_back({0, {2, {0, 4}}, 12.5, true, MoveKind::Init});
  t.states.push_back({1, {2, {0}}, 11.0, false, MoveKind::Remove});
  std::ostringstream os;
  write_trajectory_csv(t, os);
  CHECK(os.str() == "step,K,S,nll_X1,accepted,move_kind\n0,2,1;5,12.5,1,init\n1,2,1,11,0,remove\n");
}
