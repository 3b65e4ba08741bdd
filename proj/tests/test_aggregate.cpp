#include <cmath>

#include "doctest.h"
#include "mhgmm/aggregate.hpp"
#include "mhgmm/errors.hpp"
#include "mhgmm/eval.hpp"
#include "support/oracles.hpp"

using namespace mhgmm;

namespace {

ChainTrajectory trajectory_of(const std::vector<Configuration>& configs, int pruning_end = 0) {
  ChainTrajectory t;
  for (std::size_t i = 0; i < configs.size(); ++i)
    t.states.push_back({static_cast<int>(i), configs[i], 0.0, true, i == 0 ? MoveKind::Init : MoveKind::Add});
  t.pruning_end = pruning_end;
  return t;
}

Clustering labels(std::vector<int> l, int k) {
  Clustering c;
  c.labels = std::move(l);
  c.k = k;
  return c;
}

}  // namespace

TEST_CASE("select_configuration takes the mode of the window") {
  const Configuration a{2, {0, 1}}, b{3, {0}};
  std::vector<Configuration> path;
  for (int i = 0; i < 60; ++i) path.push_back(a);
  for (int i = 0; i < 40; ++i) path.push_back(b);
  CHECK(select_configuration(trajectory_of(path), 100) == a);
  // Only the last 40 states are in a window of 40.
  CHECK(select_configuration(trajectory_of(path), 40) == b);

  // 50/50 tie: the configuration visited latest wins.
  std::vector<Configuration> tie;
  for (int i = 0; i < 5; ++i) tie.push_back(b);
  for (int i = 0; i < 5; ++i) tie.push_back(a);
  CHECK(select_configuration(trajectory_of(tie), 10) == a);

  // Pruning states never count even if the window reaches them.
  std::vector<Configuration> pruned;
  for (int i = 0; i < 30; ++i) pruned.push_back(b);
  for (int i = 0; i < 10; ++i) pruned.push_back(a);
  CHECK(select_configuration(trajectory_of(pruned, 30), 100) == a);
}

TEST_CASE("select_temperature") {
  const Dataset ds = oracle::small_two_cluster(40, 3, 2, 4.0, 2);
  const FitOptions fo;
  auto cand = [&](double lambda, Configuration c) {
    return TemperatureCandidate{lambda, c, fit_em(ds.values, c, Shape::LB, fo, 3)};
  };

  const auto one = select_temperature({cand(5.0, {2, {0, 1}})}, ds.values, Criterion::Bic);
  CHECK(one.index == 0);
  CHECK(one.lambda == 5.0);

  // Identical candidates tie; the smaller lambda wins.
  const auto tied = select_temperature({cand(2.0, {2, {0, 1}}), cand(1.0, {2, {0, 1}})}, ds.values, Criterion::Aic);
  CHECK(tied.lambda == 1.0);
  CHECK(tied.scores[0] == tied.scores[1]);

  // Scores follow 2 NLL + penalty * free parameters.
  const Configuration truth{2, {0, 1}}, bigger{2, {0, 1, 2}};
  const auto choice = select_temperature({cand(1.0, bigger), cand(2.0, truth)}, ds.values, Criterion::Bic);
  const double n = static_cast<double>(ds.n());
  for (std::size_t i = 0; i < 2; ++i) {
    const Configuration& c = i == 0 ? bigger : truth;
    const GmmModel m = fit_em(ds.values, c, Shape::LB, fo, 3);
    CHECK(choice.scores[i] == doctest::Approx(2.0 * neg_log_likelihood(m, ds.values) +
                                              std::log(n) * free_params(c, Shape::LB)));
  }
  CHECK(choice.config == truth);

  CHECK_THROWS_AS(select_temperature({}, ds.values, Criterion::Bic), ConfigError);
  CHECK(parse_criterion("AIC") == Criterion::Aic);
  CHECK_THROWS_AS(parse_criterion("dic"), ConfigError);
}

TEST_CASE("majority vote") {
  const Vote v = majority_vote({{2, {0, 1}}, {2, {1}}, {3, {1, 2}}}, 4);
  CHECK(v.config.k == 2);
  CHECK(v.config.support == std::vector<int>{1});
  CHECK(v.importance(0) == doctest::Approx(1.0 / 3));
  CHECK(v.importance(1) == 1.0);
  CHECK(v.importance(3) == 0.0);

  // Exactly half of the splits is not a majority.
  std::vector<Configuration> twenty;
  for (int b = 0; b < 20; ++b) twenty.push_back({1, b < 10 ? std::vector<int>{0} : std::vector<int>{}});
  CHECK(majority_vote(twenty, 2).config.support.empty());
  twenty[10].support = {0};
  CHECK(majority_vote(twenty, 2).config.support == std::vector<int>{0});

  // Mean K of 2.5 rounds down, 2.75 rounds up.
  CHECK(majority_vote({{2, {}}, {3, {}}}, 1).config.k == 2);
  CHECK(majority_vote({{3, {}}, {3, {}}, {3, {}}, {2, {}}}, 1).config.k == 3);
  CHECK_THROWS_AS(majority_vote({}, 3), ConfigError);
}

TEST_CASE("aggregated clustering") {
  const Clustering c = labels({0, 0, 1, 1, 2, 2}, 3);
  const Clustering same = aggregated_clustering({c, c, c}, 3);
  CHECK(ari(same, c) == 1.0);
  CHECK(same.labels == std::vector<int>{0, 0, 1, 1, 2, 2});

  const Clustering one = aggregated_clustering({c, c}, 1);
  CHECK(one.k == 1);
  CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](int l) { return l == 0; }));

  const Eigen::MatrixXi a = similarity_matrix({c, labels({0, 0, 0, 1, 1, 1}, 2)});
  CHECK(a(0, 1) == 2);
  CHECK(a(1, 2) == 1);
  CHECK(a(0, 5) == 0);
  CHECK(a(3, 3) == 2);

  // 9 points, two clusterings that agree on {0,1,2} and {6,7,8} and split
  // {3,4,5} differently; average linkage at k = 3 recovers the three blocks.
  const Clustering p = labels({0, 0, 0, 1, 1, 2, 2, 2, 2}, 3);
  const Clustering q = labels({0, 0, 0, 0, 1, 1, 2, 2, 2}, 3);
  const Clustering agg = aggregated_clustering({p, q}, 3);
  CHECK(agg.labels[0] == agg.labels[1]);
  CHECK(agg.labels[1] == agg.labels[2]);
  CHECK(agg.labels[6] == agg.labels[7]);
  CHECK(agg.labels[7] == agg.labels[8]);
  CHECK(agg.labels[0] != agg.labels[8]);
  CHECK(agg.labels[0] == 0);
  CHECK(agg.k == 3);
  CHECK_THROWS_AS(aggregated_clustering({p, labels({0, 1}, 2)}, 2), DataError);
}

TEST_CASE("average linkage on a hand-worked dissimilarity") {
  // Points on a line at 0, 1, 5, 6, 20.
  const std::vector<double> x{0, 1, 5, 6, 20};
  Eigen::MatrixXd dis(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) dis(i, j) = std::abs(x[i] - x[j]);
  CHECK(average_linkage(dis, 3).labels == std::vector<int>{0, 0, 1, 1, 2});
  // {0,1} vs {5,6}: average 5 < {0,1,5,6} vs {20}: 17, so k = 2 keeps 20 alone.
  CHECK(average_linkage(dis, 2).labels == std::vector<int>{0, 0, 0, 0, 1});
  CHECK(average_linkage(dis, 5).labels == std::vector<int>{0, 1, 2, 3, 4});
  CHECK_THROWS_AS(average_linkage(dis, 6), ConfigError);
}

TEST_CASE("final fit on the illustrative data recovers the clusters") {
  const Dataset ds = simulate(ExperimentId::Illustrative, 3);
  Configuration truth{2, {}};
  for (int j = 0; j < 15; ++j) truth.support.push_back(j);
  const auto [model, clustering] = final_fit(ds.values, truth, Shape::LB, FitOptions{}, 1);
  CHECK(model.k() == 2);
  CHECK(ari(clustering.labels, *ds.labels) >= 0.85);

  const auto [m1, c1] = final_fit(ds.values, {1, truth.support}, Shape::LB, FitOptions{}, 1);
  CHECK(c1.k == 1);
  CHECK(ari(c1.labels, *ds.labels) == 0.0);
}

TEST_CASE("final fit on the four-cluster data at the true configuration") {
  const Dataset ds = simulate(ExperimentId::Exp2, 4);
  Configuration truth{4, {}};
  for (int j = 0; j < 15; ++j) truth.support.push_back(j);
  const auto [model, clustering] = final_fit(ds.values, truth, Shape::LB, FitOptions{}, 2);
  CHECK(clustering.k == 4);
  CHECK(ari(clustering.labels, *ds.labels) > 0.7);
}
