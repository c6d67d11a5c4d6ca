#include "msa/baselines.hpp"
#include "msa/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace msa {
namespace {

Dataset constant_rows(int id, Eigen::Index n) {
  return Dataset(id, Task::regression, 1, RowMatrix::Zero(n, 1), Vector::Zero(n));
}

DomainCollection penalty_instance(Eigen::Index m0) {
  std::vector<Dataset> src;
  for (int k = 0; k < 4; ++k) src.push_back(constant_rows(k + 1, 10000));
  return DomainCollection(constant_rows(0, m0), std::move(src));
}

// λ = (a, a, b, b) with a + b = 1/2 and 4·Σλ² = 1.2.
MixtureWeight skew_12() {
  const double a = (0.5 + std::sqrt(0.05)) / 2.0, b = 0.5 - a;
  return MixtureWeight((Vector(4) << a, a, b, b).finished());
}

LossSpec unit_clip() {
  LossSpec loss;
  loss.bound_M = 1.0;
  return loss;
}

TEST(ConvDiscPenalty, MatchesHandComputedValue) {
  const auto coll = penalty_instance(200);
  ASSERT_NEAR(skewness(skew_12(), empirical_proportions(coll)), 1.2, 1e-12);
  PenaltyConstants c{1.0, 101.0, 0.1, 0.1};
  EXPECT_NEAR(conv_disc_penalty(skew_12(), coll, unit_clip(), 0.05, c), 1.0160199644301793, 1e-12);
}

TEST(ConvDiscPenalty, EmpiricalProportionsMinimizeSkewTerm) {
  const auto coll = penalty_instance(200);
  PenaltyConstants c{1.0, 101.0, 0.1, 0.1};
  const double at_mhat = conv_disc_penalty(empirical_proportions(coll), coll, unit_clip(), 0.05, c);
  Rng rng(3);
  for (int t = 0; t < 50; ++t)
    EXPECT_GE(conv_disc_penalty(MixtureWeight::random(4, rng), coll, unit_clip(), 0.05, c), at_mhat - 1e-15);
}

TEST(ConvDiscPenalty, DoublingTargetShrinksOnlySecondTerm) {
  PenaltyConstants c{1.0, 101.0, 0.1, 0.1};
  const auto small = penalty_instance(200), large = penalty_instance(400);
  const double second = std::sqrt((101.0 + std::log(10.0)) / 200.0);
  const double diff = conv_disc_penalty(skew_12(), small, unit_clip(), 0.05, c) -
                      conv_disc_penalty(skew_12(), large, unit_clip(), 0.05, c);
  EXPECT_NEAR(diff, second * (1.0 - 1.0 / std::sqrt(2.0)), 1e-12);
}

TEST(ConvDiscPenalty, RejectsNonPositiveConstants) {
  const auto coll = penalty_instance(200);
  EXPECT_THROW(conv_disc_penalty(skew_12(), coll, unit_clip(), 0.0, PenaltyConstants{0.0, 101.0, 0.1, 0.1}),
               ConfigError);
  EXPECT_THROW(conv_disc_penalty(skew_12(), coll, unit_clip(), 0.0, PenaltyConstants{1.0, 101.0, 0.1, 0.0}),
               ConfigError);
}

TEST(PairwiseDisc, EqualDiscrepanciesGiveUniformWeights) {
  for (double gamma : {0.0, 1e-3, 1.0, 10.0}) {
    const auto lam = pairwise_disc_weights(Vector::Constant(3, 0.4), MixtureWeight::uniform(3), 3000.0, gamma, 500);
    EXPECT_LE((lam.values() - Vector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-3) << gamma;
  }
}

TEST(PairwiseDisc, ObjectiveNeverIncreases) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const int p = 2 + t % 4;
    Vector discs(p);
    for (int k = 0; k < p; ++k) discs(k) = u(rng);
    const MixtureWeight mhat = MixtureWeight::random(p, rng);
    const double gamma = std::pow(10.0, -3.0 + 4.0 * u(rng));
    std::vector<double> trace;
    pairwise_disc_weights(discs, mhat, 1000.0, gamma, 200, &trace);
    ASSERT_GE(trace.size(), 1u);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]);
  }
}

// Grid search over Δ_3 at resolution 1/400 as an independent minimizer.
TEST(PairwiseDisc, ReachesGridMinimum) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const Vector discs = (Vector(3) << u(rng), u(rng), u(rng)).finished();
    const MixtureWeight mhat((Vector(3) << 0.2, 0.3, 0.5).finished());
    const double m = 1000.0, gamma = 0.01 * (t + 1);
    double grid_best = std::numeric_limits<double>::infinity();
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        const Vector lam = (Vector(3) << double(i) / n, double(j) / n, double(n - i - j) / n).finished();
        grid_best = std::min(grid_best, lam.dot(discs) + gamma * std::sqrt(m * (lam.array().square() /
                                                                               mhat.values().array()).sum()));
      }
    }
    const auto lam = pairwise_disc_weights(discs, mhat, m, gamma, 2000);
    EXPECT_LE(pairwise_disc_objective(lam, discs, mhat, m, gamma), grid_best + 1e-6);
  }
}

TEST(RunBaseline, MissingHyperparametersAreConfigErrors) {
  Rng rng(1);
  const auto coll = testing::random_regression_collection(2, 2, {100, 100}, 40, rng);
  BaselineHyper hyper;
  EXPECT_THROW(run_baseline(BaselineKind::conv_disc, coll, LossSpec{}, TrainConfig{}, hyper), ConfigError);
  hyper.gamma_grid.clear();
  EXPECT_THROW(run_baseline(BaselineKind::pairwise_disc, coll, LossSpec{}, TrainConfig{}, hyper), ConfigError);
}

TEST(RunBaseline, FixedMixtureKinds) {
  Rng rng(2);
  const auto coll = testing::random_regression_collection(3, 3, {200, 300, 500}, 60, rng);
  const LossSpec loss;
  const TrainConfig cfg;
  const BaselineHyper hyper;

  EXPECT_EQ(run_baseline(BaselineKind::target_only, coll, loss, cfg, hyper).model,
            train_on_dataset(coll.target(), loss, cfg));

  const auto combined = run_baseline(BaselineKind::combined_sources, coll, loss, cfg, hyper);
  EXPECT_EQ(combined.model, train_on_mixture(coll, empirical_proportions(coll), loss, cfg));

  const auto best = run_baseline(BaselineKind::best_single_source, coll, loss, cfg, hyper);
  double best_loss = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k)
    best_loss = std::min(best_loss, empirical_loss(train_on_dataset(coll.source(k), loss, cfg), coll.target(), loss));
  EXPECT_DOUBLE_EQ(empirical_loss(best.model, coll.target(), loss), best_loss);

  const auto spt = run_baseline(BaselineKind::sources_plus_target, coll, loss, cfg, hyper);
  ASSERT_TRUE(spt.lambda);
  EXPECT_NEAR((*spt.lambda)[3], 60.0 / 1060.0, 1e-15);
  const auto eq = run_baseline(BaselineKind::sources_plus_target_equal, coll, loss, cfg, hyper);
  EXPECT_LE(eq.lambda->l1_distance(MixtureWeight::uniform(4)), 1e-15);
}

TEST(RunBaseline, SourcesPlusTargetIsCombinedSourcesOnJoinedCollection) {
  Rng rng(4);
  const auto coll = testing::random_regression_collection(2, 2, {150, 250}, 50, rng);
  std::vector<Dataset> sources = coll.sources();
  sources.push_back(coll.target().with_domain_id(3));
  const DomainCollection joined(coll.target(), std::move(sources));
  const BaselineHyper hyper;
  EXPECT_EQ(run_baseline(BaselineKind::sources_plus_target, coll, LossSpec{}, TrainConfig{}, hyper).model,
            run_baseline(BaselineKind::combined_sources, joined, LossSpec{}, TrainConfig{}, hyper).model);
}

TEST(RunBaseline, PairwiseDiscEqualSourcesStayNearUniform) {
  Rng rng(8);
  const Vector w = testing::gaussian_vector(2, rng);
  std::vector<Dataset> src;
  for (int k = 0; k < 3; ++k) src.push_back(testing::linear_dataset(k + 1, 400, w, 0.0, 0.1, rng));
  const DomainCollection coll(testing::linear_dataset(0, 80, w, 0.0, 0.1, rng), std::move(src));
  BaselineHyper hyper;
  hyper.gamma = 1.0;
  hyper.disc_budget.restarts = 4;
  hyper.disc_budget.iters = 100;
  const auto r = run_baseline(BaselineKind::pairwise_disc, coll, LossSpec{}, TrainConfig{}, hyper);
  ASSERT_TRUE(r.lambda);
  EXPECT_LE(r.lambda->l1_distance(MixtureWeight::uniform(3)), 0.1);
}

TEST(RunBaseline, ConvDiscFavorsMatchingSource) {
  Rng rng(9);
  const Vector w = testing::gaussian_vector(2, rng);
  std::vector<Dataset> src{testing::linear_dataset(1, 400, -2.0 * w, 1.0, 0.1, rng),
                           testing::linear_dataset(2, 400, w, 0.0, 0.1, rng)};
  const DomainCollection coll(testing::linear_dataset(0, 100, w, 0.0, 0.1, rng), std::move(src));
  BaselineHyper hyper;
  hyper.penalty = PenaltyConstants{};
  hyper.disc_budget.restarts = 4;
  hyper.disc_budget.iters = 100;
  hyper.outer_iters = 4;
  LossSpec loss;
  loss.bound_M = 100.0;
  const auto r = run_baseline(BaselineKind::conv_disc, coll, loss, TrainConfig{}, hyper);
  ASSERT_TRUE(r.lambda);
  EXPECT_GT((*r.lambda)[1], 0.9);
  EXPECT_EQ(r.objective_trace.size(), 4u);
  for (double v : r.objective_trace) EXPECT_TRUE(std::isfinite(v));
}

TEST(SplitTarget, MovesShareOfTargetIntoNewSource) {
  Rng rng(6);
  const auto coll = testing::random_regression_collection(2, 2, {100, 100}, 50, rng);
  const auto split = split_target(coll, 0.8, 7);
  EXPECT_EQ(split.p(), 3);
  EXPECT_EQ(split.source(2).size(), 40);
  EXPECT_EQ(split.target().size(), 10);
  EXPECT_EQ(split.source(2).domain_id(), 3);
  EXPECT_THROW(split_target(coll, 1.0, 7), ConfigError);
}

TEST(BaselineKindNames, RoundTrip) {
  for (auto k : all_baselines()) EXPECT_EQ(parse_baseline_kind(to_string(k)), k);
  EXPECT_EQ(parse_baseline_kind("pairwise-disc"), BaselineKind::pairwise_disc);
  EXPECT_THROW(parse_baseline_kind("nope"), ConfigError);
}

}  // namespace
}  // namespace msa
