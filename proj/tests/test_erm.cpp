#include "msa/erm.hpp"
#include "msa/error.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>

namespace msa {
namespace {

DomainCollection concat_as_single(const DomainCollection& coll) {
  std::vector<const Dataset*> parts;
  for (const auto& s : coll.sources()) parts.push_back(&s);
  return DomainCollection(coll.target(), {Dataset::concatenate(parts, 1)});
}

TEST(TrainWeighted, InterpolatesNoiselessData) {
  Rng rng(31);
  Vector w(5);
  w << 0.5, -1.0, 2.0, 0.0, 0.25;
  const Dataset d = testing::linear_dataset(1, 40, w, 0.0, 0.0, rng);
  LossSpec loss;
  loss.regularization = 0.0;
  loss.fit_intercept = false;
  const DomainCollection coll(d, {d});
  const auto h = train_weighted(coll, Vector::Constant(40, 1.0 / 40), loss, TrainConfig{});
  EXPECT_LE((h.weights().row(0).transpose() - w).norm(), 1e-8);
}

TEST(TrainWeighted, VertexWeightsMatchSingleDomainBitwise) {
  Rng rng(32);
  const auto coll = testing::random_regression_collection(3, 4, {50, 80, 30}, 20, rng);
  const LossSpec loss;
  for (int k = 0; k < 3; ++k) {
    const Vector w = mix_weights(MixtureWeight::vertex(3, k), coll);
    const auto a = train_weighted(coll, w, loss, TrainConfig{});
    const auto b = train_on_dataset(coll.source(k), loss, TrainConfig{});
    const auto c = train_on_mixture(coll, MixtureWeight::vertex(3, k), loss, TrainConfig{});
    const auto d = MixtureTrainer(coll, loss, TrainConfig{}).train(MixtureWeight::vertex(3, k));
    EXPECT_EQ(a, b);
    EXPECT_EQ(c, b);
    EXPECT_EQ(d, b);
  }
}

TEST(TrainWeighted, NonConstantWeightsMatchDirectSolve) {
  Rng rng(33);
  const auto coll = testing::random_regression_collection(2, 3, {30, 30}, 10, rng);
  Vector w(60);
  for (int i = 0; i < 60; ++i) w(i) = 1.0 + (i % 5);
  w /= w.sum();
  LossSpec loss;
  loss.regularization = 0.01;
  const auto h = train_weighted(coll, w, loss, TrainConfig{});

  // Weighted ridge via a QR least-squares solve on sqrt-weighted rows.
  Eigen::MatrixXd a(60 + 3, 4);
  Vector b(60 + 3);
  Eigen::Index r = 0;
  for (const auto& src : coll.sources()) {
    for (Eigen::Index i = 0; i < src.size(); ++i, ++r) {
      const double s = std::sqrt(w(r));
      a.row(r).head(3) = s * src.features().row(i);
      a(r, 3) = s;
      b(r) = s * src.labels()(i);
    }
  }
  a.bottomRows(3).setZero();
  a.bottomRightCorner(3, 4).leftCols(3) = std::sqrt(loss.regularization) * Eigen::MatrixXd::Identity(3, 3);
  b.tail(3).setZero();
  const Vector theta = a.colPivHouseholderQr().solve(b);
  EXPECT_LE((h.flatten() - theta).norm(), 1e-10);
}

TEST(TrainWeighted, SingularSystemAdvisesRegularization) {
  const Dataset d(1, Task::regression, 1, RowMatrix::Ones(10, 3), Vector::Ones(10));
  LossSpec loss;
  loss.regularization = 0.0;
  const DomainCollection coll(d, {d});
  try {
    train_weighted(coll, Vector::Constant(10, 0.1), loss, TrainConfig{});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("regularization > 0"), std::string::npos);
  }
}

TEST(TrainWeighted, ToyNoiseFloor) {
  // One source, d = 100, m = 10000, x ~ N(0, I/d), w ~ N(0, I/d), noise variance 0.01.
  Rng rng(34);
  const int d = 100;
  const double sd = 1.0 / std::sqrt(d);
  const Vector w = testing::gaussian_vector(d, rng, sd);
  auto make = [&](Eigen::Index n) {
    RowMatrix x = testing::gaussian_matrix(n, d, rng, sd);
    Vector y = x * w + testing::gaussian_vector(n, rng, 0.1);
    return Dataset(1, Task::regression, 1, std::move(x), std::move(y));
  };
  const Dataset train = make(10000);
  const Dataset test = make(20000);
  LossSpec loss;
  loss.bound_M = 1e6;
  const auto h = train_on_dataset(train, loss, TrainConfig{});
  const double test_loss = empirical_loss(h, test, loss);

  // Ordinary least squares oracle on the same sample.
  Eigen::MatrixXd a(train.size(), d + 1);
  a.leftCols(d) = train.features();
  a.col(d).setOnes();
  const Vector ols = a.householderQr().solve(train.labels());
  const auto h_ols = Hypothesis::from_flat(Task::regression, d, 1, true, ols);
  const double ols_loss = empirical_loss(h_ols, test, loss);

  EXPECT_NEAR(test_loss, 0.01, 0.2 * 0.01);
  EXPECT_NEAR(test_loss, ols_loss, 0.2 * ols_loss);
}

TEST(TrainOnMixture, ProportionsMatchConcatenation) {
  Rng rng(35);
  const auto coll = testing::random_regression_collection(3, 4, {25, 60, 15}, 10, rng);
  const LossSpec loss;
  const auto a = train_on_mixture(coll, empirical_proportions(coll), loss, TrainConfig{});
  const auto b = train_on_mixture(concat_as_single(coll), MixtureWeight::uniform(1), loss, TrainConfig{});
  EXPECT_LE((a.flatten() - b.flatten()).norm(), 1e-12 * (1.0 + b.flatten().norm()));
}

TEST(TrainOnMixture, OpposingSourcesCancel) {
  Rng rng(36);
  RowMatrix x = testing::gaussian_matrix(200, 1, rng);
  const Dataset plus(1, Task::regression, 1, x, x.col(0));
  const Dataset minus(2, Task::regression, 1, x, -x.col(0));
  const DomainCollection coll(plus, {plus, minus});
  LossSpec loss;
  loss.fit_intercept = false;
  loss.bound_M = 1e9;
  const auto h = train_on_mixture(coll, MixtureWeight::uniform(2), loss, TrainConfig{});
  // Brute-force scan of the scalar objective.
  double best_w = 0.0, best = std::numeric_limits<double>::infinity();
  for (int i = -2000; i <= 2000; ++i) {
    const double w = i * 1e-3;
    const auto hw = Hypothesis::from_flat(Task::regression, 1, 1, false, Vector::Constant(1, w));
    const double v = 0.5 * empirical_loss(hw, plus, loss) + 0.5 * empirical_loss(hw, minus, loss) +
                     loss.regularization * w * w;
    if (v < best) best = v, best_w = w;
  }
  EXPECT_NEAR(best_w, 0.0, 1e-12);
  EXPECT_NEAR(h.weights()(0, 0), best_w, 1e-10);
}

TEST(ErmProperties, SquaredSolutionBeatsRandomHypotheses) {
  Rng rng(37);
  const auto coll = testing::random_regression_collection(3, 3, {40, 40, 40}, 10, rng);
  LossSpec loss;
  loss.bound_M = 1e9;
  for (int trial = 0; trial < 10; ++trial) {
    const auto lambda = MixtureWeight::random(3, rng);
    const auto obj = DomainObjective::mixture(coll, lambda, loss);
    const auto h = train(obj, TrainConfig{});
    const double best = objective_value(obj, h);
    for (int i = 0; i < 100; ++i) {
      const auto r = Hypothesis::from_flat(Task::regression, 3, 1, true, h.flatten() + testing::gaussian_vector(4, rng, 0.5));
      EXPECT_LE(best, objective_value(obj, r));
    }
  }
}

TEST(ErmProperties, LogLossConvergesAndBeatsRandomHypotheses) {
  Rng rng(38);
  Eigen::MatrixXd truth(3, 2);
  truth << 1.0, 0.0, -0.5, 1.0, 0.0, -1.0;
  std::vector<Dataset> sources;
  sources.push_back(testing::softmax_dataset(1, 120, truth, rng));
  sources.push_back(testing::softmax_dataset(2, 80, -truth, rng));
  const DomainCollection coll(testing::softmax_dataset(0, 30, truth, rng), std::move(sources));
  LossSpec loss;
  loss.kind = LossKind::multinomial_log;
  loss.regularization = 1e-2;
  TrainConfig cfg;
  cfg.max_iters = 20000;
  for (int trial = 0; trial < 5; ++trial) {
    const auto lambda = MixtureWeight::random(2, rng);
    const auto obj = DomainObjective::mixture(coll, lambda, loss);
    const auto h = train(obj, cfg);
    EXPECT_LE(obj.objective(to_params(h)).gradient.norm(), cfg.tol);
    const double best = objective_value(obj, h);
    for (int i = 0; i < 100; ++i) {
      const auto r = Hypothesis::from_flat(Task::classification, 2, 3, true,
                                           h.flatten() + testing::gaussian_vector(9, rng, 0.3));
      EXPECT_LE(best, objective_value(obj, r));
    }
  }
}

TEST(ErmProperties, LogLossVertexMatchesSingleDomainBitwise) {
  Rng rng(39);
  Eigen::MatrixXd truth(2, 2);
  truth << 1.0, -1.0, -1.0, 1.0;
  std::vector<Dataset> sources;
  sources.push_back(testing::softmax_dataset(1, 300, truth, rng));
  sources.push_back(testing::softmax_dataset(2, 500, -truth, rng));
  const DomainCollection coll(sources[0], sources);
  LossSpec loss;
  loss.kind = LossKind::multinomial_log;
  TrainConfig cfg;
  cfg.max_iters = 300;
  EXPECT_EQ(train_on_mixture(coll, MixtureWeight::vertex(2, 1), loss, cfg),
            train_on_dataset(coll.source(1), loss, cfg));
  EXPECT_EQ(train_weighted(coll, mix_weights(MixtureWeight::vertex(2, 1), coll), loss, cfg),
            train_on_dataset(coll.source(1), loss, cfg));
}

TEST(ErmProperties, Deterministic) {
  Rng rng(40);
  const auto coll = testing::random_regression_collection(4, 5, {30, 40, 50, 60}, 10, rng);
  const MixtureTrainer trainer(coll, LossSpec{}, TrainConfig{});
  const auto cover = make_cover(4, 0.5);
  const auto first = trainer.train_all(cover.points);
  const auto second = trainer.train_all(cover.points);
  ASSERT_EQ(first.size(), cover.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i], second[i]);
    EXPECT_EQ(first[i], train_on_mixture(coll, cover.points[i], LossSpec{}, TrainConfig{}));
  }
}

TEST(ErmProperties, StabilityUnderWeightChanges) {
  // ‖h_λ − h_λ'‖² ≤ M ‖λ − λ'‖₁ / μ with μ the smallest Hessian eigenvalue of the
  // two objectives and M a bound on the per-domain losses at both solutions.
  Rng rng(41);
  const auto coll = testing::random_regression_collection(3, 3, {50, 70, 90}, 10, rng, 0.5);
  LossSpec loss;
  loss.regularization = 0.05;
  loss.fit_intercept = false;
  const MixtureTrainer trainer(coll, loss, TrainConfig{});
  for (int trial = 0; trial < 200; ++trial) {
    const auto l1 = MixtureWeight::random(3, rng);
    const auto l2 = MixtureWeight::random(3, rng);
    const auto h1 = trainer.train(l1);
    const auto h2 = trainer.train(l2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(2.0 * trainer.system_matrix(l1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e2(2.0 * trainer.system_matrix(l2));
    const double mu = std::min(e1.eigenvalues().minCoeff(), e2.eigenvalues().minCoeff());
    const double m_bound = std::max(trainer.source_losses(h1).maxCoeff(), trainer.source_losses(h2).maxCoeff());
    const double lhs = (h1.flatten() - h2.flatten()).norm();
    const double rhs = std::sqrt(m_bound * l1.l1_distance(l2) / mu);
    EXPECT_LE(lhs, 1.1 * rhs);
  }
}

TEST(MixtureTrainer, SourceLossesMatchEvaluation) {
  Rng rng(42);
  const auto coll = testing::random_regression_collection(3, 3, {50, 70, 90}, 10, rng, 0.5);
  LossSpec loss;
  loss.bound_M = 1e9;
  const MixtureTrainer trainer(coll, loss, TrainConfig{});
  const auto h = Hypothesis::from_flat(Task::regression, 3, 1, true, testing::gaussian_vector(4, rng));
  const Vector l = trainer.source_losses(h);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(l(k), empirical_loss(h, coll.source(k), loss), 1e-10);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.tol = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.step_size = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace msa
