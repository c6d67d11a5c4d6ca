#include "msa/kernels.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace msa {
namespace {

struct ThreadGuard {
  int saved = kernels::thread_limit();
  ~ThreadGuard() { kernels::set_thread_limit(saved); }
};

TEST(Kernels, GramMatchesDirectProduct) {
  Rng rng(11);
  const RowMatrix x = testing::gaussian_matrix(1000, 4, rng);
  const Vector y = testing::gaussian_vector(1000, rng);
  std::vector<double> w(1000);
  for (int i = 0; i < 1000; ++i) w[static_cast<std::size_t>(i)] = 0.5 + (i % 7);
  const auto g = kernels::serial::weighted_gram(x, y, w, true);

  Eigen::MatrixXd a(1000, 5);
  a.leftCols(4) = x;
  a.col(4).setOnes();
  const Vector wv = Eigen::Map<const Vector>(w.data(), 1000);
  const Eigen::MatrixXd expect = a.transpose() * wv.asDiagonal() * a;
  EXPECT_LE((g.xtx - expect).norm(), 1e-9 * expect.norm());
  EXPECT_LE((g.xty - a.transpose() * wv.cwiseProduct(y)).norm(), 1e-9 * g.xty.norm());
  EXPECT_NEAR(g.weight_sum, wv.sum(), 1e-9);
}

TEST(Kernels, SerialAndParallelAreBitIdentical) {
  Rng rng(12);
  const RowMatrix x = testing::gaussian_matrix(3001, 6, rng);
  Vector y = testing::gaussian_vector(3001, rng);
  Vector labels(3001);
  for (int i = 0; i < 3001; ++i) labels(i) = i % 3;
  std::vector<double> w(3001, 1.0 / 3001);
  const Eigen::MatrixXd params = Eigen::MatrixXd::Random(3, 7);
  ThreadGuard guard;
  for (int threads : {1, 2, 3, 4}) {
    kernels::set_thread_limit(threads);
    const auto gs = kernels::serial::weighted_gram(x, y, w, true);
    const auto gp = kernels::omp::weighted_gram(x, y, w, true);
    EXPECT_EQ(gs.xtx, gp.xtx);
    EXPECT_EQ(gs.xty, gp.xty);
    EXPECT_EQ(gs.yty, gp.yty);
    const auto ls = kernels::serial::loss_objective(x, labels, w, params, LossKind::multinomial_log, true, 4.0);
    const auto lp = kernels::omp::loss_objective(x, labels, w, params, LossKind::multinomial_log, true, 4.0);
    EXPECT_EQ(ls.value, lp.value);
    EXPECT_EQ(ls.gradient, lp.gradient);
    const auto ss = kernels::serial::loss_objective(x, y, {}, params.topRows(1), LossKind::squared, true);
    const auto sp = kernels::omp::loss_objective(x, y, {}, params.topRows(1), LossKind::squared, true);
    EXPECT_EQ(ss.value, sp.value);
    EXPECT_EQ(ss.gradient, sp.gradient);
  }
}

TEST(Kernels, LossGradientMatchesFiniteDifference) {
  Rng rng(13);
  const RowMatrix x = testing::gaussian_matrix(300, 3, rng);
  Vector labels(300);
  for (int i = 0; i < 300; ++i) labels(i) = i % 2;
  Eigen::MatrixXd params = 0.3 * Eigen::MatrixXd::Random(2, 4);
  const auto base = kernels::loss_objective(x, labels, {}, params, LossKind::multinomial_log, true);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 4; ++c) {
      Eigen::MatrixXd plus = params, minus = params;
      plus(r, c) += 1e-6;
      minus(r, c) -= 1e-6;
      const double fd = (kernels::loss_objective(x, labels, {}, plus, LossKind::multinomial_log, true).value -
                         kernels::loss_objective(x, labels, {}, minus, LossKind::multinomial_log, true).value) /
                        2e-6;
      EXPECT_NEAR(base.gradient(r, c), fd, 1e-5 * (1.0 + std::abs(fd)));
    }
  }
}

TEST(Kernels, ParallelForRethrows) {
  EXPECT_THROW(kernels::parallel_for(100,
                                     [](std::ptrdiff_t i) {
                                       if (i == 37) throw std::runtime_error("boom");
                                     }),
               std::runtime_error);
}

}  // namespace
}  // namespace msa
