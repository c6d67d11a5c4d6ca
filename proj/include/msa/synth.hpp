#pragma once

// Synthetic instances: the Gaussian linear toy benchmark and a regression
// instantiation of the equal-discrepancy counterexample.

#include "msa/core.hpp"
#include "msa/simplex.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace msa {

struct ToyRegressionSpec {
  int p = 4;
  int d = 100;
  /// Per-source sample sizes; empty means 10000 for every source.
  std::vector<Eigen::Index> m_k;
  Eigen::Index m0 = 100;
  /// Unset: (0.7, 0.1, 0.1, 0.1) for p = 4, otherwise 0.7 on the first source and the
  /// rest spread evenly.
  std::optional<MixtureWeight> lambda_star;
  double sigma_sq = 0.01;
  /// Held-out target rows; 0 skips the test set.
  Eigen::Index test_size = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  MixtureWeight resolved_lambda() const;
  std::vector<Eigen::Index> resolved_sizes() const;
};

/// Generated collection plus the generating parameters.
struct ToyRegressionData {
  DomainCollection coll;
  std::optional<Dataset> test;
  std::vector<Vector> w;
  MixtureWeight lambda_star;
  double sigma_sq;
  /// Latent source index (0-based) of every target row.
  std::vector<int> target_latent;

  /// Σ_k λ*_k w_k, the target regression vector.
  Vector oracle_weights() const;
  /// Exact unclipped squared-loss risk of h on the target distribution.
  double target_risk(const Hypothesis& h) const;
};

/// x ~ N(0, I_d/d) everywhere, w_k ~ N(0, I_d/d), source k: y = w_k·x + η with
/// η ~ N(0, σ²); target rows pick a source index from λ* first. Sources, target and
/// test set use separate streams, so the target sample for a smaller m0 is a prefix
/// of the one for a larger m0 under the same seed.
ToyRegressionData gen_toy_regression(const ToyRegressionSpec& spec);

/// Equal-discrepancy instance with p = 3 in two dimensions. Sources 1 and 2 mirror
/// each other across the first axis, the target mixes them 50/50, and source 3 lies
/// on the first axis at a distance from the target regression vector tuned by
/// bisection until its measured discrepancy to D̂_0 matches the other two.
struct Example1Data {
  DomainCollection coll;
  Dataset test;
  std::vector<Vector> w;
  /// Squared loss with the ball and clip used for the discrepancy estimates.
  LossSpec loss;
  double sigma_sq = 0.0;
  /// Measured disc(D̂_k, D̂_0) for k = 1..3.
  Vector discs;
  /// Measured disc(D̂_0, ½D̂_1 + ½D̂_2).
  double mixture_disc = 0.0;
  /// Offset of w_3 from the target regression vector along the first axis.
  double offset = 0.0;
  int calibration_iters = 0;

  double target_risk(const Hypothesis& h) const;
};

/// Throws ConfigError unless n is even and at least 100, and NumericalError with the measured values when
/// the calibration does not reach 5% agreement.
Example1Data gen_example1(Eigen::Index n, std::uint64_t seed);

}  // namespace msa
