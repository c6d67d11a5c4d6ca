#pragma once

// Simulator for the finite construction behind the √(p/m₀) lower bound on model
// selection with exactly known sources.
//
// X = {1..p/2}, Y = {0, 1}. Source k puts all its mass on x = ⌈k/2⌉ with label 1
// for even k and 0 for odd k, so D_λ has marginal λ_{2x} + λ_{2x−1} = 2/p on x and
// P(y = 1 | x) = λ_{2x}·p/2 = (1 ± ε)/2.

#include "msa/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace msa {

struct LowerBoundInstance {
  int p = 0;
  int m0 = 0;
  double epsilon = 0.0;
  /// Bit j sets λ_{2x} = (1+ε)/p on the two symbols x = 2j+1, 2j+2; a zero bit gives (1−ε)/p.
  std::vector<bool> sign_pattern;
  /// λ over the p sources (index k−1 holds λ_k).
  Eigen::VectorXd lambda_true;
  /// P(y = 1 | x) under D_0, index x−1.
  Eigen::VectorXd p_one;

  int num_symbols() const { return p / 2; }
  /// D_k(1 | ⌈k/2⌉) for source k in 1..p.
  static double source_label_prob(int k) { return k % 2 == 0 ? 1.0 : 0.0; }
  /// h*(x) = 1[λ_{2x} > λ_{2x−1}], one label per symbol.
  std::vector<int> bayes_predictor() const;
  /// Zero-one loss of a symbol → label map under D_0, in closed form.
  double loss(const std::vector<int>& h) const;
  double excess(const std::vector<int>& h) const;
};

/// Throws ConfigError unless p is a positive multiple of 4, m0 ≥ 1, the pattern has
/// p/4 bits and ε ∈ [0, 1]. ε defaults to √(p/m0)/100.
LowerBoundInstance build_instance(int p, int m0, const std::vector<bool>& sign_pattern,
                                  std::optional<double> epsilon = std::nullopt);

struct TargetSample {
  std::vector<int> x;  // symbols in 1..p/2
  std::vector<int> y;
};

/// n i.i.d. draws from D_0.
TargetSample sample_target(const LowerBoundInstance& inst, int n, Rng& rng);

enum class LowerBoundAlgorithm { plug_in_majority, lmsa_select };

std::string to_string(LowerBoundAlgorithm algorithm);
LowerBoundAlgorithm parse_lower_bound_algorithm(const std::string& text);

/// Per-symbol majority vote of the target labels; ties and unseen symbols predict 0.
std::vector<int> plug_in_majority(const LowerBoundInstance& inst, const TargetSample& sample);

/// Model selection over Λ: for every sign pattern, the Bayes predictor of the known
/// mixture D_λ, keeping the one with the smallest empirical zero-one loss on the
/// sample (lowest pattern index on ties). Throws TractabilityError when p/4 > 20.
std::vector<int> lmsa_select_adapter(const LowerBoundInstance& inst, const TargetSample& sample);

struct PenaltyRow {
  int p = 0;
  int m0 = 0;
  double epsilon = 0.0;
  double mean_excess = 0.0;
  double stderr_excess = 0.0;
};

struct PenaltyOptions {
  int trials = 500;
  LowerBoundAlgorithm algorithm = LowerBoundAlgorithm::plug_in_majority;
  std::uint64_t seed = 0;
  /// Overrides √(p/m0)/100 when set.
  std::optional<double> epsilon;
};

/// Mean closed-form excess risk over `trials` random sign patterns and target samples,
/// one row per (p, m0) in p-major order. Trials run in parallel with derived seeds.
std::vector<PenaltyRow> simulate_penalty(const std::vector<int>& p_list, const std::vector<int>& m0_list,
                                         const PenaltyOptions& options);

/// Columns p, m0, epsilon, mean_excess, stderr.
void write_penalty_csv(const std::filesystem::path& path, const std::vector<PenaltyRow>& rows);

}  // namespace msa
