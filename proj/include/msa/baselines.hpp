#pragma once

// Comparison methods: ERM on fixed mixtures, the pairwise-discrepancy weighting and
// the convex-combination discrepancy objective.

#include "msa/core.hpp"
#include "msa/discrepancy.hpp"
#include "msa/erm.hpp"
#include "msa/simplex.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace msa {

enum class BaselineKind {
  target_only,
  best_single_source,
  combined_sources,
  sources_plus_target,
  sources_plus_target_equal,
  pairwise_disc,
  conv_disc,
};

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(const std::string& text);
const std::vector<BaselineKind>& all_baselines();

/// Constants of the C_ε(λ) penalty.
struct PenaltyConstants {
  double c = 1.0;
  /// Unset: number of hypothesis parameters plus one.
  std::optional<double> d_proxy;
  double epsilon = 0.1;
  double delta = 0.1;
};

struct BaselineHyper {
  /// Fixed γ for pairwise_disc; unset picks the γ in gamma_grid whose model has the
  /// lowest loss on a random quarter of D̂_0.
  std::optional<double> gamma;
  std::vector<double> gamma_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0};
  /// Required by conv_disc.
  std::optional<PenaltyConstants> penalty;
  DiscMethod disc_method = DiscMethod::ascent;
  DiscBudget disc_budget;
  int eg_iters = 500;
  int outer_iters = 10;
  std::uint64_t seed = 0;
};

struct BaselineResult {
  Hypothesis model;
  /// Mixture used for the final ERM; over p + 1 domains for the sources_plus_target kinds.
  std::optional<MixtureWeight> lambda;
  std::vector<std::pair<std::string, std::string>> metadata;
  /// Objective values of the λ optimizer (pairwise_disc, conv_disc).
  std::vector<double> objective_trace;
};

BaselineResult run_baseline(BaselineKind kind, const DomainCollection& coll, const LossSpec& loss,
                            const TrainConfig& cfg, const BaselineHyper& hyper);

/// C_ε(λ) = disc + c·√((d + log(1/δ))/m_0) + ε·M + c·M·√(s(λ‖m̂)/m)·√(d·log(e·m/d) + p·log(1/(ε·δ))).
double conv_disc_penalty(const MixtureWeight& lambda, const DomainCollection& coll, const LossSpec& loss,
                         double disc_est, const PenaltyConstants& constants);

/// Σ λ_k d_k + γ √(m · s(λ‖m̂)).
double pairwise_disc_objective(const MixtureWeight& lambda, const Vector& discs, const MixtureWeight& mhat,
                               double m, double gamma);

/// Minimizes pairwise_disc_objective by exponentiated gradient with backtracking,
/// starting from m̂. The trace (one value per accepted step) never increases.
MixtureWeight pairwise_disc_weights(const Vector& discs, const MixtureWeight& mhat, double m, double gamma,
                                    int iters, std::vector<double>* trace = nullptr);

/// Shuffles D̂_0 with `seed`, moves the first `source_fraction` of it into a new
/// source domain p+1 and keeps the rest as the target.
DomainCollection split_target(const DomainCollection& coll, double source_fraction, std::uint64_t seed);

}  // namespace msa
