#pragma once

// Cover-based model selection (LMSA), its ensemble variant (LMSA-Boost), the
// Lagrangian saddle-point variant (LMSA-Min-max) and the E(λ) diagnostic.

#include "msa/core.hpp"
#include "msa/erm.hpp"
#include "msa/simplex.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace msa {

struct LmsaPoint {
  MixtureWeight lambda;
  double target_loss;
  double skewness;
};

struct LmsaReport {
  MixtureWeight chosen_lambda;
  std::size_t chosen_index = 0;
  std::vector<LmsaPoint> per_point;
  double selected_loss = 0.0;

  /// Columns lambda_1..lambda_p, target_loss, skewness.
  void write_csv(const std::filesystem::path& path) const;
};

struct LmsaResult {
  Hypothesis model;
  LmsaReport report;
};

/// Trains h_λ for every cover point and returns the one with the smallest
/// evaluation loss on D̂_0 (lowest cover index on ties).
LmsaResult lmsa_select(const DomainCollection& coll, const SimplexCover& cover, const LossSpec& loss,
                       const TrainConfig& cfg);

/// Convex combination Σ α_j h_j; predictions are mixed in output space.
class EnsembleHypothesis {
 public:
  struct Member {
    double alpha;
    Hypothesis h;
  };

  /// Throws ConfigError unless α ≥ 0 and Σ α = 1 within 1e-9.
  explicit EnsembleHypothesis(std::vector<Member> members);

  const std::vector<Member>& members() const { return members_; }
  Task task() const { return members_.front().h.task(); }

  Vector predict(const Eigen::Ref<const Vector>& x) const;
  Eigen::MatrixXd predict_all(const RowMatrix& features) const;

 private:
  std::vector<Member> members_;
};

double empirical_loss(const EnsembleHypothesis& e, const Dataset& data, const LossSpec& loss);

struct BoostConfig {
  /// s: candidates examined per round.
  int candidates = 8;
  /// T: number of rounds.
  int rounds = 50;
  /// Sample candidates through a hierarchical clustering of the cover.
  bool hierarchical = false;
  std::uint64_t seed = 0;
  int line_search_iters = 40;
};

struct BoostResult {
  EnsembleHypothesis ensemble;
  /// Target loss after initialization and after every round.
  std::vector<double> trace;
  /// Cover index of each member, parallel to ensemble.members().
  std::vector<std::size_t> member_indices;
  int accepted_rounds = 0;
};

BoostResult lmsa_boost(const DomainCollection& coll, const SimplexCover& cover, const LossSpec& loss,
                       const TrainConfig& train_cfg, const BoostConfig& cfg);

/// Recursive ℓ1 partition of cover indices with branching factor s.
struct CoverCluster {
  std::vector<std::size_t> points;
  std::vector<CoverCluster> children;
};
CoverCluster cluster_cover(const SimplexCover& cover, int branching);

struct MinmaxConfig {
  int steps = 2000;
  /// Fraction of the exact line-search step taken on h.
  double eta_h = 1.0;
  /// Base rate of the exponentiated-gradient step on λ (decays as 1/√(t+1)).
  double eta_lambda = 0.5;
  double eta_gamma = 100.0;
  double gamma0 = 1.0;
  double gamma_max = 100.0;
  /// Relative constraint violation under which an iterate counts as feasible.
  double feas_tol = 1e-3;
  /// Gradient steps for h′ per round under the log loss.
  int inner_steps = 10;
  bool random_start = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MinmaxState {
  Hypothesis h;
  MixtureWeight lambda;
  double gamma;
  Hypothesis h_prime;
  /// Per iterate: objective L_{D̂_0}(h) + γ (R_λ(h) − R_λ(h′)).
  std::vector<double> objective;
  /// Per iterate: (R_λ(h) − R_λ(h′)) / R_λ(h′).
  std::vector<double> violation;
  /// Per iterate: evaluation loss of h′ on D̂_0.
  std::vector<double> certifier_loss;
  std::vector<MixtureWeight> lambda_trace;
  std::vector<double> gamma_trace;
  std::size_t selected_iter = 0;
};

struct MinmaxResult {
  Hypothesis model;
  MinmaxState state;
};

/// Requires loss.strong_convexity_mu > 0 (PreconditionError otherwise). Returns the
/// certifier h′ of the iterate with the smallest D̂_0 evaluation loss among those
/// whose relative violation is at most feas_tol.
MinmaxResult lmsa_minmax(const DomainCollection& coll, const LossSpec& loss, const TrainConfig& train_cfg,
                         const MinmaxConfig& cfg);

struct ExcessDiagnostic {
  /// E(λ) = 2·deviation + 2·discrepancy.
  double bound;
  /// max_h |L_{D̄_λ}(h) − L_{D_λ}(h)|.
  double deviation;
  /// disc(D_0, D_λ).
  double discrepancy;
  /// L_{D_0}(h_{D̄_λ}) − L_{D_0}(h_{D_0}).
  double measured_excess;
  Hypothesis h_mixture;
  Hypothesis h_target;
};

/// Brute-force E(λ) over the finite lattice class of the grid oracle. `coll`
/// supplies the samples behind D̄_λ; `population` supplies large samples standing
/// in for D_0 (its target) and D_1..D_p (its sources).
ExcessDiagnostic excess_bound_diag(const DomainCollection& coll, const DomainCollection& population,
                                   const MixtureWeight& lambda, const LossSpec& loss, double resolution,
                                   std::size_t max_points = 2'000'000);

}  // namespace msa
