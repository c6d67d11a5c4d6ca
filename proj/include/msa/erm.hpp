#pragma once

// Weighted empirical risk minimization: h_{D̄_λ} = argmin_h Σ_k λ_k L_{D̂_k}(h) + reg·‖w‖².

#include "msa/core.hpp"
#include "msa/kernels.hpp"
#include "msa/simplex.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace msa {

struct TrainConfig {
  int max_iters = 5000;
  /// Gradient ℓ2-norm stopping threshold for iterative training.
  double tol = 1e-8;
  /// Unset: 1/L with L estimated from the weighted Gram matrix.
  std::optional<double> step_size;
  std::uint64_t seed = 0;

  void validate() const;
};

/// A weighted training objective over groups of rows. Each group contributes
/// coefficient · Σ_i w_i raw_loss_i (w = 1 when the group has no row weights).
/// Group sums are computed separately and combined in group order, which makes
/// training on λ = e_k bit-identical to training on D̂_k alone.
class DomainObjective {
 public:
  struct Group {
    const Dataset* data;
    double coefficient;
    std::vector<double> row_weights;  // empty = unit weights
  };

  DomainObjective(std::vector<Group> groups, LossSpec loss);

  /// Uniform 1/n weights on one dataset.
  static DomainObjective single(const Dataset& data, const LossSpec& loss);
  /// Coefficient λ_k/m_k on source k (the D̄_λ objective).
  static DomainObjective mixture(const DomainCollection& coll, const MixtureWeight& lambda,
                                 const LossSpec& loss);

  const LossSpec& loss() const { return loss_; }
  int dim() const { return dim_; }
  int num_classes() const { return num_classes_; }
  Task task() const { return loss_.task(); }
  /// d plus one when an intercept is fitted.
  Eigen::Index q() const { return dim_ + (loss_.fit_intercept ? 1 : 0); }

  /// Σ_g c_g Σ_i w_i x̃_i x̃_iᵀ etc. over all groups.
  kernels::GramSums gram() const;
  /// Raw weighted loss plus reg·‖w‖² and its gradient (K×q parameter layout).
  kernels::LossSums objective(const Eigen::MatrixXd& params) const;

 private:
  std::vector<Group> groups_;
  LossSpec loss_;
  int dim_ = 0;
  int num_classes_ = 1;
};

/// K×q parameter matrix (rows (w_k, b_k)) for h.
Eigen::MatrixXd to_params(const Hypothesis& h);
Hypothesis from_params(Task task, const Eigen::MatrixXd& params, bool intercept);

/// Diagonal mask with ones on the weight coordinates and zero on the intercept.
Vector ridge_mask(int dim, bool intercept);

/// Minimizer of the objective. Squared loss: exact solve of the ridge normal
/// equations. Multinomial log: full-batch gradient descent from zero. The result is
/// projected onto the ball of radius loss.norm_ball_B.
Hypothesis train(const DomainObjective& objective, const TrainConfig& cfg);

/// Per-example weights over the concatenated sources of `coll`. When the weights are
/// constant within every domain the per-domain path of train_on_mixture is used.
Hypothesis train_weighted(const DomainCollection& coll, const Vector& weights,
                          const LossSpec& loss, const TrainConfig& cfg);

Hypothesis train_on_mixture(const DomainCollection& coll, const MixtureWeight& lambda,
                            const LossSpec& loss, const TrainConfig& cfg);

Hypothesis train_on_dataset(const Dataset& data, const LossSpec& loss, const TrainConfig& cfg);

/// Training objective value (raw loss plus ridge term) of h.
double objective_value(const DomainObjective& objective, const Hypothesis& h);

/// Caches per-source Gram sums so that repeated squared-loss solves for many λ
/// cost O(p q² + q³) each. Other losses fall back to train_on_mixture.
class MixtureTrainer {
 public:
  MixtureTrainer(const DomainCollection& coll, LossSpec loss, TrainConfig cfg);

  const DomainCollection& collection() const { return *coll_; }
  const LossSpec& loss() const { return loss_; }
  const TrainConfig& config() const { return cfg_; }

  Hypothesis train(const MixtureWeight& lambda) const;
  /// Results in input order; solves run in parallel.
  std::vector<Hypothesis> train_all(std::span<const MixtureWeight> lambdas) const;

  /// Raw (unclipped) training loss L_{D̂_k}(h) of every source.
  Vector source_losses(const Hypothesis& h) const;

  /// Squared loss only: per-source unit-weight sums S_k, t_k, u_k.
  const std::vector<kernels::GramSums>& source_sums() const { return sums_; }
  /// Squared loss only: Σ_k (λ_k/m_k) S_k + reg·mask, the half-Hessian of R_λ.
  Eigen::MatrixXd system_matrix(const MixtureWeight& lambda) const;
  Vector system_rhs(const MixtureWeight& lambda) const;

 private:
  const DomainCollection* coll_;
  LossSpec loss_;
  TrainConfig cfg_;
  std::vector<kernels::GramSums> sums_;
};

/// Solves A θ = b for symmetric positive (semi)definite A; throws NumericalError
/// advising regularization > 0 when A is numerically singular.
Vector solve_normal_equations(const Eigen::MatrixXd& a, const Vector& b);

}  // namespace msa
