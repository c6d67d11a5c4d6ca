#pragma once

// Label discrepancy disc_H(D, D′) = max_{h ∈ H} |L_D(h) − L_{D′}(h)| over linear
// hypotheses inside the ball of radius B, with losses clipped at M.

#include "msa/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace msa {

enum class DiscMethod { ascent, grid_oracle };

std::string to_string(DiscMethod method);
DiscMethod parse_disc_method(const std::string& text);

struct DiscBudget {
  int restarts = 16;
  int iters = 500;
  /// Lattice spacing for the grid oracle.
  double resolution = 1e-2;
  /// Upper limit on lattice points before filtering to the ball.
  std::size_t max_lattice_points = 5'000'000;
};

/// Certified lower bound on the discrepancy: value = |L_a(witness) − L_b(witness)|.
struct DiscEstimate {
  double value = 0.0;
  DiscMethod method = DiscMethod::ascent;
  Hypothesis witness;
  int restarts_used = 0;
};

/// One side of a discrepancy: Σ_j mass_j · (uniform distribution on data_j).
struct WeightedPart {
  const Dataset* data;
  double mass;
};
using EmpiricalMixture = std::vector<WeightedPart>;

DiscEstimate disc_estimate(const Dataset& a, const Dataset& b, const LossSpec& loss, DiscMethod method,
                           const DiscBudget& budget, std::uint64_t seed);

/// Same estimate between two weighted mixtures of samples. Masses on each side must
/// sum to 1. `extra_start` is tried as an additional ascent starting point.
DiscEstimate disc_estimate(const EmpiricalMixture& a, const EmpiricalMixture& b, const LossSpec& loss,
                           DiscMethod method, const DiscBudget& budget, std::uint64_t seed,
                           const std::optional<Hypothesis>& extra_start = std::nullopt);

/// Element k is the estimate of disc(D̂_k, D̂_0).
std::vector<DiscEstimate> pairwise_disc_matrix(const DomainCollection& coll, const LossSpec& loss,
                                               DiscMethod method, const DiscBudget& budget,
                                               std::uint64_t seed);

/// The finite hypothesis set scanned by the grid oracle: every flat parameter
/// vector whose coordinates lie in {i·res : |i·res| ≤ B} ∪ {±B} and whose norm is
/// at most B. Points are ordered lexicographically by coordinate index.
class ParameterLattice {
 public:
  /// Throws TractabilityError unless d ≤ 3, K ≤ 2 and the raw grid has at most
  /// `max_points` points.
  ParameterLattice(Task task, int dim, int num_classes, bool intercept, double radius,
                   double resolution, std::size_t max_points);

  std::size_t raw_size() const { return raw_size_; }
  Eigen::Index num_params() const { return num_params_; }
  /// Flat parameters of raw grid point i, or nullopt when it lies outside the ball.
  std::optional<Vector> point(std::size_t i) const;
  Hypothesis hypothesis(const Vector& theta) const;
  /// All in-ball points, in order.
  std::vector<Hypothesis> hypotheses() const;

 private:
  Task task_;
  int dim_;
  int num_classes_;
  bool intercept_;
  double radius_;
  Eigen::Index num_params_;
  std::vector<double> axis_;
  std::size_t raw_size_ = 0;
};

/// Clipped evaluation loss of flat parameters θ on a mixture, with its gradient
/// (zero on clipped examples) when `gradient` is non-null. Zero-one loss has no
/// gradient.
double mixture_loss(const EmpiricalMixture& side, const Vector& theta, const LossSpec& loss, int dim,
                    int num_classes, Vector* gradient = nullptr);

}  // namespace msa
