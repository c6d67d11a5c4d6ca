#pragma once

// Mixture weights over the p-simplex, ε-covers, skewness and D̄_λ weights.

#include "msa/core.hpp"
#include "msa/rng.hpp"

#include <filesystem>
#include <vector>

namespace msa {

/// A point λ of the simplex Δ_p.
class MixtureWeight {
 public:
  /// Throws ConfigError unless entries are >= 0 and sum to 1 within 1e-9.
  explicit MixtureWeight(Vector lambda);

  static MixtureWeight uniform(int p);
  static MixtureWeight vertex(int p, int k);
  /// Uniform draw from Δ_p (normalized exponentials).
  static MixtureWeight random(int p, Rng& rng);

  int p() const { return static_cast<int>(lambda_.size()); }
  const Vector& values() const { return lambda_; }
  double operator[](int k) const { return lambda_(k); }

  double l1_distance(const MixtureWeight& other) const;

 private:
  Vector lambda_;
};

/// Finite ℓ1 ε-net of Δ_p.
struct SimplexCover {
  double epsilon = 1.0;
  std::vector<MixtureWeight> points;

  int p() const { return points.empty() ? 0 : points.front().p(); }
  std::size_t size() const { return points.size(); }
};

/// Grid cover: the first p-1 coordinates range over {0, ε/p, 2ε/p, …} (≤ 1), the last
/// coordinate takes the remainder. Assignments whose partial sum exceeds 1 are
/// dropped. Throws ConfigError for ε outside (0, 1] or p < 1.
SimplexCover make_cover(int p, double epsilon);

/// Realized cover size without materializing the points.
std::size_t cover_size(int p, double epsilon);

/// 0.25 for p <= 4, 0.5 for p <= 6, 1.0 beyond.
double default_cover_epsilon(int p);

/// s(λ‖m̂) = Σ λ_k² / m̂_k. Returns +infinity when some λ_k > 0 has m̂_k = 0.
double skewness(const MixtureWeight& lambda, const MixtureWeight& mhat);

/// Per-example weights of D̄_λ over the concatenated source examples: example i of
/// domain k gets λ_k / m_k.
Vector mix_weights(const MixtureWeight& lambda, const DomainCollection& coll);

/// m̂ as a MixtureWeight.
MixtureWeight empirical_proportions(const DomainCollection& coll);

/// One λ per row, header lambda_1..lambda_p.
void write_cover_csv(const std::filesystem::path& path, const SimplexCover& cover);
SimplexCover read_cover_csv(const std::filesystem::path& path, double epsilon);

}  // namespace msa
