#pragma once

// Data-parallel inner loops. Every reduction runs over fixed row blocks of
// kBlockRows and combines block partials in block order, so the serial and
// OpenMP variants return bit-identical results for any thread count.

#include "msa/core.hpp"

#include <omp.h>

#include <cstddef>
#include <exception>
#include <limits>
#include <span>

namespace msa::kernels {

inline constexpr Eigen::Index kBlockRows = 256;

/// Σ_i w_i x̃_i x̃_iᵀ, Σ_i w_i y_i x̃_i, Σ_i w_i y_i², Σ_i w_i with x̃ = (x[, 1]).
struct GramSums {
  Eigen::MatrixXd xtx;
  Vector xty;
  double yty = 0.0;
  double weight_sum = 0.0;

  GramSums() = default;
  explicit GramSums(Eigen::Index q) : xtx(Eigen::MatrixXd::Zero(q, q)), xty(Vector::Zero(q)) {}
  GramSums& operator+=(const GramSums& other);
};

/// Σ_i w_i min(raw_loss_i, clip) and its gradient with respect to the K×q
/// parameter matrix (rows are (w_k[, b_k])). Clipped examples contribute no gradient.
struct LossSums {
  double value = 0.0;
  Eigen::MatrixXd gradient;

  LossSums() = default;
  LossSums(Eigen::Index k, Eigen::Index q) : gradient(Eigen::MatrixXd::Zero(k, q)) {}
  LossSums& operator+=(const LossSums& other);
};

/// Empty `weights` means unit weight on every row.
namespace serial {
GramSums weighted_gram(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                       bool intercept);
LossSums loss_objective(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                        const Eigen::MatrixXd& params, LossKind kind, bool intercept,
                        double clip = std::numeric_limits<double>::infinity());
}  // namespace serial

namespace omp {
GramSums weighted_gram(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                       bool intercept);
LossSums loss_objective(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                        const Eigen::MatrixXd& params, LossKind kind, bool intercept,
                        double clip = std::numeric_limits<double>::infinity());
}  // namespace omp

// Library code calls the OpenMP variants.
using omp::loss_objective;
using omp::weighted_gram;

/// Current cap on OpenMP threads.
int thread_limit();
void set_thread_limit(int threads);
/// Applies MSA_THREADS if set to a positive integer; returns the resulting limit.
int apply_env_thread_limit();

/// fn(i) for i in [0, n). Each index must write only to its own slot. The first
/// exception thrown by any index is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(msa_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

template <class Fn>
void serial_for(std::ptrdiff_t n, Fn&& fn) {
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    fn(i);
  }
}

}  // namespace msa::kernels
