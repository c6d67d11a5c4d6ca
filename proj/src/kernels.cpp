#include "msa/kernels.hpp"

#include "msa/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace msa::kernels {

GramSums& GramSums::operator+=(const GramSums& other) {
  xtx += other.xtx;
  xty += other.xty;
  yty += other.yty;
  weight_sum += other.weight_sum;
  return *this;
}

LossSums& LossSums::operator+=(const LossSums& other) {
  value += other.value;
  gradient += other.gradient;
  return *this;
}

namespace {

Eigen::Index block_count(Eigen::Index n) { return (n + kBlockRows - 1) / kBlockRows; }

void check_inputs(const RowMatrix& x, const Vector& y, std::span<const double> weights) {
  if (y.size() != x.rows()) {
    throw DimensionError("label vector length", x.rows(), y.size());
  }
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != x.rows()) {
    throw DimensionError("weight vector length", x.rows(), static_cast<long>(weights.size()));
  }
}

Eigen::MatrixXd augmented_block(const RowMatrix& x, Eigen::Index start, Eigen::Index rows,
                                bool intercept) {
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd a(rows, d + (intercept ? 1 : 0));
  a.leftCols(d) = x.middleRows(start, rows);
  if (intercept) a.col(d).setOnes();
  return a;
}

Vector block_weights(std::span<const double> weights, Eigen::Index start, Eigen::Index rows) {
  if (weights.empty()) return Vector::Ones(rows);
  return Eigen::Map<const Vector>(weights.data() + start, rows);
}

GramSums gram_block(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                    bool intercept, Eigen::Index block) {
  const Eigen::Index start = block * kBlockRows;
  const Eigen::Index rows = std::min(kBlockRows, x.rows() - start);
  const Eigen::MatrixXd a = augmented_block(x, start, rows, intercept);
  const Vector w = block_weights(weights, start, rows);
  const Vector yb = y.segment(start, rows);

  GramSums out;
  const Eigen::MatrixXd wa = a.array().colwise() * w.array();
  out.xtx = a.transpose() * wa;
  const Vector wy = w.cwiseProduct(yb);
  out.xty = a.transpose() * wy;
  out.yty = wy.dot(yb);
  out.weight_sum = w.sum();
  return out;
}

LossSums loss_block(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                    const Eigen::MatrixXd& params, LossKind kind, bool intercept, double clip,
                    Eigen::Index block) {
  const Eigen::Index start = block * kBlockRows;
  const Eigen::Index rows = std::min(kBlockRows, x.rows() - start);
  const Eigen::MatrixXd a = augmented_block(x, start, rows, intercept);
  const Vector w = block_weights(weights, start, rows);

  LossSums out(params.rows(), params.cols());
  // rows × K raw outputs
  const Eigen::MatrixXd z = a * params.transpose();
  Eigen::MatrixXd residual = Eigen::MatrixXd::Zero(rows, params.rows());

  if (kind == LossKind::squared) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double r = z(i, 0) - y(start + i);
      const double raw = r * r;
      if (raw >= clip) {
        out.value += w(i) * clip;
      } else {
        out.value += w(i) * raw;
        residual(i, 0) = 2.0 * w(i) * r;
      }
    }
  } else if (kind == LossKind::multinomial_log) {
    const Eigen::Index k = params.rows();
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto label = static_cast<Eigen::Index>(y(start + i));
      const double zmax = z.row(i).maxCoeff();
      double denom = 0.0;
      for (Eigen::Index c = 0; c < k; ++c) denom += std::exp(z(i, c) - zmax);
      const double raw = zmax + std::log(denom) - z(i, label);
      if (raw >= clip) {
        out.value += w(i) * clip;
        continue;
      }
      out.value += w(i) * raw;
      for (Eigen::Index c = 0; c < k; ++c) {
        residual(i, c) = w(i) * std::exp(z(i, c) - zmax) / denom;
      }
      residual(i, label) -= w(i);
    }
  } else {
    throw ConfigError("zero-one loss has no gradient; it is evaluation only");
  }
  out.gradient = residual.transpose() * a;
  return out;
}

template <class Sums, class BlockFn>
Sums reduce_serial(Eigen::Index n, Sums total, BlockFn&& fn) {
  for (Eigen::Index b = 0; b < block_count(n); ++b) total += fn(b);
  return total;
}

template <class Sums, class BlockFn>
Sums reduce_parallel(Eigen::Index n, Sums total, BlockFn&& fn) {
  const Eigen::Index blocks = block_count(n);
  std::vector<Sums> partial(static_cast<std::size_t>(blocks));
  parallel_for(blocks, [&](std::ptrdiff_t b) { partial[static_cast<std::size_t>(b)] = fn(b); });
  for (const Sums& s : partial) total += s;
  return total;
}

}  // namespace

namespace serial {

GramSums weighted_gram(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                       bool intercept) {
  check_inputs(x, y, weights);
  return reduce_serial(x.rows(), GramSums(x.cols() + (intercept ? 1 : 0)), [&](Eigen::Index b) {
    return gram_block(x, y, weights, intercept, b);
  });
}

LossSums loss_objective(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                        const Eigen::MatrixXd& params, LossKind kind, bool intercept, double clip) {
  check_inputs(x, y, weights);
  return reduce_serial(x.rows(), LossSums(params.rows(), params.cols()), [&](Eigen::Index b) {
    return loss_block(x, y, weights, params, kind, intercept, clip, b);
  });
}

}  // namespace serial

namespace omp {

GramSums weighted_gram(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                       bool intercept) {
  check_inputs(x, y, weights);
  return reduce_parallel(x.rows(), GramSums(x.cols() + (intercept ? 1 : 0)),
                         [&](Eigen::Index b) { return gram_block(x, y, weights, intercept, b); });
}

LossSums loss_objective(const RowMatrix& x, const Vector& y, std::span<const double> weights,
                        const Eigen::MatrixXd& params, LossKind kind, bool intercept, double clip) {
  check_inputs(x, y, weights);
  return reduce_parallel(x.rows(), LossSums(params.rows(), params.cols()), [&](Eigen::Index b) {
    return loss_block(x, y, weights, params, kind, intercept, clip, b);
  });
}

}  // namespace omp

int thread_limit() { return omp_get_max_threads(); }

void set_thread_limit(int threads) {
  if (threads < 1) throw ConfigError("thread limit must be >= 1");
  omp_set_num_threads(threads);
}

int apply_env_thread_limit() {
  if (const char* env = std::getenv("MSA_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || value < 1) {
      throw ConfigError(std::string("MSA_THREADS must be a positive integer, got '") + env + "'");
    }
    set_thread_limit(static_cast<int>(std::min<long>(value, omp_get_num_procs() * 4L)));
  }
  return thread_limit();
}

}  // namespace msa::kernels
