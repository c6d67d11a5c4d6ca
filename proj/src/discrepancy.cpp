#include "msa/discrepancy.hpp"

#include "msa/error.hpp"
#include "msa/io.hpp"
#include "msa/kernels.hpp"
#include "msa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace msa {

std::string to_string(DiscMethod method) {
  return method == DiscMethod::ascent ? "ascent" : "grid-oracle";
}

DiscMethod parse_disc_method(const std::string& text) {
  if (text == "ascent") return DiscMethod::ascent;
  if (text == "grid-oracle" || text == "grid") return DiscMethod::grid_oracle;
  throw ConfigError("unknown discrepancy method '" + text + "' (expected ascent or grid-oracle)");
}

namespace {

int rows_for(Task task, int num_classes) { return task == Task::regression ? 1 : num_classes; }

// Adds the clipped loss of one example (and its gradient if requested).
double example_value(const LossSpec& loss, const double* x, int dim, double label, const Vector& theta,
                     int rows, double weight, Vector* grad, Vector& logits) {
  const int q = dim + (loss.fit_intercept ? 1 : 0);
  for (int r = 0; r < rows; ++r) {
    const double* w = theta.data() + static_cast<std::ptrdiff_t>(r) * q;
    double z = loss.fit_intercept ? w[dim] : 0.0;
    for (int j = 0; j < dim; ++j) z += w[j] * x[j];
    logits(r) = z;
  }
  switch (loss.kind) {
    case LossKind::squared: {
      const double res = logits(0) - label;
      const double l = res * res;
      if (l >= loss.bound_M) return loss.bound_M;
      if (grad) {
        const double g = weight * 2.0 * res;
        for (int j = 0; j < dim; ++j) (*grad)(j) += g * x[j];
        if (loss.fit_intercept) (*grad)(dim) += g;
      }
      return l;
    }
    case LossKind::multinomial_log: {
      const int y = static_cast<int>(label);
      const double zmax = logits.head(rows).maxCoeff();
      double sum = 0.0;
      for (int r = 0; r < rows; ++r) sum += std::exp(logits(r) - zmax);
      const double lse = zmax + std::log(sum);
      const double l = lse - logits(y);
      if (l >= loss.bound_M) return loss.bound_M;
      if (grad) {
        for (int r = 0; r < rows; ++r) {
          const double g = weight * (std::exp(logits(r) - lse) - (r == y ? 1.0 : 0.0));
          double* gr = grad->data() + static_cast<std::ptrdiff_t>(r) * q;
          for (int j = 0; j < dim; ++j) gr[j] += g * x[j];
          if (loss.fit_intercept) gr[dim] += g;
        }
      }
      return l;
    }
    case LossKind::zero_one: {
      int best = 0;
      for (int r = 1; r < rows; ++r) {
        if (logits(r) > logits(best)) best = r;
      }
      return std::min(best == static_cast<int>(label) ? 0.0 : 1.0, loss.bound_M);
    }
  }
  return 0.0;
}

void check_mixture(const EmpiricalMixture& side, const char* name, int dim) {
  if (side.empty()) throw ConfigError(std::string(name) + " mixture is empty");
  double total = 0.0;
  for (const auto& part : side) {
    if (!(part.mass >= 0.0)) throw ConfigError(std::string(name) + " mixture has a negative mass");
    if (part.data->dim() != dim) throw DimensionError("discrepancy data dimension", dim, part.data->dim());
    total += part.mass;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError(std::string(name) + " mixture masses sum to " + io::format_double(total));
  }
}

struct GapProblem {
  const EmpiricalMixture& a;
  const EmpiricalMixture& b;
  const LossSpec& loss;
  int dim;
  int num_classes;
  Task task;

  double gap(const Vector& theta, Vector* grad) const {
    if (!grad) {
      return mixture_loss(a, theta, loss, dim, num_classes) - mixture_loss(b, theta, loss, dim, num_classes);
    }
    Vector gb;
    const double la = mixture_loss(a, theta, loss, dim, num_classes, grad);
    const double lb = mixture_loss(b, theta, loss, dim, num_classes, &gb);
    *grad -= gb;
    return la - lb;
  }

  Hypothesis hypothesis(const Vector& theta) const {
    return Hypothesis::from_flat(task, dim, num_classes, loss.fit_intercept, theta);
  }
};

void project(Vector& theta, double radius) {
  const double n = theta.norm();
  if (n > radius) theta *= radius / n;
}

struct AscentResult {
  double value = -1.0;
  Vector theta;
};

AscentResult ascend(const GapProblem& prob, Vector theta, int iters) {
  const double radius = prob.loss.norm_ball_B;
  project(theta, radius);
  Vector grad;
  double g = prob.gap(theta, &grad);
  double obj = g * g;
  double step = 0.1;
  for (int it = 0; it < iters; ++it) {
    const Vector direction = 2.0 * g * grad;
    if (!(direction.squaredNorm() > 0.0)) break;
    Vector trial = theta + step * direction;
    project(trial, radius);
    Vector trial_grad;
    const double tg = prob.gap(trial, &trial_grad);
    if (tg * tg > obj) {
      theta = std::move(trial);
      grad = std::move(trial_grad);
      g = tg;
      obj = tg * tg;
      step *= 1.2;
    } else {
      step *= 0.5;
      if (step < 1e-300) break;
    }
  }
  return {std::abs(g), std::move(theta)};
}

DiscEstimate run_ascent(const GapProblem& prob, const DiscBudget& budget, std::uint64_t seed,
                        const std::optional<Hypothesis>& extra_start) {
  if (prob.loss.kind == LossKind::zero_one) {
    throw ConfigError("ascent needs a differentiable loss; use grid-oracle for zero-one loss");
  }
  if (budget.restarts < 1 || budget.iters < 0) throw ConfigError("ascent budget must have restarts >= 1");
  const Eigen::Index n = static_cast<Eigen::Index>(rows_for(prob.task, prob.num_classes)) *
                         (prob.dim + (prob.loss.fit_intercept ? 1 : 0));
  const int starts = budget.restarts + (extra_start ? 1 : 0);
  std::vector<AscentResult> results(static_cast<std::size_t>(starts));
  kernels::parallel_for(starts, [&](std::ptrdiff_t r) {
    Vector theta;
    if (extra_start && r == budget.restarts) {
      theta = extra_start->flatten();
    } else if (r == 0) {
      theta = Vector::Zero(n);
    } else {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      theta.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) theta(i) = normal(rng);
      const double scale = std::ldexp(1.0, static_cast<int>(r % 8) - 2) * unif(rng);
      const double norm = theta.norm();
      if (norm > 0.0) theta *= std::min(prob.loss.norm_ball_B, scale) / norm;
    }
    results[static_cast<std::size_t>(r)] = ascend(prob, std::move(theta), budget.iters);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].value > results[best].value) best = r;
  }
  return DiscEstimate{results[best].value, DiscMethod::ascent, prob.hypothesis(results[best].theta), starts};
}

DiscEstimate run_grid(const GapProblem& prob, const DiscBudget& budget) {
  const ParameterLattice lattice(prob.task, prob.dim, prob.num_classes, prob.loss.fit_intercept,
                                 prob.loss.norm_ball_B, budget.resolution, budget.max_lattice_points);
  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (lattice.raw_size() + kChunk - 1) / kChunk;
  struct Best {
    double value = -1.0;
    std::size_t index = 0;
  };
  std::vector<Best> partial(chunks);
  kernels::parallel_for(static_cast<std::ptrdiff_t>(chunks), [&](std::ptrdiff_t c) {
    Best best;
    const std::size_t end = std::min(lattice.raw_size(), (static_cast<std::size_t>(c) + 1) * kChunk);
    for (std::size_t i = static_cast<std::size_t>(c) * kChunk; i < end; ++i) {
      const auto theta = lattice.point(i);
      if (!theta) continue;
      const double v = std::abs(prob.gap(*theta, nullptr));
      if (v > best.value) best = {v, i};
    }
    partial[static_cast<std::size_t>(c)] = best;
  });
  Best best;
  for (const auto& b : partial) {
    if (b.value > best.value) best = b;
  }
  // The origin is always in the lattice, so some point was scanned.
  return DiscEstimate{best.value, DiscMethod::grid_oracle, prob.hypothesis(*lattice.point(best.index)), 1};
}

}  // namespace

double mixture_loss(const EmpiricalMixture& side, const Vector& theta, const LossSpec& loss, int dim,
                    int num_classes, Vector* gradient) {
  const Task task = loss.task();
  const int rows = rows_for(task, num_classes);
  if (gradient) gradient->setZero(theta.size());
  Vector logits(rows);
  double total = 0.0;
  for (const auto& part : side) {
    if (part.mass == 0.0) continue;
    const Dataset& data = *part.data;
    const double w = part.mass / static_cast<double>(data.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      sum += example_value(loss, data.features().row(i).data(), dim, data.labels()(i), theta, rows, w,
                           gradient, logits);
    }
    total += w * sum;
  }
  return total;
}

ParameterLattice::ParameterLattice(Task task, int dim, int num_classes, bool intercept, double radius,
                                   double resolution, std::size_t max_points)
    : task_(task), dim_(dim), num_classes_(num_classes), intercept_(intercept), radius_(radius) {
  const int rows = rows_for(task, num_classes);
  if (dim > 3 || rows > 2) {
    throw TractabilityError("grid-oracle discrepancy requires d <= 3 and K <= 2 (got d=" +
                            std::to_string(dim) + ", K=" + std::to_string(rows) + ")");
  }
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be > 0");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("grid radius must be finite and > 0");
  num_params_ = static_cast<Eigen::Index>(rows) * (dim + (intercept ? 1 : 0));
  const double steps = std::floor(radius / resolution * (1.0 + 1e-12));
  if (steps > 1e7) throw TractabilityError("grid-oracle lattice too fine for the norm ball");
  const long s = static_cast<long>(steps);
  for (long i = -s; i <= s; ++i) {
    const double v = static_cast<double>(i) * resolution;
    if (std::abs(v) <= radius * (1.0 + 1e-12)) axis_.push_back(std::clamp(v, -radius, radius));
  }
  if (axis_.empty() || axis_.front() > -radius + 1e-12 * radius) axis_.insert(axis_.begin(), -radius);
  if (axis_.back() < radius - 1e-12 * radius) axis_.push_back(radius);
  double raw = 1.0;
  for (Eigen::Index j = 0; j < num_params_; ++j) raw *= static_cast<double>(axis_.size());
  if (raw > static_cast<double>(max_points)) {
    throw TractabilityError("grid-oracle lattice has " + io::format_double(raw) +
                            " points, above the limit of " + std::to_string(max_points));
  }
  raw_size_ = static_cast<std::size_t>(raw);
}

std::optional<Vector> ParameterLattice::point(std::size_t i) const {
  Vector theta(num_params_);
  const std::size_t base = axis_.size();
  for (Eigen::Index j = num_params_ - 1; j >= 0; --j) {
    theta(j) = axis_[i % base];
    i /= base;
  }
  if (theta.norm() > radius_ * (1.0 + 1e-12)) return std::nullopt;
  return theta;
}

Hypothesis ParameterLattice::hypothesis(const Vector& theta) const {
  return Hypothesis::from_flat(task_, dim_, num_classes_, intercept_, theta);
}

std::vector<Hypothesis> ParameterLattice::hypotheses() const {
  std::vector<Hypothesis> out;
  for (std::size_t i = 0; i < raw_size_; ++i) {
    if (auto theta = point(i)) out.push_back(hypothesis(*theta));
  }
  return out;
}

DiscEstimate disc_estimate(const EmpiricalMixture& a, const EmpiricalMixture& b, const LossSpec& loss,
                           DiscMethod method, const DiscBudget& budget, std::uint64_t seed,
                           const std::optional<Hypothesis>& extra_start) {
  loss.validate();
  if (a.empty()) throw ConfigError("first mixture is empty");
  const Dataset& ref = *a.front().data;
  check_mixture(a, "first", ref.dim());
  check_mixture(b, "second", ref.dim());
  for (const auto* side : {&a, &b}) {
    for (const auto& part : *side) {
      if (part.data->num_classes() != ref.num_classes() || part.data->task() != ref.task()) {
        throw ConfigError("discrepancy inputs disagree on task or class count");
      }
    }
  }
  if (ref.task() != loss.task()) {
    throw ConfigError("loss kind " + to_string(loss.kind) + " does not match " + to_string(ref.task()) +
                      " data");
  }
  const GapProblem prob{a, b, loss, ref.dim(), ref.num_classes(), ref.task()};
  return method == DiscMethod::ascent ? run_ascent(prob, budget, seed, extra_start) : run_grid(prob, budget);
}

DiscEstimate disc_estimate(const Dataset& a, const Dataset& b, const LossSpec& loss, DiscMethod method,
                           const DiscBudget& budget, std::uint64_t seed) {
  return disc_estimate(EmpiricalMixture{{&a, 1.0}}, EmpiricalMixture{{&b, 1.0}}, loss, method, budget, seed);
}

std::vector<DiscEstimate> pairwise_disc_matrix(const DomainCollection& coll, const LossSpec& loss,
                                               DiscMethod method, const DiscBudget& budget,
                                               std::uint64_t seed) {
  std::vector<DiscEstimate> out;
  out.reserve(static_cast<std::size_t>(coll.p()));
  for (int k = 0; k < coll.p(); ++k) {
    out.push_back(disc_estimate(coll.source(static_cast<std::size_t>(k)), coll.target(), loss, method, budget,
                                derive_seed(seed, static_cast<std::uint64_t>(k))));
  }
  return out;
}

}  // namespace msa
