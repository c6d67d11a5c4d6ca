#include "msa/erm.hpp"

#include "msa/error.hpp"
#include "msa/io.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <string>

namespace msa {

void TrainConfig::validate() const {
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
  if (step_size && !(*step_size > 0.0)) throw ConfigError("step_size must be > 0");
}

DomainObjective::DomainObjective(std::vector<Group> groups, LossSpec loss)
    : groups_(std::move(groups)), loss_(loss) {
  loss_.validate();
  if (loss_.kind == LossKind::zero_one) {
    throw ConfigError("zero-one loss is evaluation-only and cannot be trained");
  }
  if (groups_.empty()) throw ConfigError("training objective has no data");
  const Dataset& first = *groups_.front().data;
  dim_ = first.dim();
  num_classes_ = first.num_classes();
  if (first.task() != loss_.task()) {
    throw ConfigError("loss kind " + to_string(loss_.kind) + " does not match " +
                      to_string(first.task()) + " data");
  }
  for (const auto& g : groups_) {
    if (g.data->dim() != dim_) throw DimensionError("training data dimension", dim_, g.data->dim());
    if (g.data->num_classes() != num_classes_) {
      throw DimensionError("training data class count", num_classes_, g.data->num_classes());
    }
    if (!g.row_weights.empty() && static_cast<Eigen::Index>(g.row_weights.size()) != g.data->size()) {
      throw DimensionError("group row weights", g.data->size(), static_cast<long>(g.row_weights.size()));
    }
  }
}

DomainObjective DomainObjective::single(const Dataset& data, const LossSpec& loss) {
  return DomainObjective({Group{&data, 1.0 / static_cast<double>(data.size()), {}}}, loss);
}

DomainObjective DomainObjective::mixture(const DomainCollection& coll, const MixtureWeight& lambda,
                                         const LossSpec& loss) {
  if (lambda.p() != coll.p()) throw DimensionError("mixture weight length", coll.p(), lambda.p());
  std::vector<Group> groups;
  for (int k = 0; k < coll.p(); ++k) {
    if (lambda[k] == 0.0) continue;
    const Dataset& src = coll.source(static_cast<std::size_t>(k));
    groups.push_back(Group{&src, lambda[k] / static_cast<double>(src.size()), {}});
  }
  return DomainObjective(std::move(groups), loss);
}

kernels::GramSums DomainObjective::gram() const {
  kernels::GramSums total(q());
  for (const auto& g : groups_) {
    kernels::GramSums s =
        kernels::weighted_gram(g.data->features(), g.data->labels(), g.row_weights, loss_.fit_intercept);
    total.xtx += g.coefficient * s.xtx;
    total.xty += g.coefficient * s.xty;
    total.yty += g.coefficient * s.yty;
    total.weight_sum += g.coefficient * s.weight_sum;
  }
  return total;
}

kernels::LossSums DomainObjective::objective(const Eigen::MatrixXd& params) const {
  const Eigen::Index k = task() == Task::regression ? 1 : num_classes_;
  kernels::LossSums total(k, q());
  for (const auto& g : groups_) {
    kernels::LossSums s = kernels::loss_objective(g.data->features(), g.data->labels(), g.row_weights,
                                                  params, loss_.kind, loss_.fit_intercept);
    total.value += g.coefficient * s.value;
    total.gradient += g.coefficient * s.gradient;
  }
  const auto w = params.leftCols(dim_);
  total.value += loss_.regularization * w.squaredNorm();
  total.gradient.leftCols(dim_) += 2.0 * loss_.regularization * w;
  return total;
}

Eigen::MatrixXd to_params(const Hypothesis& h) {
  const Eigen::Index d = h.dim();
  Eigen::MatrixXd p(h.weights().rows(), d + (h.has_intercept() ? 1 : 0));
  p.leftCols(d) = h.weights();
  if (h.has_intercept()) p.col(d) = h.intercept();
  return p;
}

Hypothesis from_params(Task task, const Eigen::MatrixXd& params, bool intercept) {
  const Eigen::Index d = params.cols() - (intercept ? 1 : 0);
  Vector b = intercept ? Vector(params.col(d)) : Vector::Zero(params.rows());
  return Hypothesis(task, params.leftCols(d), std::move(b), intercept);
}

Vector ridge_mask(int dim, bool intercept) {
  Vector mask = Vector::Ones(dim + (intercept ? 1 : 0));
  if (intercept) mask(dim) = 0.0;
  return mask;
}

Vector solve_normal_equations(const Eigen::MatrixXd& a, const Vector& b) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const double scale = a.diagonal().cwiseAbs().maxCoeff();
  const Vector pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(scale > 0.0) ||
      pivots.minCoeff() <= 1e-13 * pivots.maxCoeff() || ldlt.rcond() < 1e-13) {
    throw NumericalError(
        "normal equations are singular or numerically rank-deficient; set regularization > 0");
  }
  Vector theta = ldlt.solve(b);
  if (!theta.allFinite()) {
    throw NumericalError("normal-equation solve produced non-finite values; set regularization > 0");
  }
  return theta;
}

namespace {

Hypothesis solve_squared(const kernels::GramSums& g, const LossSpec& loss, int dim) {
  Eigen::MatrixXd a = g.xtx;
  a.diagonal() += loss.regularization * ridge_mask(dim, loss.fit_intercept);
  const Vector theta = solve_normal_equations(a, g.xty);
  return from_params(Task::regression, theta.transpose(), loss.fit_intercept)
      .projected(loss.norm_ball_B);
}

Hypothesis descend(const DomainObjective& objective, const TrainConfig& cfg) {
  const LossSpec& loss = objective.loss();
  double step = 0.0;
  if (cfg.step_size) {
    step = *cfg.step_size;
  } else {
    const kernels::GramSums g = objective.gram();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.xtx, Eigen::EigenvaluesOnly);
    const double smooth = 0.5 * eig.eigenvalues().maxCoeff() + 2.0 * loss.regularization;
    step = 1.0 / std::max(smooth, 1e-12);
  }
  Eigen::MatrixXd params = Eigen::MatrixXd::Zero(objective.num_classes(), objective.q());
  for (int it = 0; it < cfg.max_iters; ++it) {
    const kernels::LossSums s = objective.objective(params);
    if (!std::isfinite(s.value)) throw NumericalError("gradient descent diverged; reduce step_size");
    if (s.gradient.norm() <= cfg.tol) break;
    params -= step * s.gradient;
  }
  return from_params(Task::classification, params, loss.fit_intercept).projected(loss.norm_ball_B);
}

}  // namespace

Hypothesis train(const DomainObjective& objective, const TrainConfig& cfg) {
  cfg.validate();
  if (objective.loss().kind == LossKind::squared) {
    return solve_squared(objective.gram(), objective.loss(), objective.dim());
  }
  return descend(objective, cfg);
}

Hypothesis train_weighted(const DomainCollection& coll, const Vector& weights, const LossSpec& loss,
                          const TrainConfig& cfg) {
  check_probability_weights(weights, coll.total_source_count(), "training weights");
  std::vector<DomainObjective::Group> groups;
  Eigen::Index offset = 0;
  for (const auto& src : coll.sources()) {
    const auto seg = weights.segment(offset, src.size());
    offset += src.size();
    if (seg.isZero(0.0)) continue;
    if ((seg.array() == seg(0)).all()) {
      groups.push_back({&src, seg(0), {}});
    } else {
      groups.push_back({&src, 1.0, std::vector<double>(seg.data(), seg.data() + seg.size())});
    }
  }
  return train(DomainObjective(std::move(groups), loss), cfg);
}

Hypothesis train_on_mixture(const DomainCollection& coll, const MixtureWeight& lambda,
                            const LossSpec& loss, const TrainConfig& cfg) {
  return train(DomainObjective::mixture(coll, lambda, loss), cfg);
}

Hypothesis train_on_dataset(const Dataset& data, const LossSpec& loss, const TrainConfig& cfg) {
  return train(DomainObjective::single(data, loss), cfg);
}

double objective_value(const DomainObjective& objective, const Hypothesis& h) {
  return objective.objective(to_params(h)).value;
}

MixtureTrainer::MixtureTrainer(const DomainCollection& coll, LossSpec loss, TrainConfig cfg)
    : coll_(&coll), loss_(loss), cfg_(cfg) {
  loss_.validate();
  cfg_.validate();
  if (coll.task() != loss_.task()) {
    throw ConfigError("loss kind " + to_string(loss_.kind) + " does not match " + to_string(coll.task()) +
                      " data");
  }
  if (loss_.kind == LossKind::squared) {
    sums_.resize(static_cast<std::size_t>(coll.p()));
    kernels::serial_for(coll.p(), [&](std::ptrdiff_t k) {
      const Dataset& src = coll.source(static_cast<std::size_t>(k));
      sums_[static_cast<std::size_t>(k)] =
          kernels::weighted_gram(src.features(), src.labels(), {}, loss_.fit_intercept);
    });
  }
}

Eigen::MatrixXd MixtureTrainer::system_matrix(const MixtureWeight& lambda) const {
  if (loss_.kind != LossKind::squared) throw ConfigError("system_matrix requires squared loss");
  if (lambda.p() != coll_->p()) throw DimensionError("mixture weight length", coll_->p(), lambda.p());
  const Eigen::Index q = coll_->dim() + (loss_.fit_intercept ? 1 : 0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(q, q);
  for (int k = 0; k < coll_->p(); ++k) {
    if (lambda[k] == 0.0) continue;
    const double c = lambda[k] / static_cast<double>(coll_->source(static_cast<std::size_t>(k)).size());
    a += c * sums_[static_cast<std::size_t>(k)].xtx;
  }
  a.diagonal() += loss_.regularization * ridge_mask(coll_->dim(), loss_.fit_intercept);
  return a;
}

Vector MixtureTrainer::system_rhs(const MixtureWeight& lambda) const {
  if (loss_.kind != LossKind::squared) throw ConfigError("system_rhs requires squared loss");
  if (lambda.p() != coll_->p()) throw DimensionError("mixture weight length", coll_->p(), lambda.p());
  const Eigen::Index q = coll_->dim() + (loss_.fit_intercept ? 1 : 0);
  Vector b = Vector::Zero(q);
  for (int k = 0; k < coll_->p(); ++k) {
    if (lambda[k] == 0.0) continue;
    const double c = lambda[k] / static_cast<double>(coll_->source(static_cast<std::size_t>(k)).size());
    b += c * sums_[static_cast<std::size_t>(k)].xty;
  }
  return b;
}

Hypothesis MixtureTrainer::train(const MixtureWeight& lambda) const {
  if (loss_.kind != LossKind::squared) return train_on_mixture(*coll_, lambda, loss_, cfg_);
  const Vector theta = solve_normal_equations(system_matrix(lambda), system_rhs(lambda));
  return from_params(Task::regression, theta.transpose(), loss_.fit_intercept)
      .projected(loss_.norm_ball_B);
}

std::vector<Hypothesis> MixtureTrainer::train_all(std::span<const MixtureWeight> lambdas) const {
  std::vector<std::optional<Hypothesis>> slots(lambdas.size());
  kernels::parallel_for(static_cast<std::ptrdiff_t>(lambdas.size()),
                        [&](std::ptrdiff_t i) { slots[static_cast<std::size_t>(i)] = train(lambdas[i]); });
  std::vector<Hypothesis> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

Vector MixtureTrainer::source_losses(const Hypothesis& h) const {
  Vector out(coll_->p());
  const Eigen::MatrixXd params = to_params(h);
  for (int k = 0; k < coll_->p(); ++k) {
    const Dataset& src = coll_->source(static_cast<std::size_t>(k));
    const double n = static_cast<double>(src.size());
    if (loss_.kind == LossKind::squared) {
      const auto& s = sums_[static_cast<std::size_t>(k)];
      const Vector theta = params.row(0).transpose();
      const double raw = theta.dot(s.xtx * theta) - 2.0 * theta.dot(s.xty) + s.yty;
      out(k) = std::max(raw, 0.0) / n;
    } else {
      out(k) = kernels::loss_objective(src.features(), src.labels(), {}, params, loss_.kind,
                                       loss_.fit_intercept)
                   .value /
               n;
    }
  }
  return out;
}

}  // namespace msa
