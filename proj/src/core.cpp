#include "msa/core.hpp"

#include "msa/error.hpp"

#include <algorithm>
#include <cmath>

namespace msa {

std::string to_string(Task task) {
  return task == Task::regression ? "regression" : "classification";
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::squared:
      return "squared";
    case LossKind::multinomial_log:
      return "multinomial-log";
    case LossKind::zero_one:
      return "zero-one";
  }
  return "unknown";
}

Task parse_task(const std::string& text) {
  if (text == "regression") return Task::regression;
  if (text == "classification") return Task::classification;
  throw ConfigError("unknown task '" + text + "' (expected regression|classification)");
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "squared") return LossKind::squared;
  if (text == "multinomial-log" || text == "log") return LossKind::multinomial_log;
  if (text == "zero-one") return LossKind::zero_one;
  throw ConfigError("unknown loss kind '" + text + "' (expected squared|multinomial-log|zero-one)");
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(int domain_id, Task task, int num_classes, RowMatrix features, Vector labels)
    : domain_id_(domain_id),
      task_(task),
      num_classes_(task == Task::regression ? 1 : num_classes),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (domain_id_ < 0) throw ConfigError("domain id must be >= 0");
  if (features_.rows() == 0) throw ConfigError("dataset must be nonempty");
  if (labels_.size() != features_.rows()) {
    throw DimensionError("dataset labels", features_.rows(), labels_.size());
  }
  if (task_ == Task::classification) {
    if (num_classes_ < 2) throw ConfigError("classification needs K >= 2");
    for (Eigen::Index i = 0; i < labels_.size(); ++i) {
      const double y = labels_(i);
      if (y < 0 || y >= num_classes_ || y != std::floor(y)) {
        throw ConfigError("class label " + std::to_string(y) + " outside {0.." +
                          std::to_string(num_classes_ - 1) + "}");
      }
    }
  }
  if (!features_.allFinite() || !labels_.allFinite()) {
    throw ConfigError("dataset contains non-finite values");
  }
}

LabeledExample Dataset::example(Eigen::Index i) const {
  return {features_.row(i).transpose(), labels_(i)};
}

Dataset Dataset::subset(std::span<const Eigen::Index> rows, int domain_id) const {
  RowMatrix x(static_cast<Eigen::Index>(rows.size()), dim());
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = features_.row(rows[r]);
    y(static_cast<Eigen::Index>(r)) = labels_(rows[r]);
  }
  return Dataset(domain_id, task_, num_classes_, std::move(x), std::move(y));
}

Dataset Dataset::with_domain_id(int domain_id) const {
  return Dataset(domain_id, task_, num_classes_, features_, labels_);
}

Dataset Dataset::concatenate(std::span<const Dataset* const> parts, int domain_id) {
  if (parts.empty()) throw ConfigError("cannot concatenate zero datasets");
  const Dataset& first = *parts.front();
  Eigen::Index rows = 0;
  for (const Dataset* part : parts) {
    if (part->dim() != first.dim()) throw DimensionError("concatenated dataset", first.dim(), part->dim());
    if (part->task() != first.task() || part->num_classes() != first.num_classes()) {
      throw ConfigError("concatenated datasets disagree on task or class count");
    }
    rows += part->size();
  }
  RowMatrix x(rows, first.dim());
  Vector y(rows);
  Eigen::Index offset = 0;
  for (const Dataset* part : parts) {
    x.middleRows(offset, part->size()) = part->features();
    y.segment(offset, part->size()) = part->labels();
    offset += part->size();
  }
  return Dataset(domain_id, first.task(), first.num_classes(), std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// DomainCollection

DomainCollection::DomainCollection(Dataset target, std::vector<Dataset> sources)
    : target_(std::move(target)), sources_(std::move(sources)) {
  if (sources_.empty()) throw ConfigError("a domain collection needs p >= 1 sources");
  for (const Dataset& s : sources_) {
    if (s.dim() != target_.dim()) throw DimensionError("source dataset", target_.dim(), s.dim());
    if (s.task() != target_.task() || s.num_classes() != target_.num_classes()) {
      throw ConfigError("source and target datasets disagree on task or class count");
    }
  }
}

Eigen::Index DomainCollection::total_source_count() const {
  Eigen::Index m = 0;
  for (const Dataset& s : sources_) m += s.size();
  return m;
}

std::vector<Eigen::Index> DomainCollection::source_sizes() const {
  std::vector<Eigen::Index> sizes;
  sizes.reserve(sources_.size());
  for (const Dataset& s : sources_) sizes.push_back(s.size());
  return sizes;
}

Vector DomainCollection::source_proportions() const {
  const double m = static_cast<double>(total_source_count());
  Vector out(p());
  for (int k = 0; k < p(); ++k) out(k) = static_cast<double>(sources_[k].size()) / m;
  return out;
}

DomainCollection DomainCollection::with_target(Dataset target) const {
  return DomainCollection(std::move(target), sources_);
}

// ---------------------------------------------------------------------------
// LossSpec

void LossSpec::validate() const {
  if (!(bound_M > 0)) throw ConfigError("loss bound M must be > 0");
  if (!(lipschitz_L > 0)) throw ConfigError("Lipschitz constant L must be > 0");
  if (!(strong_convexity_mu >= 0)) throw ConfigError("strong convexity mu must be >= 0");
  if (!(gradient_bound_G > 0)) throw ConfigError("gradient bound G must be > 0");
  if (!(regularization >= 0)) throw ConfigError("regularization must be >= 0");
  if (!(norm_ball_B > 0)) throw ConfigError("norm ball radius B must be > 0");
  if (strong_convexity_mu > 0 && regularization > 0 && strong_convexity_mu < regularization) {
    throw ConfigError("strong convexity mu must be >= regularization when both are positive");
  }
}

Task LossSpec::task() const {
  return kind == LossKind::squared ? Task::regression : Task::classification;
}

// ---------------------------------------------------------------------------
// Hypothesis

Hypothesis::Hypothesis(Task task, Eigen::MatrixXd weights, Vector intercept, bool has_intercept)
    : task_(task), weights_(std::move(weights)), intercept_(std::move(intercept)), has_intercept_(has_intercept) {
  if (task_ == Task::regression && weights_.rows() != 1) {
    throw DimensionError("regression weight rows", 1, weights_.rows());
  }
  if (intercept_.size() != weights_.rows()) {
    throw DimensionError("intercept length", weights_.rows(), intercept_.size());
  }
  if (!has_intercept_ && !intercept_.isZero(0.0)) {
    throw ConfigError("hypothesis without intercept must have a zero intercept vector");
  }
}

Hypothesis Hypothesis::zeros(Task task, int dim, int num_classes, bool has_intercept) {
  const int k = task == Task::regression ? 1 : num_classes;
  return Hypothesis(task, Eigen::MatrixXd::Zero(k, dim), Vector::Zero(k), has_intercept);
}

Hypothesis Hypothesis::from_flat(Task task, int dim, int num_classes, bool has_intercept,
                                 const Vector& theta) {
  const int k = task == Task::regression ? 1 : num_classes;
  const int q = dim + (has_intercept ? 1 : 0);
  if (theta.size() != static_cast<Eigen::Index>(k) * q) {
    throw DimensionError("flat parameter vector", static_cast<long>(k) * q, theta.size());
  }
  Eigen::MatrixXd w(k, dim);
  Vector b = Vector::Zero(k);
  for (int r = 0; r < k; ++r) {
    w.row(r) = theta.segment(static_cast<Eigen::Index>(r) * q, dim).transpose();
    if (has_intercept) b(r) = theta(static_cast<Eigen::Index>(r) * q + dim);
  }
  return Hypothesis(task, std::move(w), std::move(b), has_intercept);
}

Eigen::Index Hypothesis::num_params() const {
  return weights_.rows() * (weights_.cols() + (has_intercept_ ? 1 : 0));
}

Vector Hypothesis::flatten() const {
  const Eigen::Index q = weights_.cols() + (has_intercept_ ? 1 : 0);
  Vector theta(num_params());
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    theta.segment(r * q, weights_.cols()) = weights_.row(r).transpose();
    if (has_intercept_) theta(r * q + weights_.cols()) = intercept_(r);
  }
  return theta;
}

double Hypothesis::parameter_norm() const {
  return std::sqrt(weights_.squaredNorm() + intercept_.squaredNorm());
}

Hypothesis Hypothesis::projected(double radius) const {
  const double norm = parameter_norm();
  if (norm <= radius) return *this;
  const double scale = radius / norm;
  return Hypothesis(task_, weights_ * scale, intercept_ * scale, has_intercept_);
}

bool Hypothesis::operator==(const Hypothesis& other) const {
  return task_ == other.task_ && has_intercept_ == other.has_intercept_ &&
         weights_.rows() == other.weights_.rows() && weights_.cols() == other.weights_.cols() &&
         weights_ == other.weights_ && intercept_ == other.intercept_;
}

// ---------------------------------------------------------------------------
// Prediction and losses

namespace {

void softmax_in_place(Eigen::Ref<Vector> logits) {
  const double zmax = logits.maxCoeff();
  logits = (logits.array() - zmax).exp().matrix();
  logits /= logits.sum();
}

}  // namespace

Vector predict(const Hypothesis& h, const Eigen::Ref<const Vector>& x) {
  if (x.size() != h.dim()) throw DimensionError("feature vector", h.dim(), x.size());
  Vector out = h.weights() * x + h.intercept();
  if (h.task() == Task::classification) softmax_in_place(out);
  return out;
}

Eigen::MatrixXd predict_all(const Hypothesis& h, const RowMatrix& features) {
  if (features.cols() != h.dim()) throw DimensionError("feature matrix", h.dim(), features.cols());
  Eigen::MatrixXd out = features * h.weights().transpose();
  out.rowwise() += h.intercept().transpose();
  if (h.task() == Task::classification) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      Vector row = out.row(i).transpose();
      softmax_in_place(row);
      out.row(i) = row.transpose();
    }
  }
  return out;
}

double example_loss(const LossSpec& loss, const Eigen::Ref<const Vector>& prediction, double label) {
  switch (loss.kind) {
    case LossKind::squared: {
      if (prediction.size() != 1) throw DimensionError("squared-loss prediction", 1, prediction.size());
      const double r = prediction(0) - label;
      return std::min(r * r, loss.bound_M);
    }
    case LossKind::multinomial_log: {
      const auto c = static_cast<Eigen::Index>(label);
      if (c < 0 || c >= prediction.size()) throw DimensionError("class label", prediction.size(), c);
      const double prob = prediction(c);
      if (!(prob > 0)) return loss.bound_M;
      return std::min(-std::log(prob), loss.bound_M);
    }
    case LossKind::zero_one: {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < prediction.size(); ++c) {
        if (prediction(c) > prediction(best)) best = c;
      }
      return std::min(best == static_cast<Eigen::Index>(label) ? 0.0 : 1.0, loss.bound_M);
    }
  }
  return 0.0;
}

Vector example_losses(const Hypothesis& h, const Dataset& data, const LossSpec& loss) {
  if (data.dim() != h.dim()) throw DimensionError("dataset features", h.dim(), data.dim());
  if ((loss.kind == LossKind::squared) != (h.task() == Task::regression)) {
    throw ConfigError("loss kind " + to_string(loss.kind) + " does not match " + to_string(h.task()) +
                      " hypothesis");
  }
  const Eigen::MatrixXd pred = predict_all(h, data.features());
  Vector out(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out(i) = example_loss(loss, pred.row(i).transpose(), data.labels()(i));
  }
  return out;
}

double empirical_loss(const Hypothesis& h, const Dataset& data, const LossSpec& loss) {
  return example_losses(h, data, loss).mean();
}

double empirical_loss(const Hypothesis& h, const Dataset& data, const LossSpec& loss,
                      const Vector& weights) {
  check_probability_weights(weights, data.size(), "empirical-loss weights");
  return weights.dot(example_losses(h, data, loss));
}

void check_probability_weights(const Vector& weights, Eigen::Index expected_size, const char* what) {
  if (weights.size() != expected_size) throw DimensionError(what, expected_size, weights.size());
  if ((weights.array() < 0).any() || !weights.allFinite()) {
    throw ConfigError(std::string(what) + " must be finite and nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9) {
    throw ConfigError(std::string(what) + " must sum to 1 within 1e-9");
  }
}

}  // namespace msa
