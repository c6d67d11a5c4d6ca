#pragma once

// Shared vocabulary: datasets, hypotheses, losses and empirical-loss evaluation.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace msa {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Task { regression, classification };

enum class LossKind {
  squared,
  multinomial_log,
  zero_one,  // evaluation only
};

std::string to_string(Task task);
std::string to_string(LossKind kind);
Task parse_task(const std::string& text);
LossKind parse_loss_kind(const std::string& text);

/// One labeled sample viewed in place inside a Dataset.
struct LabeledExample {
  Eigen::Ref<const Vector> features;
  double label;  // real value, or class index stored as an integral double
};

/// Ordered, nonempty sample drawn from a single domain.
class Dataset {
 public:
  /// Throws ConfigError on an empty sample, a label count mismatch, or a class
  /// index outside [0, num_classes).
  Dataset(int domain_id, Task task, int num_classes, RowMatrix features, Vector labels);

  int domain_id() const { return domain_id_; }
  Task task() const { return task_; }
  /// 1 for regression.
  int num_classes() const { return num_classes_; }
  int dim() const { return static_cast<int>(features_.cols()); }
  Eigen::Index size() const { return features_.rows(); }

  const RowMatrix& features() const { return features_; }
  const Vector& labels() const { return labels_; }
  LabeledExample example(Eigen::Index i) const;

  /// Rows in the given order, relabeled with `domain_id`.
  Dataset subset(std::span<const Eigen::Index> rows, int domain_id) const;
  Dataset with_domain_id(int domain_id) const;

  /// Row-wise concatenation; all parts must agree on task, dimension and K.
  static Dataset concatenate(std::span<const Dataset* const> parts, int domain_id);

 private:
  int domain_id_;
  Task task_;
  int num_classes_;
  RowMatrix features_;
  Vector labels_;
};

/// Target sample D̂_0 plus p source samples D̂_1..D̂_p.
class DomainCollection {
 public:
  DomainCollection(Dataset target, std::vector<Dataset> sources);

  const Dataset& target() const { return target_; }
  const std::vector<Dataset>& sources() const { return sources_; }
  const Dataset& source(std::size_t k) const { return sources_.at(k); }
  int p() const { return static_cast<int>(sources_.size()); }
  int dim() const { return target_.dim(); }
  int num_classes() const { return target_.num_classes(); }
  Task task() const { return target_.task(); }

  /// m = Σ m_k.
  Eigen::Index total_source_count() const;
  std::vector<Eigen::Index> source_sizes() const;
  /// m̂ = (m_1/m, …, m_p/m).
  Vector source_proportions() const;

  /// Same sources, different target sample.
  DomainCollection with_target(Dataset target) const;

 private:
  Dataset target_;
  std::vector<Dataset> sources_;
};

/// Loss kind plus the constants used by algorithms and diagnostics.
struct LossSpec {
  LossKind kind = LossKind::squared;
  double bound_M = 4.0;
  double lipschitz_L = 1.0;
  /// 0 means no strong-convexity claim is made.
  double strong_convexity_mu = 0.0;
  double gradient_bound_G = 1.0;
  /// Ridge coefficient on the non-intercept weights in training objectives.
  double regularization = 1e-3;
  /// Radius of the Euclidean ball holding all hypothesis parameters.
  double norm_ball_B = 1e6;
  bool fit_intercept = true;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
  Task task() const;
};

/// Affine predictor: a length-d regression vector or a K×d softmax classifier.
class Hypothesis {
 public:
  Hypothesis(Task task, Eigen::MatrixXd weights, Vector intercept, bool has_intercept);

  static Hypothesis zeros(Task task, int dim, int num_classes, bool has_intercept);
  /// Inverse of flatten(). Layout: K rows of (w_1..w_d[, b]).
  static Hypothesis from_flat(Task task, int dim, int num_classes, bool has_intercept,
                              const Vector& theta);

  Task task() const { return task_; }
  int dim() const { return static_cast<int>(weights_.cols()); }
  int num_classes() const { return task_ == Task::regression ? 1 : static_cast<int>(weights_.rows()); }
  bool has_intercept() const { return has_intercept_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Vector& intercept() const { return intercept_; }

  Eigen::Index num_params() const;
  Vector flatten() const;
  double parameter_norm() const;
  /// Radial projection onto {‖θ‖ ≤ radius}.
  Hypothesis projected(double radius) const;

  /// Exact (bitwise-value) equality of task, shape and parameters.
  bool operator==(const Hypothesis& other) const;

 private:
  Task task_;
  Eigen::MatrixXd weights_;
  Vector intercept_;
  bool has_intercept_;
};

/// Regression: length-1 vector holding the real prediction. Classification:
/// the softmax probability vector. Throws DimensionError when x has the wrong length.
Vector predict(const Hypothesis& h, const Eigen::Ref<const Vector>& x);

/// Raw model outputs for every row (n×1 for regression, n×K probabilities otherwise).
Eigen::MatrixXd predict_all(const Hypothesis& h, const RowMatrix& features);

/// Per-example evaluation loss, clipped to [0, bound_M]. Zero-one loss uses
/// argmax with the lowest class index winning ties.
double example_loss(const LossSpec& loss, const Eigen::Ref<const Vector>& prediction, double label);

/// Evaluation losses of every example of `data` under h.
Vector example_losses(const Hypothesis& h, const Dataset& data, const LossSpec& loss);

/// Mean evaluation loss.
double empirical_loss(const Hypothesis& h, const Dataset& data, const LossSpec& loss);

/// Σ_i w_i · loss_i. Weights must be nonnegative and sum to 1 within 1e-9.
double empirical_loss(const Hypothesis& h, const Dataset& data, const LossSpec& loss,
                      const Vector& weights);

/// Checks that w is a probability vector of the given length.
void check_probability_weights(const Vector& weights, Eigen::Index expected_size,
                               const char* what);

}  // namespace msa
