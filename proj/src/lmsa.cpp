#include "msa/lmsa.hpp"

#include "msa/discrepancy.hpp"
#include "msa/error.hpp"
#include "msa/io.hpp"
#include "msa/kernels.hpp"
#include "msa/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace msa {

// ---------------------------------------------------------------------------
// LMSA(Λ)

void LmsaReport::write_csv(const std::filesystem::path& path) const {
  io::CsvWriter csv(path);
  std::vector<std::string> header;
  for (int k = 0; k < chosen_lambda.p(); ++k) header.push_back("lambda_" + std::to_string(k + 1));
  header.push_back("target_loss");
  header.push_back("skewness");
  csv.row(header);
  for (const auto& pt : per_point) {
    std::vector<std::string> cells;
    for (int k = 0; k < pt.lambda.p(); ++k) cells.push_back(io::format_double(pt.lambda[k]));
    cells.push_back(io::format_double(pt.target_loss));
    cells.push_back(io::format_double(pt.skewness));
    csv.row(cells);
  }
}

LmsaResult lmsa_select(const DomainCollection& coll, const SimplexCover& cover, const LossSpec& loss,
                       const TrainConfig& cfg) {
  if (cover.size() == 0) throw ConfigError("cover is empty");
  if (cover.p() != coll.p()) throw DimensionError("cover dimension", coll.p(), cover.p());
  const MixtureTrainer trainer(coll, loss, cfg);
  const auto models = trainer.train_all(cover.points);
  std::vector<double> losses(models.size());
  kernels::parallel_for(static_cast<std::ptrdiff_t>(models.size()), [&](std::ptrdiff_t i) {
    losses[static_cast<std::size_t>(i)] = empirical_loss(models[static_cast<std::size_t>(i)], coll.target(), loss);
  });
  const MixtureWeight mhat = empirical_proportions(coll);
  std::size_t best = 0;
  std::vector<LmsaPoint> rows;
  rows.reserve(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (losses[i] < losses[best]) best = i;
    rows.push_back({cover.points[i], losses[i], skewness(cover.points[i], mhat)});
  }
  LmsaReport report{cover.points[best], best, std::move(rows), losses[best]};
  return {models[best], std::move(report)};
}

// ---------------------------------------------------------------------------
// Ensembles

EnsembleHypothesis::EnsembleHypothesis(std::vector<Member> members) : members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("ensemble needs at least one member");
  double total = 0.0;
  for (const auto& m : members_) {
    if (!(m.alpha >= 0.0)) throw ConfigError("ensemble weights must be nonnegative");
    if (m.h.task() != members_.front().h.task() || m.h.dim() != members_.front().h.dim() ||
        m.h.num_classes() != members_.front().h.num_classes()) {
      throw ConfigError("ensemble members disagree on task or shape");
    }
    total += m.alpha;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("ensemble weights sum to " + io::format_double(total) + ", expected 1");
  }
}

Vector EnsembleHypothesis::predict(const Eigen::Ref<const Vector>& x) const {
  Vector out = Vector::Zero(members_.front().h.weights().rows());
  for (const auto& m : members_) out += m.alpha * msa::predict(m.h, x);
  return out;
}

Eigen::MatrixXd EnsembleHypothesis::predict_all(const RowMatrix& features) const {
  Eigen::MatrixXd out;
  for (const auto& m : members_) {
    const Eigen::MatrixXd p = msa::predict_all(m.h, features);
    if (out.size() == 0) {
      out = m.alpha * p;
    } else {
      out += m.alpha * p;
    }
  }
  return out;
}

namespace {

double mean_loss(const Eigen::MatrixXd& pred, const Dataset& data, const LossSpec& loss) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    sum += example_loss(loss, pred.row(i).transpose(), data.labels()(i));
  }
  return sum / static_cast<double>(pred.rows());
}

}  // namespace

double empirical_loss(const EnsembleHypothesis& e, const Dataset& data, const LossSpec& loss) {
  if (data.dim() != e.members().front().h.dim()) {
    throw DimensionError("dataset features", e.members().front().h.dim(), data.dim());
  }
  return mean_loss(e.predict_all(data.features()), data, loss);
}

// ---------------------------------------------------------------------------
// LMSA-Boost

CoverCluster cluster_cover(const SimplexCover& cover, int branching) {
  if (branching < 2) throw ConfigError("hierarchical sampling needs a branching factor >= 2");
  std::vector<std::size_t> all(cover.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  struct Builder {
    const SimplexCover& cover;
    std::size_t s;

    CoverCluster build(std::vector<std::size_t> pts) const {
      CoverCluster node;
      node.points = std::move(pts);
      if (node.points.size() <= s) return node;
      // Farthest-point centers, then nearest-center assignment.
      std::vector<std::size_t> centers{node.points.front()};
      std::vector<double> dist(node.points.size(), std::numeric_limits<double>::infinity());
      while (centers.size() < s) {
        std::size_t far = 0;
        for (std::size_t i = 0; i < node.points.size(); ++i) {
          dist[i] = std::min(dist[i], cover.points[node.points[i]].l1_distance(cover.points[centers.back()]));
          if (dist[i] > dist[far]) far = i;
        }
        centers.push_back(node.points[far]);
      }
      std::vector<std::vector<std::size_t>> groups(s);
      for (const std::size_t pt : node.points) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < s; ++c) {
          const double d = cover.points[pt].l1_distance(cover.points[centers[c]]);
          if (d < best_d) best_d = d, best = c;
        }
        groups[best].push_back(pt);
      }
      for (auto& g : groups) {
        if (!g.empty()) node.children.push_back(build(std::move(g)));
      }
      return node;
    }
  };
  return Builder{cover, static_cast<std::size_t>(branching)}.build(std::move(all));
}

namespace {

class BoostEngine {
 public:
  BoostEngine(const DomainCollection& coll, const SimplexCover& cover, const LossSpec& loss,
              const TrainConfig& train_cfg, int line_iters)
      : coll_(coll), cover_(cover), loss_(loss), trainer_(coll, loss, train_cfg), line_iters_(line_iters) {}

  /// Trains (once) and caches models and their target predictions.
  void ensure(const std::vector<std::size_t>& indices) {
    std::vector<std::size_t> missing;
    for (const std::size_t i : indices) {
      if (!cache_.count(i) && std::find(missing.begin(), missing.end(), i) == missing.end()) missing.push_back(i);
    }
    std::vector<std::optional<Hypothesis>> models(missing.size());
    std::vector<Eigen::MatrixXd> preds(missing.size());
    kernels::parallel_for(static_cast<std::ptrdiff_t>(missing.size()), [&](std::ptrdiff_t j) {
      const auto u = static_cast<std::size_t>(j);
      models[u] = trainer_.train(cover_.points[missing[u]]);
      preds[u] = predict_all(*models[u], coll_.target().features());
    });
    for (std::size_t j = 0; j < missing.size(); ++j) {
      cache_.emplace(missing[j], Entry{std::move(*models[j]), std::move(preds[j])});
    }
  }

  const Hypothesis& model(std::size_t i) const { return cache_.at(i).model; }
  const Eigen::MatrixXd& prediction(std::size_t i) const { return cache_.at(i).pred; }

  double loss_of(const Eigen::MatrixXd& pred) const { return mean_loss(pred, coll_.target(), loss_); }

  /// Golden-section search of a ↦ L((1−a)E + a·P) on [0, 1], plus the endpoint a = 1.
  std::pair<double, double> line_search(const Eigen::MatrixXd& ens, const Eigen::MatrixXd& cand) const {
    auto f = [&](double a) { return loss_of((1.0 - a) * ens + a * cand); };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < line_iters_; ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = f(x2);
      }
    }
    double a = f1 <= f2 ? x1 : x2;
    double v = std::min(f1, f2);
    const double at_one = f(1.0);
    if (at_one < v) a = 1.0, v = at_one;
    return {a, v};
  }

 private:
  struct Entry {
    Hypothesis model;
    Eigen::MatrixXd pred;
  };
  const DomainCollection& coll_;
  const SimplexCover& cover_;
  const LossSpec& loss_;
  MixtureTrainer trainer_;
  int line_iters_;
  std::map<std::size_t, Entry> cache_;
};

struct Candidate {
  std::size_t index = 0;
  double a = 0.0;
  double value = std::numeric_limits<double>::infinity();
};

Candidate best_candidate(BoostEngine& engine, const Eigen::MatrixXd& ens, const std::vector<std::size_t>& picks) {
  engine.ensure(picks);
  std::vector<Candidate> results(picks.size());
  kernels::parallel_for(static_cast<std::ptrdiff_t>(picks.size()), [&](std::ptrdiff_t j) {
    const auto u = static_cast<std::size_t>(j);
    const auto [a, v] = engine.line_search(ens, engine.prediction(picks[u]));
    results[u] = {picks[u], a, v};
  });
  Candidate best;
  for (const auto& c : results) {
    if (c.value < best.value) best = c;
  }
  return best;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t s, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (s >= n) return all;
  // Partial Fisher–Yates.
  for (std::size_t i = 0; i < s; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(s);
  return all;
}

Candidate hierarchical_candidate(BoostEngine& engine, const Eigen::MatrixXd& ens, const CoverCluster& root,
                                 Rng& rng) {
  const CoverCluster* node = &root;
  Candidate best;
  while (true) {
    std::vector<std::size_t> picks;
    std::vector<const CoverCluster*> owners;
    if (node->children.empty()) {
      picks = node->points;
    } else {
      for (const auto& child : node->children) {
        std::uniform_int_distribution<std::size_t> pick(0, child.points.size() - 1);
        picks.push_back(child.points[pick(rng)]);
        owners.push_back(&child);
      }
    }
    const Candidate level = best_candidate(engine, ens, picks);
    if (!(level.value < best.value - 1e-12)) break;
    best = level;
    if (node->children.empty()) break;
    const auto pos = static_cast<std::size_t>(std::find(picks.begin(), picks.end(), level.index) - picks.begin());
    node = owners[pos];
  }
  return best;
}

}  // namespace

BoostResult lmsa_boost(const DomainCollection& coll, const SimplexCover& cover, const LossSpec& loss,
                       const TrainConfig& train_cfg, const BoostConfig& cfg) {
  if (cover.size() == 0) throw ConfigError("cover is empty");
  if (cover.p() != coll.p()) throw DimensionError("cover dimension", coll.p(), cover.p());
  if (cfg.candidates < 1) throw ConfigError("boost needs at least one candidate per round (s >= 1)");
  if (cfg.rounds < 0) throw ConfigError("boost rounds must be >= 0");

  // Initialization uses the full LMSA(Λ) selection.
  const LmsaResult init = lmsa_select(coll, cover, loss, train_cfg);
  BoostEngine engine(coll, cover, loss, train_cfg, cfg.line_search_iters);
  engine.ensure({init.report.chosen_index});

  std::vector<std::size_t> indices{init.report.chosen_index};
  std::vector<double> alphas{1.0};
  Eigen::MatrixXd ens = engine.prediction(init.report.chosen_index);
  double current = engine.loss_of(ens);
  std::vector<double> trace{current};

  std::optional<CoverCluster> tree;
  if (cfg.hierarchical) tree = cluster_cover(cover, std::max(2, cfg.candidates));
  Rng rng(derive_seed(cfg.seed, 0xb005));
  int accepted = 0;

  for (int round = 0; round < cfg.rounds; ++round) {
    const Candidate c = cfg.hierarchical
                            ? hierarchical_candidate(engine, ens, *tree, rng)
                            : best_candidate(engine, ens,
                                             sample_indices(cover.size(), static_cast<std::size_t>(cfg.candidates), rng));
    if (c.value < current && c.a > 0.0) {
      ens = (1.0 - c.a) * ens + c.a * engine.prediction(c.index);
      for (double& a : alphas) a *= 1.0 - c.a;
      const auto pos = std::find(indices.begin(), indices.end(), c.index);
      if (pos == indices.end()) {
        indices.push_back(c.index);
        alphas.push_back(c.a);
      } else {
        alphas[static_cast<std::size_t>(pos - indices.begin())] += c.a;
      }
      // Recompute from the stored value to keep the trace exact under rounding.
      current = std::min(current, engine.loss_of(ens));
      ++accepted;
    }
    trace.push_back(current);
  }

  // Drop members whose weight vanished and renormalize away rounding.
  std::vector<EnsembleHypothesis::Member> members;
  std::vector<std::size_t> kept;
  const double total = std::accumulate(alphas.begin(), alphas.end(), 0.0);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (alphas[j] <= 0.0) continue;
    members.push_back({alphas[j] / total, engine.model(indices[j])});
    kept.push_back(indices[j]);
  }
  return {EnsembleHypothesis(std::move(members)), std::move(trace), std::move(kept), accepted};
}

// ---------------------------------------------------------------------------
// LMSA-Min-max

void MinmaxConfig::validate() const {
  if (steps < 1) throw ConfigError("minmax steps must be >= 1");
  if (!(eta_h > 0.0) || eta_h > 1.0) throw ConfigError("eta_h must lie in (0, 1]");
  if (!(eta_lambda > 0.0)) throw ConfigError("eta_lambda must be > 0");
  if (!(eta_gamma >= 0.0)) throw ConfigError("eta_gamma must be >= 0");
  if (!(gamma_max > 0.0)) throw ConfigError("gamma_max must be > 0");
  if (gamma0 < 0.0 || gamma0 > gamma_max) throw ConfigError("gamma0 must lie in [0, gamma_max]");
  if (!(feas_tol >= 0.0)) throw ConfigError("feas_tol must be >= 0");
  if (inner_steps < 1) throw ConfigError("inner_steps must be >= 1");
}

namespace {

constexpr double kTiny = 1e-300;

MixtureWeight eg_step(const MixtureWeight& lambda, const Vector& grad, double eta) {
  const double scale = grad.lpNorm<Eigen::Infinity>();
  if (!(scale > 0.0) || !std::isfinite(scale)) return lambda;
  Vector logw = lambda.values().array().max(kTiny).log().matrix() - (eta / scale) * grad;
  logw.array() -= logw.maxCoeff();
  Vector w = logw.array().exp().matrix();
  for (int k = 0; k < lambda.p(); ++k) {
    if (lambda[k] == 0.0) w(k) = 0.0;
  }
  w /= w.sum();
  // Absorb rounding in the largest coordinate so the entries sum to one.
  Eigen::Index top = 0;
  w.maxCoeff(&top);
  w(top) = 0.0;
  w(top) = std::max(0.0, 1.0 - w.sum());
  return MixtureWeight(std::move(w));
}

double next_gamma(double gamma, double violation_rel, const MinmaxConfig& cfg) {
  return std::clamp(gamma + cfg.eta_gamma * violation_rel, 0.0, cfg.gamma_max);
}

void select_output(MinmaxState& st, const MinmaxConfig& cfg) {
  std::size_t best = st.certifier_loss.size();
  for (std::size_t t = 0; t < st.certifier_loss.size(); ++t) {
    if (st.violation[t] > cfg.feas_tol) continue;
    if (best == st.certifier_loss.size() || st.certifier_loss[t] < st.certifier_loss[best]) best = t;
  }
  if (best == st.certifier_loss.size()) {
    best = 0;
    for (std::size_t t = 1; t < st.certifier_loss.size(); ++t) {
      if (st.certifier_loss[t] < st.certifier_loss[best]) best = t;
    }
  }
  st.selected_iter = best;
}

// Squared loss: every quantity is a quadratic form of cached Gram sums.
MinmaxResult minmax_squared(const DomainCollection& coll, const LossSpec& loss, const TrainConfig& train_cfg,
                            const MinmaxConfig& cfg, MixtureWeight lambda) {
  const MixtureTrainer trainer(coll, loss, train_cfg);
  const auto& sums = trainer.source_sums();
  const Dataset& target = coll.target();
  const kernels::GramSums s0 = kernels::weighted_gram(target.features(), target.labels(), {}, loss.fit_intercept);
  const double m0 = static_cast<double>(target.size());
  const int p = coll.p();
  auto hyp = [&](const Vector& theta) {
    return from_params(Task::regression, theta.transpose(), loss.fit_intercept);
  };

  std::vector<Hypothesis> certifiers;
  const Eigen::Index q = coll.dim() + (loss.fit_intercept ? 1 : 0);
  MinmaxState st{hyp(Vector::Zero(q)), lambda, cfg.gamma0, hyp(Vector::Zero(q)), {}, {}, {}, {}, {}, 0};
  double gamma = cfg.gamma0;
  Vector theta;
  for (int t = 0; t < cfg.steps; ++t) {
    const Eigen::MatrixXd a = trainer.system_matrix(lambda);
    const Vector b = trainer.system_rhs(lambda);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    const Vector theta_p = solve_normal_equations(a, b);
    if (t == 0) theta = theta_p;
    double r_p = -b.dot(theta_p);
    for (int k = 0; k < p; ++k) {
      if (lambda[k] == 0.0) continue;
      r_p += lambda[k] / static_cast<double>(coll.source(static_cast<std::size_t>(k)).size()) *
             sums[static_cast<std::size_t>(k)].yty;
    }
    auto violation = [&](const Vector& th) {
      const Vector d = th - theta_p;
      return d.dot(a * d);
    };
    auto target_loss = [&](const Vector& th) {
      return (th.dot(s0.xtx * th) - 2.0 * th.dot(s0.xty) + s0.yty) / m0;
    };
    const double v0 = violation(theta);
    const Hypothesis cert = hyp(theta_p).projected(loss.norm_ball_B);
    st.objective.push_back(target_loss(theta) + gamma * v0);
    st.violation.push_back(v0 / std::max(std::abs(r_p), kTiny));
    st.certifier_loss.push_back(empirical_loss(cert, target, loss));
    st.lambda_trace.push_back(lambda);
    st.gamma_trace.push_back(gamma);
    certifiers.push_back(cert);

    // h-step: Newton-like direction preconditioned by the Hessian of R_λ, exact line search.
    const Vector grad = 2.0 * (s0.xtx * theta - s0.xty) / m0 + gamma * 2.0 * (a * theta - b);
    const Vector dir = -ldlt.solve(grad) / 2.0;
    const double curv = 2.0 * dir.dot(s0.xtx * dir) / m0 + gamma * 2.0 * dir.dot(a * dir);
    if (curv > 0.0) theta += cfg.eta_h * (-grad.dot(dir) / curv) * dir;
    const double nrm = theta.norm();
    if (nrm > loss.norm_ball_B) theta *= loss.norm_ball_B / nrm;

    // λ-step on γ (L_k(h) − L_k(h′)).
    const Vector delta = theta - theta_p;
    Vector g(p);
    for (int k = 0; k < p; ++k) {
      const auto& sk = sums[static_cast<std::size_t>(k)];
      const double mk = static_cast<double>(coll.source(static_cast<std::size_t>(k)).size());
      g(k) = gamma * (delta.dot(sk.xtx * delta) + 2.0 * delta.dot(sk.xtx * theta_p - sk.xty)) / mk;
    }
    const double v1 = violation(theta);
    lambda = eg_step(lambda, g, cfg.eta_lambda / std::sqrt(t + 1.0));
    gamma = next_gamma(gamma, v1 / std::max(std::abs(r_p), kTiny), cfg);
  }
  select_output(st, cfg);
  st.h = hyp(theta).projected(loss.norm_ball_B);
  st.lambda = lambda;
  st.gamma = gamma;
  st.h_prime = trainer.train(lambda);
  return {certifiers[st.selected_iter], std::move(st)};
}

// General differentiable loss: first-order updates throughout.
MinmaxResult minmax_general(const DomainCollection& coll, const LossSpec& loss, const TrainConfig& train_cfg,
                            const MinmaxConfig& cfg, MixtureWeight lambda) {
  const MixtureTrainer trainer(coll, loss, train_cfg);
  LossSpec raw_target = loss;
  raw_target.regularization = 0.0;
  const DomainObjective target_obj = DomainObjective::single(coll.target(), raw_target);
  const Task task = loss.task();
  auto hyp = [&](const Eigen::MatrixXd& params) { return from_params(task, params, loss.fit_intercept); };
  auto smoothness = [&](const DomainObjective& obj) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(obj.gram().xtx, Eigen::EigenvaluesOnly);
    return 0.5 * eig.eigenvalues().maxCoeff() + 2.0 * loss.regularization;
  };

  Eigen::MatrixXd theta_p = to_params(trainer.train(lambda));
  Eigen::MatrixXd theta = theta_p;
  double gamma = cfg.gamma0;
  double step = 1.0;
  std::vector<Hypothesis> certifiers;
  MinmaxState st{hyp(theta), lambda, gamma, hyp(theta_p), {}, {}, {}, {}, {}, 0};
  for (int t = 0; t < cfg.steps; ++t) {
    const DomainObjective r_obj = DomainObjective::mixture(coll, lambda, loss);
    if (t > 0) {
      const double inner = 1.0 / smoothness(r_obj);
      for (int i = 0; i < cfg.inner_steps; ++i) theta_p -= inner * r_obj.objective(theta_p).gradient;
    }
    const double r_p = r_obj.objective(theta_p).value;
    auto f_value = [&](const Eigen::MatrixXd& th) {
      return target_obj.objective(th).value + gamma * (r_obj.objective(th).value - r_p);
    };
    const double v0 = r_obj.objective(theta).value - r_p;
    const Hypothesis cert = hyp(theta_p).projected(loss.norm_ball_B);
    st.objective.push_back(f_value(theta));
    st.violation.push_back(std::max(v0, 0.0) / std::max(std::abs(r_p), kTiny));
    st.certifier_loss.push_back(empirical_loss(cert, coll.target(), loss));
    st.lambda_trace.push_back(lambda);
    st.gamma_trace.push_back(gamma);
    certifiers.push_back(cert);

    // h-step: gradient descent with Armijo backtracking.
    const Eigen::MatrixXd grad = target_obj.objective(theta).gradient + gamma * r_obj.objective(theta).gradient;
    const double f0 = f_value(theta);
    const double g2 = grad.squaredNorm();
    step *= 2.0;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::MatrixXd trial = theta - step * grad;
      if (f_value(trial) <= f0 - 0.5 * step * g2) {
        theta = trial;
        break;
      }
      step *= 0.5;
    }
    const double nrm = theta.norm();
    if (nrm > loss.norm_ball_B) theta *= loss.norm_ball_B / nrm;

    const Vector g = gamma * (trainer.source_losses(hyp(theta)) - trainer.source_losses(hyp(theta_p)));
    const double v1 = r_obj.objective(theta).value - r_p;
    lambda = eg_step(lambda, g, cfg.eta_lambda / std::sqrt(t + 1.0));
    gamma = next_gamma(gamma, v1 / std::max(std::abs(r_p), kTiny), cfg);
  }
  select_output(st, cfg);
  st.h = hyp(theta).projected(loss.norm_ball_B);
  st.lambda = lambda;
  st.gamma = gamma;
  st.h_prime = hyp(theta_p).projected(loss.norm_ball_B);
  return {certifiers[st.selected_iter], std::move(st)};
}

}  // namespace

MinmaxResult lmsa_minmax(const DomainCollection& coll, const LossSpec& loss, const TrainConfig& train_cfg,
                         const MinmaxConfig& cfg) {
  loss.validate();
  train_cfg.validate();
  cfg.validate();
  if (!(loss.strong_convexity_mu > 0.0)) {
    throw PreconditionError(
        "LMSA-Min-max requires a strictly convex loss (Theorem 2): set strong_convexity_mu > 0 "
        "together with regularization > 0");
  }
  if (loss.kind == LossKind::zero_one) throw ConfigError("LMSA-Min-max needs a differentiable loss");
  MixtureWeight lambda = empirical_proportions(coll);
  if (cfg.random_start) {
    Rng rng(derive_seed(cfg.seed, 0x3141));
    lambda = MixtureWeight::random(coll.p(), rng);
  }
  if (loss.kind == LossKind::squared) return minmax_squared(coll, loss, train_cfg, cfg, lambda);
  return minmax_general(coll, loss, train_cfg, cfg, lambda);
}

// ---------------------------------------------------------------------------
// E(λ)

ExcessDiagnostic excess_bound_diag(const DomainCollection& coll, const DomainCollection& population,
                                   const MixtureWeight& lambda, const LossSpec& loss, double resolution,
                                   std::size_t max_points) {
  loss.validate();
  if (lambda.p() != coll.p()) throw DimensionError("mixture weight length", coll.p(), lambda.p());
  if (population.p() != coll.p()) throw DimensionError("population domain count", coll.p(), population.p());
  if (population.dim() != coll.dim()) throw DimensionError("population dimension", coll.dim(), population.dim());
  const ParameterLattice lattice(coll.task(), coll.dim(), coll.num_classes(), loss.fit_intercept, loss.norm_ball_B,
                                 resolution, max_points);
  EmpiricalMixture mix_sample, mix_population;
  for (int k = 0; k < coll.p(); ++k) {
    mix_sample.push_back({&coll.source(static_cast<std::size_t>(k)), lambda[k]});
    mix_population.push_back({&population.source(static_cast<std::size_t>(k)), lambda[k]});
  }
  const EmpiricalMixture target{{&population.target(), 1.0}};

  struct Row {
    bool in_ball = false;
    double sample = 0.0, pop = 0.0, target = 0.0;
  };
  std::vector<Row> rows(lattice.raw_size());
  kernels::parallel_for(static_cast<std::ptrdiff_t>(rows.size()), [&](std::ptrdiff_t i) {
    const auto theta = lattice.point(static_cast<std::size_t>(i));
    if (!theta) return;
    Row& r = rows[static_cast<std::size_t>(i)];
    r.in_ball = true;
    r.sample = mixture_loss(mix_sample, *theta, loss, coll.dim(), coll.num_classes());
    r.pop = mixture_loss(mix_population, *theta, loss, coll.dim(), coll.num_classes());
    r.target = mixture_loss(target, *theta, loss, coll.dim(), coll.num_classes());
  });
  double dev = 0.0, disc = 0.0;
  std::size_t arg_mix = rows.size(), arg_target = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    if (!r.in_ball) continue;
    dev = std::max(dev, std::abs(r.sample - r.pop));
    disc = std::max(disc, std::abs(r.target - r.pop));
    if (arg_mix == rows.size() || r.sample < rows[arg_mix].sample) arg_mix = i;
    if (arg_target == rows.size() || r.target < rows[arg_target].target) arg_target = i;
  }
  return {2.0 * dev + 2.0 * disc,
          dev,
          disc,
          rows[arg_mix].target - rows[arg_target].target,
          lattice.hypothesis(*lattice.point(arg_mix)),
          lattice.hypothesis(*lattice.point(arg_target))};
}

}  // namespace msa
