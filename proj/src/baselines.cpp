#include "msa/baselines.hpp"

#include "msa/error.hpp"
#include "msa/io.hpp"
#include "msa/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace msa {

namespace {

constexpr std::array<std::pair<BaselineKind, const char*>, 7> kNames{{
    {BaselineKind::target_only, "target_only"},
    {BaselineKind::best_single_source, "best_single_source"},
    {BaselineKind::combined_sources, "combined_sources"},
    {BaselineKind::sources_plus_target, "sources_plus_target"},
    {BaselineKind::sources_plus_target_equal, "sources_plus_target_equal"},
    {BaselineKind::pairwise_disc, "pairwise_disc"},
    {BaselineKind::conv_disc, "conv_disc"},
}};

std::string format_lambda(const MixtureWeight& lambda) {
  std::string out;
  for (int k = 0; k < lambda.p(); ++k) {
    if (k > 0) out += ';';
    out += io::format_double(lambda[k]);
  }
  return out;
}

void validate(const BaselineHyper& hyper) {
  if (hyper.eg_iters < 1) throw ConfigError("eg_iters must be positive");
  if (hyper.outer_iters < 1) throw ConfigError("outer_iters must be positive");
  if (hyper.gamma && !(std::isfinite(*hyper.gamma) && *hyper.gamma >= 0.0))
    throw ConfigError("pairwise_disc gamma must be finite and >= 0");
  for (double g : hyper.gamma_grid)
    if (!(std::isfinite(g) && g >= 0.0)) throw ConfigError("gamma grid entries must be finite and >= 0");
}

void validate(const PenaltyConstants& c) {
  if (!(c.c > 0.0) || !std::isfinite(c.c)) throw ConfigError("penalty constant c must be positive");
  if (c.d_proxy && !(*c.d_proxy > 0.0 && std::isfinite(*c.d_proxy)))
    throw ConfigError("penalty d_proxy must be positive");
  if (!(c.epsilon > 0.0 && c.epsilon <= 1.0)) throw ConfigError("penalty epsilon must lie in (0, 1]");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("penalty delta must lie in (0, 1)");
}

double default_d_proxy(const DomainCollection& coll, const LossSpec& loss) {
  const Hypothesis h = Hypothesis::zeros(loss.task(), coll.dim(), coll.num_classes(), loss.fit_intercept);
  return static_cast<double>(h.num_params()) + 1.0;
}

// One exponentiated-gradient step λ_k ∝ λ_k exp(−η g_k / ‖g‖∞).
Vector eg_step(const Vector& lambda, const Vector& grad, double eta) {
  const double scale = grad.cwiseAbs().maxCoeff();
  Vector logits = lambda.array().log().matrix();
  if (scale > 0.0) logits -= (eta / scale) * grad;
  const double top = logits.maxCoeff();
  Vector next = (logits.array() - top).exp().matrix();
  return next / next.sum();
}

// Backtracking EG on a convex simplex objective; returns the last accepted point.
template <class Value, class Grad>
Vector eg_minimize(Vector lambda, int iters, Value&& value, Grad&& grad, std::vector<double>* trace) {
  double current = value(lambda);
  if (trace) trace->push_back(current);
  double eta = 1.0;
  for (int t = 0; t < iters; ++t) {
    const Vector g = grad(lambda);
    bool accepted = false;
    while (eta > 1e-12) {
      const Vector cand = eg_step(lambda, g, eta);
      const double v = value(cand);
      if (v <= current) {
        accepted = v < current;
        lambda = cand;
        current = v;
        eta = std::min(eta * 1.5, 16.0);
        break;
      }
      eta *= 0.5;
    }
    if (trace) trace->push_back(current);
    if (!accepted) break;
  }
  return lambda;
}

Vector clip_positive(const Vector& v) {
  // EG needs strictly positive iterates; the floor is far below any reported precision.
  Vector out = v.cwiseMax(1e-300);
  return out / out.sum();
}

Hypothesis erm_on(const DomainCollection& coll, const MixtureWeight& lambda, const LossSpec& loss,
                  const TrainConfig& cfg) {
  return train_on_mixture(coll, lambda, loss, cfg);
}

BaselineResult run_pairwise(const DomainCollection& coll, const LossSpec& loss, const TrainConfig& cfg,
                            const BaselineHyper& hyper) {
  if (!hyper.gamma && hyper.gamma_grid.empty())
    throw ConfigError("pairwise_disc needs gamma or a nonempty gamma grid");
  const MixtureWeight mhat = empirical_proportions(coll);
  const double m = static_cast<double>(coll.total_source_count());
  BaselineResult result{Hypothesis::zeros(loss.task(), coll.dim(), coll.num_classes(), loss.fit_intercept),
                        std::nullopt, {}, {}};

  // Discrepancies use all of D̂_0. The ERM step never sees target rows, so a random
  // quarter of D̂_0 only serves to score the candidate γ values.
  const Dataset& target = coll.target();
  const Eigen::Index n0 = target.size();
  std::optional<Dataset> val_part;
  if (!hyper.gamma && n0 / 4 >= 1) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n0));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    Rng rng(derive_seed(hyper.seed, 0x9a33));
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(static_cast<std::size_t>(n0 / 4));
    val_part = target.subset(rows, target.domain_id());
  }
  const auto estimates = pairwise_disc_matrix(coll, loss, hyper.disc_method, hyper.disc_budget, hyper.seed);
  Vector discs(coll.p());
  for (int k = 0; k < coll.p(); ++k) discs(k) = estimates[static_cast<std::size_t>(k)].value;

  double gamma = hyper.gamma.value_or(hyper.gamma_grid.front());
  if (!hyper.gamma) {
    double best = std::numeric_limits<double>::infinity();
    for (double g : hyper.gamma_grid) {
      const MixtureWeight lam = pairwise_disc_weights(discs, mhat, m, g, hyper.eg_iters);
      const Hypothesis h = erm_on(coll, lam, loss, cfg);
      const double v = empirical_loss(h, val_part ? *val_part : target, loss);
      if (v < best) {
        best = v;
        gamma = g;
      }
    }
    result.metadata.emplace_back("gamma_validation_loss", io::format_double(best));
  }
  const MixtureWeight lambda = pairwise_disc_weights(discs, mhat, m, gamma, hyper.eg_iters, &result.objective_trace);
  result.model = erm_on(coll, lambda, loss, cfg);
  result.metadata.emplace_back("gamma", io::format_double(gamma));
  for (int k = 0; k < coll.p(); ++k)
    result.metadata.emplace_back("disc_" + std::to_string(k + 1), io::format_double(discs(k)));
  result.metadata.emplace_back("lambda", format_lambda(lambda));
  result.lambda = lambda;
  return result;
}

BaselineResult run_conv(const DomainCollection& coll, const LossSpec& loss, const TrainConfig& cfg,
                        const BaselineHyper& hyper) {
  if (!hyper.penalty) throw ConfigError("conv_disc needs penalty constants (c, d_proxy, epsilon, delta)");
  PenaltyConstants constants = *hyper.penalty;
  validate(constants);
  if (!constants.d_proxy) constants.d_proxy = default_d_proxy(coll, loss);

  const int p = coll.p();
  const MixtureWeight mhat = empirical_proportions(coll);
  const double m = static_cast<double>(coll.total_source_count());
  const double d = *constants.d_proxy;
  const double M = loss.bound_M;
  const double skew_coef = constants.c * M / std::sqrt(m) *
                           std::sqrt(std::max(0.0, d * std::log(std::exp(1.0) * m / d) +
                                                       p * std::log(1.0 / (constants.epsilon * constants.delta))));

  // Cutting-plane model of disc(D̂_0, D̄_λ): max over stored witnesses w of
  // |L_0(w) − Σ_k λ_k L_k(w)|, which is convex and piecewise linear in λ.
  struct Plane {
    double target_loss;
    Vector source_losses;
  };
  std::vector<Plane> planes;
  auto disc_model = [&](const Vector& lam, Vector* grad) {
    double best = 0.0;
    if (grad) grad->setZero(p);
    for (const auto& pl : planes) {
      const double diff = pl.target_loss - lam.dot(pl.source_losses);
      if (std::abs(diff) > best) {
        best = std::abs(diff);
        if (grad) *grad = (diff > 0.0 ? -1.0 : 1.0) * pl.source_losses;
      }
    }
    return best;
  };

  BaselineResult result{Hypothesis::zeros(loss.task(), coll.dim(), coll.num_classes(), loss.fit_intercept),
                        std::nullopt, {}, {}};
  Vector lambda = mhat.values();
  std::optional<Hypothesis> last_witness;
  double phi = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < hyper.outer_iters; ++outer) {
    const MixtureWeight lam_w(lambda);
    const Hypothesis h = erm_on(coll, lam_w, loss, cfg);
    Vector h_losses(p);
    for (int k = 0; k < p; ++k) h_losses(k) = empirical_loss(h, coll.source(k), loss);

    EmpiricalMixture target_side{{&coll.target(), 1.0}};
    EmpiricalMixture source_side;
    for (int k = 0; k < p; ++k)
      if (lambda(k) > 0.0) source_side.push_back({&coll.source(k), lambda(k)});
    double mass = 0.0;
    for (const auto& part : source_side) mass += part.mass;
    for (auto& part : source_side) part.mass /= mass;
    const DiscEstimate est = disc_estimate(target_side, source_side, loss, hyper.disc_method, hyper.disc_budget,
                                           derive_seed(hyper.seed, static_cast<std::uint64_t>(outer)), last_witness);
    last_witness = est.witness;
    Plane plane{empirical_loss(est.witness, coll.target(), loss), Vector(p)};
    for (int k = 0; k < p; ++k) plane.source_losses(k) = empirical_loss(est.witness, coll.source(k), loss);
    planes.push_back(std::move(plane));

    auto value = [&](const Vector& lam) {
      return lam.dot(h_losses) + disc_model(lam, nullptr) +
             skew_coef * std::sqrt(skewness(MixtureWeight(lam), mhat));
    };
    auto grad = [&](const Vector& lam) {
      Vector g(p);
      disc_model(lam, &g);
      const double s = skewness(MixtureWeight(lam), mhat);
      g += h_losses;
      if (s > 0.0) g += skew_coef * (lam.array() / mhat.values().array()).matrix() / std::sqrt(s);
      return g;
    };
    lambda = clip_positive(eg_minimize(clip_positive(lambda), hyper.eg_iters, value, grad, nullptr));
    phi = value(lambda);
    result.objective_trace.push_back(phi);
  }
  const MixtureWeight final_lambda(lambda);
  result.model = erm_on(coll, final_lambda, loss, cfg);
  const double disc_final = disc_model(lambda, nullptr);
  result.metadata.emplace_back("disc", io::format_double(disc_final));
  result.metadata.emplace_back(
      "penalty", io::format_double(conv_disc_penalty(final_lambda, coll, loss, disc_final, constants)));
  result.metadata.emplace_back("d_proxy", io::format_double(d));
  result.metadata.emplace_back("lambda", format_lambda(final_lambda));
  result.lambda = final_lambda;
  return result;
}

}  // namespace

std::string to_string(BaselineKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  throw ConfigError("unknown baseline kind");
}

BaselineKind parse_baseline_kind(const std::string& text) {
  std::string norm = text;
  std::replace(norm.begin(), norm.end(), '-', '_');
  for (const auto& [k, name] : kNames)
    if (norm == name) return k;
  throw ConfigError("unknown baseline '" + text + "'");
}

const std::vector<BaselineKind>& all_baselines() {
  static const std::vector<BaselineKind> kinds = [] {
    std::vector<BaselineKind> out;
    for (const auto& entry : kNames) out.push_back(entry.first);
    return out;
  }();
  return kinds;
}

double conv_disc_penalty(const MixtureWeight& lambda, const DomainCollection& coll, const LossSpec& loss,
                         double disc_est, const PenaltyConstants& constants) {
  validate(constants);
  if (lambda.p() != coll.p()) throw DimensionError("mixture weight", coll.p(), lambda.p());
  const double d = constants.d_proxy.value_or(default_d_proxy(coll, loss));
  const double m0 = static_cast<double>(coll.target().size());
  const double m = static_cast<double>(coll.total_source_count());
  const double M = loss.bound_M;
  const double s = skewness(lambda, empirical_proportions(coll));
  const double log_delta = std::log(1.0 / constants.delta);
  const double complexity = d * std::log(std::exp(1.0) * m / d) +
                            coll.p() * std::log(1.0 / (constants.epsilon * constants.delta));
  return disc_est + constants.c * std::sqrt((d + log_delta) / m0) + constants.epsilon * M +
         constants.c * M * std::sqrt(s / m) * std::sqrt(std::max(0.0, complexity));
}

double pairwise_disc_objective(const MixtureWeight& lambda, const Vector& discs, const MixtureWeight& mhat,
                               double m, double gamma) {
  if (discs.size() != lambda.p()) throw DimensionError("discrepancy vector", lambda.p(), discs.size());
  return lambda.values().dot(discs) + gamma * std::sqrt(m * skewness(lambda, mhat));
}

MixtureWeight pairwise_disc_weights(const Vector& discs, const MixtureWeight& mhat, double m, double gamma,
                                    int iters, std::vector<double>* trace) {
  if (discs.size() != mhat.p()) throw DimensionError("discrepancy vector", mhat.p(), discs.size());
  if (iters < 1) throw ConfigError("eg_iters must be positive");
  auto value = [&](const Vector& lam) { return pairwise_disc_objective(MixtureWeight(lam), discs, mhat, m, gamma); };
  auto grad = [&](const Vector& lam) {
    const double s = skewness(MixtureWeight(lam), mhat);
    Vector g = discs;
    if (s > 0.0 && gamma > 0.0)
      g += gamma * std::sqrt(m) * (lam.array() / mhat.values().array()).matrix() / std::sqrt(s);
    return g;
  };
  return MixtureWeight(eg_minimize(clip_positive(mhat.values()), iters, value, grad, trace));
}

DomainCollection split_target(const DomainCollection& coll, double source_fraction, std::uint64_t seed) {
  if (!(source_fraction > 0.0 && source_fraction < 1.0))
    throw ConfigError("target split fraction must lie in (0, 1)");
  const Dataset& target = coll.target();
  const Eigen::Index n = target.size();
  const auto n_src = static_cast<Eigen::Index>(std::floor(source_fraction * static_cast<double>(n)));
  if (n_src < 1 || n_src >= n) throw ConfigError("target sample too small to split");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  Rng rng(derive_seed(seed, 0x5b117));
  std::shuffle(rows.begin(), rows.end(), rng);
  const std::vector<Eigen::Index> src_rows(rows.begin(), rows.begin() + n_src);
  const std::vector<Eigen::Index> keep_rows(rows.begin() + n_src, rows.end());
  std::vector<Dataset> sources = coll.sources();
  sources.push_back(target.subset(src_rows, coll.p() + 1));
  return DomainCollection(target.subset(keep_rows, target.domain_id()), std::move(sources));
}

BaselineResult run_baseline(BaselineKind kind, const DomainCollection& coll, const LossSpec& loss,
                            const TrainConfig& cfg, const BaselineHyper& hyper) {
  loss.validate();
  cfg.validate();
  validate(hyper);
  const int p = coll.p();
  BaselineResult result{Hypothesis::zeros(loss.task(), coll.dim(), coll.num_classes(), loss.fit_intercept),
                        std::nullopt, {}, {}};
  switch (kind) {
    case BaselineKind::target_only:
      result.model = train_on_dataset(coll.target(), loss, cfg);
      break;
    case BaselineKind::best_single_source: {
      const MixtureTrainer trainer(coll, loss, cfg);
      std::vector<MixtureWeight> vertices;
      for (int k = 0; k < p; ++k) vertices.push_back(MixtureWeight::vertex(p, k));
      const auto models = trainer.train_all(vertices);
      int best = 0;
      double best_loss = std::numeric_limits<double>::infinity();
      for (int k = 0; k < p; ++k) {
        const double v = empirical_loss(models[static_cast<std::size_t>(k)], coll.target(), loss);
        if (v < best_loss) {
          best_loss = v;
          best = k;
        }
      }
      result.model = models[static_cast<std::size_t>(best)];
      result.lambda = vertices[static_cast<std::size_t>(best)];
      result.metadata.emplace_back("source", std::to_string(best + 1));
      break;
    }
    case BaselineKind::combined_sources: {
      const MixtureWeight mhat = empirical_proportions(coll);
      result.model = erm_on(coll, mhat, loss, cfg);
      result.lambda = mhat;
      break;
    }
    case BaselineKind::sources_plus_target:
    case BaselineKind::sources_plus_target_equal: {
      std::vector<Dataset> sources = coll.sources();
      sources.push_back(coll.target().with_domain_id(p + 1));
      const DomainCollection joined(coll.target(), std::move(sources));
      const MixtureWeight lambda = kind == BaselineKind::sources_plus_target ? empirical_proportions(joined)
                                                                              : MixtureWeight::uniform(p + 1);
      result.model = erm_on(joined, lambda, loss, cfg);
      result.lambda = lambda;
      break;
    }
    case BaselineKind::pairwise_disc:
      return run_pairwise(coll, loss, cfg, hyper);
    case BaselineKind::conv_disc:
      return run_conv(coll, loss, cfg, hyper);
  }
  if (result.lambda) result.metadata.emplace_back("lambda", format_lambda(*result.lambda));
  return result;
}

}  // namespace msa
