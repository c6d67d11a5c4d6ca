#include "msa/synth.hpp"

#include "msa/discrepancy.hpp"
#include "msa/error.hpp"
#include "msa/io.hpp"
#include "msa/rng.hpp"

#include <cmath>
#include <random>

namespace msa {

namespace {

RowMatrix gaussian_rows(Eigen::Index n, int d, double sd, Rng& rng) {
  std::normal_distribution<double> g(0.0, sd);
  RowMatrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = g(rng);
  return x;
}

Vector gaussian(int d, double sd, Rng& rng) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(d);
  for (int j = 0; j < d; ++j) v(j) = g(rng);
  return v;
}

// Target-style draw: each row first picks a source index from `lambda`, then x, then noise.
Dataset mixture_rows(int id, Eigen::Index n, const std::vector<Vector>& w, const Vector& lambda, double x_sd,
                     double noise_sd, Rng& rng, std::vector<int>* latent) {
  const int d = static_cast<int>(w.front().size());
  std::discrete_distribution<int> pick(lambda.data(), lambda.data() + lambda.size());
  std::normal_distribution<double> gx(0.0, x_sd), gn(0.0, noise_sd);
  RowMatrix x(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = pick(rng);
    for (int j = 0; j < d; ++j) x(i, j) = gx(rng);
    y(i) = x.row(i).dot(w[static_cast<std::size_t>(k)]) + gn(rng);
    if (latent) latent->push_back(k);
  }
  return Dataset(id, Task::regression, 1, std::move(x), std::move(y));
}

double mixture_risk(const Hypothesis& h, const std::vector<Vector>& w, const Vector& lambda, double x_var,
                    double sigma_sq) {
  if (h.task() != Task::regression) throw ConfigError("target risk needs a regression hypothesis");
  if (h.dim() != w.front().size()) throw DimensionError("hypothesis", w.front().size(), h.dim());
  const Vector hw = h.weights().row(0).transpose();
  const double c = h.has_intercept() ? h.intercept()(0) : 0.0;
  double risk = c * c + sigma_sq;
  for (std::size_t k = 0; k < w.size(); ++k) risk += lambda(static_cast<Eigen::Index>(k)) * x_var * (w[k] - hw).squaredNorm();
  return risk;
}

}  // namespace

void ToyRegressionSpec::validate() const {
  if (p < 1) throw ConfigError("toy p must be >= 1");
  if (d < 1) throw ConfigError("toy d must be >= 1");
  if (m0 < 1) throw ConfigError("toy m0 must be >= 1");
  if (test_size < 0) throw ConfigError("toy test_size must be >= 0");
  if (!(sigma_sq >= 0.0) || !std::isfinite(sigma_sq)) throw ConfigError("toy sigma_sq must be >= 0");
  if (!m_k.empty() && static_cast<int>(m_k.size()) != p) throw DimensionError("toy m_k", p, static_cast<long>(m_k.size()));
  for (auto mk : m_k)
    if (mk < 1) throw ConfigError("toy source sizes must be >= 1");
  if (lambda_star && lambda_star->p() != p) throw DimensionError("toy lambda_star", p, lambda_star->p());
}

MixtureWeight ToyRegressionSpec::resolved_lambda() const {
  if (lambda_star) return *lambda_star;
  if (p == 1) return MixtureWeight::uniform(1);
  if (p == 4) return MixtureWeight((Vector(4) << 0.7, 0.1, 0.1, 0.1).finished());
  Vector v = Vector::Constant(p, 0.3 / (p - 1));
  v(0) = 0.7;
  return MixtureWeight(v);
}

std::vector<Eigen::Index> ToyRegressionSpec::resolved_sizes() const {
  return m_k.empty() ? std::vector<Eigen::Index>(static_cast<std::size_t>(p), 10000) : m_k;
}

Vector ToyRegressionData::oracle_weights() const {
  Vector out = Vector::Zero(w.front().size());
  for (std::size_t k = 0; k < w.size(); ++k) out += lambda_star[static_cast<int>(k)] * w[k];
  return out;
}

double ToyRegressionData::target_risk(const Hypothesis& h) const {
  return mixture_risk(h, w, lambda_star.values(), 1.0 / static_cast<double>(w.front().size()), sigma_sq);
}

ToyRegressionData gen_toy_regression(const ToyRegressionSpec& spec) {
  spec.validate();
  const MixtureWeight lambda = spec.resolved_lambda();
  const auto sizes = spec.resolved_sizes();
  const double sd = 1.0 / std::sqrt(static_cast<double>(spec.d));
  const double noise_sd = std::sqrt(spec.sigma_sq);

  std::vector<Vector> w;
  Rng wrng(derive_seed(spec.seed, 0));
  for (int k = 0; k < spec.p; ++k) w.push_back(gaussian(spec.d, sd, wrng));

  std::vector<Dataset> sources;
  for (int k = 0; k < spec.p; ++k) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(k) + 1));
    RowMatrix x = gaussian_rows(sizes[static_cast<std::size_t>(k)], spec.d, sd, rng);
    Vector y = x * w[static_cast<std::size_t>(k)];
    std::normal_distribution<double> g(0.0, noise_sd);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += g(rng);
    sources.emplace_back(k + 1, Task::regression, 1, std::move(x), std::move(y));
  }

  std::vector<int> latent;
  Rng trng(derive_seed(spec.seed, 1000));
  Dataset target = mixture_rows(0, spec.m0, w, lambda.values(), sd, noise_sd, trng, &latent);
  std::optional<Dataset> test;
  if (spec.test_size > 0) {
    Rng srng(derive_seed(spec.seed, 1001));
    test = mixture_rows(0, spec.test_size, w, lambda.values(), sd, noise_sd, srng, nullptr);
  }
  return ToyRegressionData{DomainCollection(std::move(target), std::move(sources)), std::move(test), std::move(w),
                           lambda, spec.sigma_sq, std::move(latent)};
}

double Example1Data::target_risk(const Hypothesis& h) const {
  return mixture_risk(h, {w[0], w[1]}, Vector::Constant(2, 0.5), 1.0, sigma_sq);
}

Example1Data gen_example1(Eigen::Index n, std::uint64_t seed) {
  if (n < 100 || n % 2 != 0) throw ConfigError("example1 needs an even n >= 100 rows per domain");
  constexpr double a = 0.5, b = 0.5, sigma = 0.1;
  const Vector w1 = (Vector(2) << a, b).finished(), w2 = (Vector(2) << a, -b).finished();
  const Vector wbar = (w1 + w2) / 2.0;
  const Vector axis = (Vector(2) << 1.0, 0.0).finished();

  LossSpec loss;
  loss.kind = LossKind::squared;
  loss.norm_ball_B = 2.0;
  loss.bound_M = 100.0;
  DiscBudget budget;
  budget.restarts = 8;
  budget.iters = 300;
  const std::uint64_t disc_seed = derive_seed(seed, 77);

  // All four samples share one design whose rows come in mirror pairs (x, Rx) with R
  // flipping the second coordinate. Labels are paired so that R maps D̂_1 onto D̂_2
  // and D̂_0 onto itself, which makes disc(D̂_1, D̂_0) = disc(D̂_2, D̂_0) exactly.
  const Eigen::Index half = n / 2;
  Rng xrng(derive_seed(seed, 5));
  RowMatrix x(n, 2);
  x.topRows(half) = gaussian_rows(half, 2, 1.0, xrng);
  x.bottomRows(half) = x.topRows(half);
  x.bottomRows(half).col(1) *= -1.0;
  Rng nrng(derive_seed(seed, 1));
  const Vector eta = gaussian(static_cast<int>(half), sigma, nrng), eta2 = gaussian(static_cast<int>(half), sigma, nrng);
  Vector y1(n), y2(n);
  y1 << x.topRows(half) * w1 + eta, x.bottomRows(half) * w1 + eta2;
  y2 << x.topRows(half) * w2 + eta2, x.bottomRows(half) * w2 + eta;
  Dataset d1(1, Task::regression, 1, x, std::move(y1)), d2(2, Task::regression, 1, x, std::move(y2));
  Rng trng(derive_seed(seed, 0));
  std::bernoulli_distribution coin(0.5);
  const Vector zeta = gaussian(static_cast<int>(half), sigma, trng);
  Vector y0(n);
  for (Eigen::Index i = 0; i < half; ++i) {
    const bool second = coin(trng);
    y0(i) = x.row(i).dot(second ? w2 : w1) + zeta(i);
    y0(i + half) = x.row(i + half).dot(second ? w1 : w2) + zeta(i);
  }
  Dataset d0(0, Task::regression, 1, x, std::move(y0));
  Rng srng(derive_seed(seed, 4));
  Dataset test = mixture_rows(0, std::max<Eigen::Index>(n, 10000), {w1, w2}, Vector::Constant(2, 0.5), 1.0, sigma,
                              srng, nullptr);

  // Source 3 keeps its noise draws fixed while the offset moves, so the measured
  // discrepancy is a deterministic function of the offset.
  Rng rng3(derive_seed(seed, 3));
  const Vector noise3 = gaussian(static_cast<int>(n), sigma, rng3);
  auto source3 = [&](double offset) { return Dataset(3, Task::regression, 1, x, x * (wbar + offset * axis) + noise3); };
  auto disc_to_target = [&](const Dataset& src) {
    return disc_estimate(src, d0, loss, DiscMethod::ascent, budget, disc_seed).value;
  };

  const double disc1 = disc_to_target(d1), disc2 = disc_to_target(d2);
  const double goal = (disc1 + disc2) / 2.0;
  double lo = 0.0, hi = 4.0 * b, offset = hi, disc3 = disc_to_target(source3(hi));
  int iters = 0;
  if (disc3 < goal) {
    throw NumericalError("example1 calibration: disc at the largest offset " + io::format_double(disc3) +
                         " is below the target " + io::format_double(goal));
  }
  while (std::abs(disc3 - goal) > 0.01 * goal && iters < 60) {
    offset = (lo + hi) / 2.0;
    disc3 = disc_to_target(source3(offset));
    (disc3 < goal ? lo : hi) = offset;
    ++iters;
  }
  const Vector discs = (Vector(3) << disc1, disc2, disc3).finished();
  if (discs.maxCoeff() > 1.05 * discs.minCoeff()) {
    throw NumericalError("example1 calibration failed after " + std::to_string(iters) + " steps: discs " +
                         io::format_double(disc1) + ", " + io::format_double(disc2) + ", " + io::format_double(disc3));
  }

  const EmpiricalMixture mix{{&d1, 0.5}, {&d2, 0.5}};
  const EmpiricalMixture tgt{{&d0, 1.0}};
  const double mixture_disc = disc_estimate(tgt, mix, loss, DiscMethod::ascent, budget, disc_seed).value;

  std::vector<Dataset> sources{std::move(d1), std::move(d2), source3(offset)};
  return Example1Data{DomainCollection(std::move(d0), std::move(sources)),
                      std::move(test),
                      {w1, w2, wbar + offset * axis},
                      loss,
                      sigma * sigma,
                      discs,
                      mixture_disc,
                      offset,
                      iters};
}

}  // namespace msa
