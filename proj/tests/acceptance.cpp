// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "msa/baselines.hpp"
#include "msa/discrepancy.hpp"
#include "msa/erm.hpp"
#include "msa/io.hpp"
#include "msa/lmsa.hpp"
#include "msa/lowerbound.hpp"
#include "msa/simplex.hpp"
#include "msa/synth.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace msa {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

LossSpec ridge_loss() {
  LossSpec loss;
  loss.bound_M = 1e6;
  loss.strong_convexity_mu = loss.regularization;
  return loss;
}

// ---------------------------------------------------------------------------

void table1(Outcome& out) {
  const std::vector<Eigen::Index> m0s{50, 100, 200, 300, 400};
  const int seeds = 10;
  LossSpec loss;
  loss.strong_convexity_mu = loss.regularization;
  const auto t0 = Clock::now();
  std::map<Eigen::Index, std::array<double, 3>> mean;
  for (auto m0 : m0s) {
    std::array<double, 3> acc{0, 0, 0};
    for (int seed = 0; seed < seeds; ++seed) {
      ToyRegressionSpec spec;
      spec.m0 = m0;
      spec.seed = static_cast<std::uint64_t>(seed);
      spec.test_size = 0;
      const auto data = gen_toy_regression(spec);
      MinmaxConfig mc;
      mc.seed = static_cast<std::uint64_t>(seed);
      acc[0] += data.target_risk(train_on_dataset(data.coll.target(), loss, TrainConfig{})) / seeds;
      acc[1] += data.target_risk(lmsa_minmax(data.coll, loss, TrainConfig{}, mc).model) / seeds;
      acc[2] += data.target_risk(train_on_mixture(data.coll, data.lambda_star, loss, TrainConfig{})) / seeds;
    }
    mean[m0] = acc;
    out.detail << "m0=" << m0 << " target/minmax/oracle x1000 = " << 1000 * acc[0] << "/" << 1000 * acc[1] << "/"
               << 1000 * acc[2] << "; ";
  }
  out.check(mean[50][0] >= 1.5 * mean[50][1], "(a) target-only >= 1.5x min-max at m0=50");
  for (auto m0 : m0s)
    if (m0 >= 100) out.check(mean[m0][1] <= 1.25 * mean[m0][2], "(b) min-max within 25% of oracle at m0=" + std::to_string(m0));
  out.check(mean[400][0] > mean[400][1], "(c) target-only worse than min-max at m0=400");
  const double secs = seconds_since(t0);
  out.check(secs < 600, "runtime under 10 min");
  out.detail << "runtime " << secs << "s";
}

DomainCollection two_source_instance(std::uint64_t seed) {
  Rng rng(seed);
  const Vector w1 = testing::gaussian_vector(5, rng), w2 = testing::gaussian_vector(5, rng);
  std::vector<Dataset> src{testing::linear_dataset(1, 2000, w1, 0.0, 0.5, rng),
                           testing::linear_dataset(2, 2000, w2, 0.0, 0.5, rng)};
  const Vector wt = 0.3 * w1 + 0.7 * w2 + 0.3 * testing::gaussian_vector(5, rng);
  return DomainCollection(testing::linear_dataset(0, 500, wt, 0.0, 0.5, rng), std::move(src));
}

void minmax_equivalence(Outcome& out) {
  const LossSpec loss = ridge_loss();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto coll = two_source_instance(100 + seed);
    const auto t0 = Clock::now();
    const auto mm = lmsa_minmax(coll, loss, TrainConfig{}, MinmaxConfig{});
    const double secs = seconds_since(t0);
    const auto sel = lmsa_select(coll, make_cover(2, 0.01), loss, TrainConfig{});
    const double mm_loss = empirical_loss(mm.model, coll.target(), loss);
    const double rel = std::abs(mm_loss - sel.report.selected_loss) / sel.report.selected_loss;
    worst = std::max(worst, rel);
    out.check(rel <= 0.01, "relative gap <= 1% (seed " + std::to_string(seed) + ")");
    out.check(secs < 60.0, "min-max runtime < 1 min");
    out.detail << "seed " << seed << ": minmax " << mm_loss << " vs cover " << sel.report.selected_loss << " ("
               << secs << "s); ";
  }
  out.detail << "worst relative gap " << worst;
}

void lower_bound(Outcome& out) {
  PenaltyOptions opt;
  opt.trials = 500;
  const auto ratio_rows = simulate_penalty({4, 16}, {100}, opt);
  const double ratio = ratio_rows[1].mean_excess / ratio_rows[0].mean_excess;
  out.check(ratio >= 1.5 && ratio <= 2.5, "p=16 / p=4 excess ratio in [1.5, 2.5]");
  out.detail << "ratio " << ratio << "; ";
  const auto grid = simulate_penalty({4, 8, 16}, {50, 100, 200, 400}, opt);
  for (const auto& r : grid) out.check(r.mean_excess > 0.0, "excess > 0 at p=" + std::to_string(r.p) + " m0=" + std::to_string(r.m0));
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const int p = 4 * (1 + t % 8);
    std::vector<bool> pattern(static_cast<std::size_t>(p / 4));
    for (auto&& b : pattern) b = (rng() & 1U) != 0;
    const auto inst = build_instance(p, 100, pattern);
    if (inst.excess(inst.bayes_predictor()) != 0.0) {
      out.check(false, "Bayes excess exactly 0");
      break;
    }
  }
  out.detail << grid.size() << " grid points positive";
}

void example1(Outcome& out) {
  const MixtureWeight target_lambda((Vector(3) << 0.5, 0.5, 0.0).finished());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ex = gen_example1(4000, seed);
    const auto sel = lmsa_select(ex.coll, make_cover(3, default_cover_epsilon(3)), ex.loss, TrainConfig{});
    BaselineHyper hyper;
    hyper.seed = seed;
    const auto pw = run_baseline(BaselineKind::pairwise_disc, ex.coll, ex.loss, TrainConfig{}, hyper);
    const double d_sel = sel.report.chosen_lambda.l1_distance(target_lambda);
    const double d_pw = pw.lambda->l1_distance(MixtureWeight::uniform(3));
    const double test_sel = empirical_loss(sel.model, ex.test, ex.loss);
    const double test_pw = empirical_loss(pw.model, ex.test, ex.loss);
    const std::string s = " (seed " + std::to_string(seed) + ")";
    out.check(d_sel <= 0.2, "lmsa lambda within l1 0.2 of (0.5,0.5,0)" + s);
    out.check(d_pw <= 0.1, "pairwise lambda within l1 0.1 of uniform" + s);
    out.check(test_sel <= test_pw, "lmsa test loss <= pairwise" + s);
    out.detail << "seed " << seed << ": |lmsa-l*|=" << d_sel << " |pw-u|=" << d_pw << " test " << test_sel << " vs "
               << test_pw << "; ";
  }
}

// Floor-rounded grid neighbour first, full scan as fallback.
bool covered(const SimplexCover& cover, const std::map<std::vector<long>, std::size_t>& index,
             const MixtureWeight& lambda) {
  const int p = lambda.p();
  const double step = cover.epsilon / p;
  std::vector<long> k;
  for (int j = 0; j + 1 < p; ++j) k.push_back(static_cast<long>(std::floor(lambda[j] / step)));
  const auto it = index.find(k);
  if (it != index.end() && cover.points[it->second].l1_distance(lambda) <= cover.epsilon) return true;
  for (const auto& pt : cover.points)
    if (pt.l1_distance(lambda) <= cover.epsilon + 1e-12) return true;
  return false;
}

void invariants(Outcome& out) {
  Rng rng(2024);
  // Skewness.
  {
    const auto t0 = Clock::now();
    bool ok = true;
    for (int t = 0; t < 10000; ++t) {
      const int p = 2 + t % 5;
      const auto mhat = MixtureWeight::random(p, rng);
      const auto lam = MixtureWeight::random(p, rng);
      const double s = skewness(lam, mhat);
      ok = ok && s >= 1.0 - 1e-12 && std::abs(skewness(mhat, mhat) - 1.0) <= 1e-12;
      if (lam.l1_distance(mhat) > 1e-6) ok = ok && s > 1.0;
    }
    out.check(ok && seconds_since(t0) < 60, "skewness >= 1 with equality at m_hat");
  }
  // Cover property.
  {
    const auto t0 = Clock::now();
    for (auto [p, eps] : std::vector<std::pair<int, double>>{{2, 0.05}, {3, 0.1}, {4, 0.25}, {5, 0.5}}) {
      const auto cover = make_cover(p, eps);
      std::map<std::vector<long>, std::size_t> index;
      for (std::size_t i = 0; i < cover.size(); ++i) {
        std::vector<long> k;
        for (int j = 0; j + 1 < p; ++j) k.push_back(std::lround(cover.points[i][j] / (eps / p)));
        index.emplace(k, i);
      }
      bool ok = true;
      for (int t = 0; t < 10000 && ok; ++t) ok = covered(cover, index, MixtureWeight::random(p, rng));
      out.check(ok, "cover l1 property p=" + std::to_string(p));
    }
    out.check(seconds_since(t0) < 60, "cover suite under 1 min");
  }
  // mix_weights mass and linearity of the mixed empirical loss.
  {
    const auto coll = testing::random_regression_collection(3, 2, {30, 50, 70}, 20, rng, 0.5);
    bool mass = true, linear = true;
    for (int t = 0; t < 1000; ++t) {
      const auto lam = MixtureWeight::random(3, rng);
      const Vector w = mix_weights(lam, coll);
      mass = mass && std::abs(w.sum() - 1.0) <= 1e-12;
      const Hypothesis h(Task::regression, testing::gaussian_vector(2, rng).transpose(), testing::gaussian_vector(1, rng),
                         true);
      std::vector<const Dataset*> parts{&coll.source(0), &coll.source(1), &coll.source(2)};
      const Dataset pooled = Dataset::concatenate(parts, 9);
      const double lhs = empirical_loss(h, pooled, LossSpec{}, w);
      double rhs = 0.0;
      for (int k = 0; k < 3; ++k) rhs += lam[k] * empirical_loss(h, coll.source(k), LossSpec{});
      linear = linear && std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs));
    }
    out.check(mass, "mix_weights mass = 1");
    out.check(linear, "mixed loss linear in lambda within 1e-12");
  }
  // Boost trace.
  {
    const auto coll = testing::random_regression_collection(3, 3, {40, 50, 60}, 30, rng, 0.5);
    const auto cover = make_cover(3, 0.25);
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      BoostConfig cfg;
      cfg.rounds = 30;
      cfg.candidates = 4;
      cfg.seed = seed;
      cfg.hierarchical = seed % 2 == 1;
      const auto b = lmsa_boost(coll, cover, LossSpec{}, TrainConfig{}, cfg);
      for (std::size_t t = 1; t < b.trace.size(); ++t) ok = ok && b.trace[t] <= b.trace[t - 1];
    }
    out.check(ok, "boost objective monotone");
  }
  // Min-max feasibility.
  {
    const auto coll = testing::random_regression_collection(3, 3, {100, 200, 300}, 40, rng, 0.5);
    MinmaxConfig cfg;
    cfg.steps = 500;
    cfg.eta_gamma = 1e4;
    cfg.gamma_max = 50.0;
    const auto r = lmsa_minmax(coll, ridge_loss(), TrainConfig{}, cfg);
    bool ok = true;
    for (std::size_t t = 0; t < r.state.lambda_trace.size(); ++t) {
      const auto& l = r.state.lambda_trace[t].values();
      ok = ok && l.minCoeff() >= 0.0 && std::abs(l.sum() - 1.0) <= 1e-9 && r.state.gamma_trace[t] >= 0.0 &&
           r.state.gamma_trace[t] <= cfg.gamma_max;
    }
    out.check(ok, "min-max iterates on simplex and in gamma box");
  }
  // Pseudo-metric axioms under the grid oracle.
  {
    LossSpec loss;
    loss.norm_ball_B = 1.5;
    loss.bound_M = 4.0;
    DiscBudget budget;
    budget.resolution = 0.05;
    bool ok = true;
    for (int t = 0; t < 10; ++t) {
      auto make = [&](int id, int n) {
        return testing::linear_dataset(id, n, testing::gaussian_vector(1, rng), 0.0, 0.5, rng);
      };
      const Dataset a = make(0, 8), b = make(1, 9), c = make(2, 7);
      auto disc = [&](const Dataset& x, const Dataset& y) {
        return disc_estimate(x, y, loss, DiscMethod::grid_oracle, budget, 0).value;
      };
      ok = ok && std::abs(disc(a, a)) <= 1e-6 && std::abs(disc(a, b) - disc(b, a)) <= 1e-6 &&
           disc(a, c) <= disc(a, b) + disc(b, c) + 1e-6;
    }
    out.check(ok, "disc pseudo-metric axioms");
  }
}

void oracle_equivalences(Outcome& out) {
  Rng rng(77);
  // Ascent never beats the lattice oracle.
  {
    DiscBudget budget;
    budget.resolution = 1e-4;
    bool ok = true;
    for (int t = 0; t < 20; ++t) {
      LossSpec loss;
      loss.fit_intercept = false;
      loss.bound_M = 1e9;
      loss.norm_ball_B = 1.0 + t % 3;
      const Dataset a = testing::linear_dataset(0, 5 + t % 4, testing::gaussian_vector(1, rng), 0.0, 0.5, rng);
      const Dataset b = testing::linear_dataset(1, 6 + t % 3, testing::gaussian_vector(1, rng), 0.0, 0.5, rng);
      const double grid = disc_estimate(a, b, loss, DiscMethod::grid_oracle, budget, static_cast<std::uint64_t>(t)).value;
      const double ascent = disc_estimate(a, b, loss, DiscMethod::ascent, budget, static_cast<std::uint64_t>(t)).value;
      ok = ok && ascent <= grid + 1e-6;
    }
    out.check(ok, "ascent <= grid oracle + 1e-6 on 20 instances");
  }
  // One-dimensional closed form.
  {
    const Dataset a(0, Task::regression, 1, RowMatrix::Ones(1, 1), Vector::Constant(1, 1.0));
    const Dataset b(1, Task::regression, 1, RowMatrix::Ones(1, 1), Vector::Constant(1, -1.0));
    LossSpec loss;
    loss.fit_intercept = false;
    loss.bound_M = 1e9;
    loss.norm_ball_B = 1.0;
    DiscBudget budget;
    budget.resolution = 1e-3;
    for (auto method : {DiscMethod::grid_oracle, DiscMethod::ascent}) {
      const double v = disc_estimate(a, b, loss, method, budget, 0).value;
      out.check(std::abs(v - 4.0) <= 4e-3, "closed-form disc 4.0 via " + to_string(method));
      out.detail << to_string(method) << " " << v << "; ";
    }
  }
  // Boost with every cover point as a candidate.
  {
    const auto coll = testing::random_regression_collection(3, 3, {60, 60, 60}, 40, rng, 0.3);
    const auto cover = make_cover(3, 0.5);
    BoostConfig cfg;
    cfg.candidates = static_cast<int>(cover.size());
    cfg.rounds = 200;
    const auto b = lmsa_boost(coll, cover, LossSpec{}, TrainConfig{}, cfg);
    const auto sel = lmsa_select(coll, cover, LossSpec{}, TrainConfig{});
    out.check(b.trace.back() <= sel.report.selected_loss + 1e-6, "boost <= best single + 1e-6");
  }
  // Vertex mixture equals single-domain training bit for bit.
  {
    const auto coll = testing::random_regression_collection(3, 4, {80, 120, 160}, 30, rng, 0.5);
    bool ok = true;
    for (int k = 0; k < 3; ++k)
      ok = ok && train_on_mixture(coll, MixtureWeight::vertex(3, k), LossSpec{}, TrainConfig{}) ==
                     train_on_dataset(coll.source(k), LossSpec{}, TrainConfig{});
    out.check(ok, "ERM at lambda = e_k bit-identical to single-domain training");
  }
}

void excess_decomposition(Outcome& out) {
  Rng rng(72);
  LossSpec loss;
  loss.norm_ball_B = 2.0;
  loss.bound_M = 4.0;
  auto population = [&](Eigen::Index n, double shift) {
    std::vector<Dataset> src;
    for (int k = 0; k < 2; ++k)
      src.push_back(testing::linear_dataset(k + 1, n, Vector::Constant(1, 0.5 * k - 0.5), 0.0, 0.3, rng));
    return DomainCollection(testing::linear_dataset(0, n, Vector::Constant(1, shift), 0.0, 0.3, rng), std::move(src));
  };
  double worst_slack = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 20; ++t) {
    const double shift = -1.0 + 0.1 * t;
    const auto pop = population(1000, shift);
    const auto sample = population(30, shift);
    const auto lambda = MixtureWeight::random(2, rng);
    const auto diag = excess_bound_diag(sample, pop, lambda, loss, 0.05);
    out.check(diag.measured_excess <= diag.bound + 1e-6, "excess <= E(lambda) + 1e-6 (instance " + std::to_string(t) + ")");
    worst_slack = std::min(worst_slack, diag.bound - diag.measured_excess);
  }
  out.detail << "smallest slack E(lambda) - excess = " << worst_slack;
}

void stability(Outcome& out) {
  Rng rng(41);
  const auto coll = testing::random_regression_collection(3, 3, {50, 70, 90}, 10, rng, 0.5);
  LossSpec loss;
  loss.regularization = 0.05;
  loss.fit_intercept = false;
  const MixtureTrainer trainer(coll, loss, TrainConfig{});
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto l1 = MixtureWeight::random(3, rng), l2 = MixtureWeight::random(3, rng);
    const auto h1 = trainer.train(l1), h2 = trainer.train(l2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(2.0 * trainer.system_matrix(l1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e2(2.0 * trainer.system_matrix(l2));
    const double mu = std::min(e1.eigenvalues().minCoeff(), e2.eigenvalues().minCoeff());
    const double m_bound = std::max(trainer.source_losses(h1).maxCoeff(), trainer.source_losses(h2).maxCoeff());
    const double lhs = (h1.flatten() - h2.flatten()).norm();
    const double rhs = std::sqrt(m_bound * l1.l1_distance(l2) / mu);
    worst = std::max(worst, lhs / rhs);
    out.check(lhs <= 1.1 * rhs, "stability pair " + std::to_string(t));
  }
  out.detail << "largest ratio ||h - h'|| / bound = " << worst;
}

}  // namespace
}  // namespace msa

int main() {
  const std::vector<std::pair<std::string, std::function<void(msa::Outcome&)>>> criteria{
      {"1 table1-reproduction", msa::table1},
      {"2 minmax-cover-equivalence", msa::minmax_equivalence},
      {"3 lower-bound-scaling", msa::lower_bound},
      {"4 example1-reproduction", msa::example1},
      {"5 invariant-suites", msa::invariants},
      {"6 oracle-equivalences", msa::oracle_equivalences},
      {"7 excess-risk-decomposition", msa::excess_decomposition},
      {"8 mixture-stability", msa::stability},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    msa::Outcome out;
    const auto t0 = msa::Clock::now();
    try {
      run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "exception: " << e.what();
    }
    std::cout << (out.pass ? "PASS " : "FAIL ") << name << " (" << msa::seconds_since(t0) << "s): " << out.detail.str()
              << std::endl;
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
