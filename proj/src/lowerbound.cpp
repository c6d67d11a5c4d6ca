#include "msa/lowerbound.hpp"

#include "msa/error.hpp"
#include "msa/io.hpp"
#include "msa/kernels.hpp"

#include <cmath>
#include <random>

namespace msa {

namespace {

bool pattern_bit(const std::vector<bool>& pattern, int x) { return pattern[static_cast<std::size_t>((x - 1) / 2)]; }

std::vector<int> bayes_for_pattern(int symbols, const std::vector<bool>& pattern) {
  std::vector<int> h(static_cast<std::size_t>(symbols));
  for (int x = 1; x <= symbols; ++x) h[static_cast<std::size_t>(x - 1)] = pattern_bit(pattern, x) ? 1 : 0;
  return h;
}

}  // namespace

std::vector<int> LowerBoundInstance::bayes_predictor() const {
  std::vector<int> h(static_cast<std::size_t>(num_symbols()));
  for (int x = 1; x <= num_symbols(); ++x)
    h[static_cast<std::size_t>(x - 1)] = lambda_true(2 * x - 1) > lambda_true(2 * x - 2) ? 1 : 0;
  return h;
}

double LowerBoundInstance::loss(const std::vector<int>& h) const {
  if (static_cast<int>(h.size()) != num_symbols())
    throw DimensionError("lower-bound predictor", num_symbols(), static_cast<long>(h.size()));
  const double mass = 2.0 / p;
  double total = 0.0;
  for (int x = 0; x < num_symbols(); ++x) {
    const double q = p_one(x);
    total += mass * (h[static_cast<std::size_t>(x)] == 1 ? 1.0 - q : q);
  }
  return total;
}

double LowerBoundInstance::excess(const std::vector<int>& h) const {
  if (static_cast<int>(h.size()) != num_symbols())
    throw DimensionError("lower-bound predictor", num_symbols(), static_cast<long>(h.size()));
  // Each wrong symbol costs its mass times |P(1|x) − P(0|x)|; summed directly so
  // the Bayes predictor gets exactly zero.
  const double mass = 2.0 / p;
  double total = 0.0;
  const auto star = bayes_predictor();
  for (int x = 0; x < num_symbols(); ++x) {
    if (h[static_cast<std::size_t>(x)] != star[static_cast<std::size_t>(x)])
      total += mass * std::abs(2.0 * p_one(x) - 1.0);
  }
  return total;
}

LowerBoundInstance build_instance(int p, int m0, const std::vector<bool>& sign_pattern,
                                  std::optional<double> epsilon) {
  if (p < 4 || p % 4 != 0) throw ConfigError("lower-bound p must be a positive multiple of 4, got " + std::to_string(p));
  if (m0 < 1) throw ConfigError("lower-bound m0 must be >= 1");
  if (static_cast<int>(sign_pattern.size()) != p / 4)
    throw DimensionError("sign pattern", p / 4, static_cast<long>(sign_pattern.size()));
  const double eps = epsilon.value_or(std::sqrt(static_cast<double>(p) / m0) / 100.0);
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("lower-bound epsilon must lie in [0, 1]");

  LowerBoundInstance inst;
  inst.p = p;
  inst.m0 = m0;
  inst.epsilon = eps;
  inst.sign_pattern = sign_pattern;
  inst.lambda_true.resize(p);
  inst.p_one.resize(p / 2);
  const double hi = (1.0 + eps) / p, lo = (1.0 - eps) / p;
  for (int x = 1; x <= p / 2; ++x) {
    const bool up = pattern_bit(sign_pattern, x);
    inst.lambda_true(2 * x - 1) = up ? hi : lo;  // λ_{2x}
    inst.lambda_true(2 * x - 2) = up ? lo : hi;  // λ_{2x−1}
    inst.p_one(x - 1) = (up ? 1.0 + eps : 1.0 - eps) / 2.0;
  }
  return inst;
}

TargetSample sample_target(const LowerBoundInstance& inst, int n, Rng& rng) {
  std::uniform_int_distribution<int> pick(1, inst.num_symbols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TargetSample s;
  s.x.reserve(static_cast<std::size_t>(n));
  s.y.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int x = pick(rng);
    s.x.push_back(x);
    s.y.push_back(u(rng) < inst.p_one(x - 1) ? 1 : 0);
  }
  return s;
}

std::string to_string(LowerBoundAlgorithm algorithm) {
  return algorithm == LowerBoundAlgorithm::plug_in_majority ? "plug-in" : "lmsa";
}

LowerBoundAlgorithm parse_lower_bound_algorithm(const std::string& text) {
  if (text == "plug-in" || text == "plug_in" || text == "majority") return LowerBoundAlgorithm::plug_in_majority;
  if (text == "lmsa" || text == "lmsa_select") return LowerBoundAlgorithm::lmsa_select;
  throw ConfigError("unknown lower-bound algorithm '" + text + "'");
}

std::vector<int> plug_in_majority(const LowerBoundInstance& inst, const TargetSample& sample) {
  std::vector<int> balance(static_cast<std::size_t>(inst.num_symbols()), 0);
  for (std::size_t i = 0; i < sample.x.size(); ++i)
    balance[static_cast<std::size_t>(sample.x[i] - 1)] += sample.y[i] == 1 ? 1 : -1;
  std::vector<int> h(balance.size());
  for (std::size_t x = 0; x < h.size(); ++x) h[x] = balance[x] > 0 ? 1 : 0;
  return h;
}

std::vector<int> lmsa_select_adapter(const LowerBoundInstance& inst, const TargetSample& sample) {
  const int bits = inst.p / 4;
  if (bits > 20) throw TractabilityError("lmsa adapter enumerates 2^(p/4) patterns; p/4 = " + std::to_string(bits));
  std::vector<int> ones(static_cast<std::size_t>(inst.num_symbols()), 0), zeros(ones.size(), 0);
  for (std::size_t i = 0; i < sample.x.size(); ++i)
    ++(sample.y[i] == 1 ? ones : zeros)[static_cast<std::size_t>(sample.x[i] - 1)];

  std::vector<bool> pattern(static_cast<std::size_t>(bits));
  std::vector<int> best;
  long best_errors = -1;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
    for (int j = 0; j < bits; ++j) pattern[static_cast<std::size_t>(j)] = (code >> j) & 1U;
    const auto h = bayes_for_pattern(inst.num_symbols(), pattern);
    long errors = 0;
    for (std::size_t x = 0; x < h.size(); ++x) errors += h[x] == 1 ? zeros[x] : ones[x];
    if (best_errors < 0 || errors < best_errors) {
      best_errors = errors;
      best = h;
    }
  }
  return best;
}

std::vector<PenaltyRow> simulate_penalty(const std::vector<int>& p_list, const std::vector<int>& m0_list,
                                         const PenaltyOptions& options) {
  if (options.trials < 1) throw ConfigError("trials must be >= 1");
  std::vector<PenaltyRow> rows;
  std::uint64_t cell = 0;
  for (int p : p_list) {
    for (int m0 : m0_list) {
      build_instance(p, m0, std::vector<bool>(static_cast<std::size_t>(p / 4)), options.epsilon);
      std::vector<double> excess(static_cast<std::size_t>(options.trials));
      const std::uint64_t cell_seed = derive_seed(options.seed, cell++);
      kernels::parallel_for(options.trials, [&](std::ptrdiff_t t) {
        Rng rng(derive_seed(cell_seed, static_cast<std::uint64_t>(t)));
        std::vector<bool> pattern(static_cast<std::size_t>(p / 4));
        std::bernoulli_distribution coin(0.5);
        for (std::size_t j = 0; j < pattern.size(); ++j) pattern[j] = coin(rng);
        const auto inst = build_instance(p, m0, pattern, options.epsilon);
        const auto sample = sample_target(inst, m0, rng);
        const auto h = options.algorithm == LowerBoundAlgorithm::plug_in_majority ? plug_in_majority(inst, sample)
                                                                                   : lmsa_select_adapter(inst, sample);
        excess[static_cast<std::size_t>(t)] = inst.excess(h);
      });
      double mean = 0.0;
      for (double e : excess) mean += e;
      mean /= options.trials;
      double var = 0.0;
      for (double e : excess) var += (e - mean) * (e - mean);
      const double se = options.trials > 1 ? std::sqrt(var / (options.trials - 1) / options.trials) : 0.0;
      const double eps = options.epsilon.value_or(std::sqrt(static_cast<double>(p) / m0) / 100.0);
      rows.push_back({p, m0, eps, mean, se});
    }
  }
  return rows;
}

void write_penalty_csv(const std::filesystem::path& path, const std::vector<PenaltyRow>& rows) {
  io::CsvWriter csv(path);
  csv.row({"p", "m0", "epsilon", "mean_excess", "stderr"});
  for (const auto& r : rows)
    csv.row({std::to_string(r.p), std::to_string(r.m0), io::format_double(r.epsilon), io::format_double(r.mean_excess),
             io::format_double(r.stderr_excess)});
}

}  // namespace msa
