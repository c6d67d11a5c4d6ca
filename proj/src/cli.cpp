#include "msa/cli.hpp"

#include "msa/baselines.hpp"
#include "msa/discrepancy.hpp"
#include "msa/error.hpp"
#include "msa/io.hpp"
#include "msa/kernels.hpp"
#include "msa/lmsa.hpp"
#include "msa/lowerbound.hpp"
#include "msa/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace msa::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

fs::path output_dir(const ExperimentConfig& cfg) {
  const fs::path out = cfg.get_string("out", ".");
  if (!fs::is_directory(out)) throw IoError("output directory does not exist: " + out.string());
  return out;
}

std::string join_lambda(const MixtureWeight& lambda) {
  std::string out;
  for (int k = 0; k < lambda.p(); ++k) {
    if (k > 0) out += ';';
    out += io::format_double(lambda[k]);
  }
  return out;
}

LossSpec loss_from(const ExperimentConfig& cfg, Task task) {
  LossSpec loss;
  loss.kind = cfg.has("loss") ? parse_loss_kind(cfg.get_string("loss", ""))
                              : (task == Task::regression ? LossKind::squared : LossKind::multinomial_log);
  loss.bound_M = cfg.get_double("loss.M", loss.bound_M);
  loss.norm_ball_B = cfg.get_double("loss.B", loss.norm_ball_B);
  loss.regularization = cfg.get_double("erm.reg", loss.regularization);
  // The ridge objective is strongly convex with modulus at least the ridge coefficient.
  loss.strong_convexity_mu = cfg.get_double("loss.mu", loss.regularization);
  loss.fit_intercept = cfg.get_bool("loss.intercept", true);
  loss.validate();
  if (loss.task() != task) throw ConfigError("loss '" + to_string(loss.kind) + "' does not match the data task");
  return loss;
}

TrainConfig train_from(const ExperimentConfig& cfg) {
  TrainConfig t;
  t.max_iters = static_cast<int>(cfg.get_int("erm.max_iters", t.max_iters));
  t.tol = cfg.get_double("erm.tol", t.tol);
  t.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  t.validate();
  return t;
}

DiscBudget budget_from(const ExperimentConfig& cfg) {
  DiscBudget b;
  b.restarts = static_cast<int>(cfg.get_int("disc.restarts", b.restarts));
  b.iters = static_cast<int>(cfg.get_int("disc.iters", b.iters));
  b.resolution = cfg.get_double("disc.resolution", b.resolution);
  if (b.restarts < 1 || b.iters < 1 || !(b.resolution > 0.0))
    throw ConfigError("disc.restarts, disc.iters and disc.resolution must be positive");
  return b;
}

MinmaxConfig minmax_from(const ExperimentConfig& cfg) {
  MinmaxConfig m;
  m.steps = static_cast<int>(cfg.get_int("minmax.steps", m.steps));
  m.eta_lambda = cfg.get_double("minmax.eta_lambda", m.eta_lambda);
  m.eta_gamma = cfg.get_double("minmax.eta_gamma", m.eta_gamma);
  m.gamma_max = cfg.get_double("minmax.gamma_max", m.gamma_max);
  m.feas_tol = cfg.get_double("minmax.feas_tol", m.feas_tol);
  m.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  m.validate();
  return m;
}

ToyRegressionSpec toy_from(const ExperimentConfig& cfg) {
  ToyRegressionSpec spec;
  spec.p = static_cast<int>(cfg.get_int("toy.p", spec.p));
  spec.d = static_cast<int>(cfg.get_int("toy.d", spec.d));
  if (cfg.has("toy.mk")) {
    const auto sizes = cfg.get_int_list("toy.mk", {});
    if (sizes.size() == 1) {
      spec.m_k.assign(static_cast<std::size_t>(spec.p), sizes.front());
    } else {
      spec.m_k.assign(sizes.begin(), sizes.end());
    }
  }
  spec.m0 = cfg.get_int("toy.m0", spec.m0);
  spec.sigma_sq = cfg.get_double("toy.sigma_sq", spec.sigma_sq);
  spec.test_size = cfg.get_int("toy.test_size", spec.test_size);
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  spec.validate();
  return spec;
}

void write_collection(const fs::path& out, const DomainCollection& coll, const Dataset* test) {
  for (int k = 0; k < coll.p(); ++k) io::write_dataset(out / ("source_" + std::to_string(k + 1) + ".csv"), coll.source(k));
  io::write_dataset(out / "target.csv", coll.target());
  if (test) io::write_dataset(out / "test.csv", *test);
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  return f;
}

// ---------------------------------------------------------------------------
// run

struct Fitted {
  std::optional<Hypothesis> model;
  std::optional<EnsembleHypothesis> ensemble;
  std::vector<std::size_t> member_indices;
  std::string lambda;
  std::optional<LmsaReport> report;

  double loss_on(const Dataset& data, const LossSpec& loss) const {
    return model ? empirical_loss(*model, data, loss) : empirical_loss(*ensemble, data, loss);
  }
};

SimplexCover cover_from(const ExperimentConfig& cfg, int p) {
  return make_cover(p, cfg.get_double("cover.epsilon", default_cover_epsilon(p)));
}

Fitted fit(const std::string& algorithm, const DomainCollection& coll, const LossSpec& loss, const TrainConfig& tcfg,
           const ExperimentConfig& cfg) {
  Fitted out;
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  if (algorithm == "lmsa") {
    auto r = lmsa_select(coll, cover_from(cfg, coll.p()), loss, tcfg);
    out.model = std::move(r.model);
    out.lambda = join_lambda(r.report.chosen_lambda);
    out.report = std::move(r.report);
  } else if (algorithm == "lmsa_boost") {
    BoostConfig b;
    b.candidates = static_cast<int>(cfg.get_int("boost.s", b.candidates));
    b.rounds = static_cast<int>(cfg.get_int("boost.T", b.rounds));
    b.hierarchical = cfg.get_bool("boost.hierarchical", b.hierarchical);
    b.seed = seed;
    auto r = lmsa_boost(coll, cover_from(cfg, coll.p()), loss, tcfg, b);
    out.ensemble = std::move(r.ensemble);
    out.member_indices = std::move(r.member_indices);
  } else if (algorithm == "lmsa_minmax") {
    auto r = lmsa_minmax(coll, loss, tcfg, minmax_from(cfg));
    out.model = std::move(r.model);
    out.lambda = join_lambda(r.state.lambda_trace.at(r.state.selected_iter));
  } else {
    const BaselineKind kind = parse_baseline_kind(algorithm);
    BaselineHyper hyper;
    hyper.gamma = cfg.get_optional_double("pairwise.gamma");
    hyper.disc_method = parse_disc_method(cfg.get_string("disc.method", "ascent"));
    hyper.disc_budget = budget_from(cfg);
    hyper.outer_iters = static_cast<int>(cfg.get_int("conv.outer_iters", hyper.outer_iters));
    hyper.seed = seed;
    if (kind == BaselineKind::conv_disc) {
      PenaltyConstants c;
      c.c = cfg.get_double("penalty.c", c.c);
      c.d_proxy = cfg.get_optional_double("penalty.d_proxy");
      c.epsilon = cfg.get_double("penalty.epsilon", c.epsilon);
      c.delta = cfg.get_double("penalty.delta", c.delta);
      hyper.penalty = c;
    }
    auto r = run_baseline(kind, coll, loss, tcfg, hyper);
    out.model = std::move(r.model);
    if (r.lambda) out.lambda = join_lambda(*r.lambda);
  }
  return out;
}

void write_fitted(const fs::path& out, const std::string& suffix, const Fitted& f) {
  if (f.model) io::write_model(out / ("model" + suffix + ".txt"), *f.model);
  if (f.ensemble) {
    io::CsvWriter csv(out / ("ensemble" + suffix + ".csv"));
    csv.row({"member", "alpha", "cover_index", "model_file"});
    for (std::size_t j = 0; j < f.ensemble->members().size(); ++j) {
      const std::string file = "model" + suffix + "_member_" + std::to_string(j + 1) + ".txt";
      io::write_model(out / file, f.ensemble->members()[j].h);
      csv.row({std::to_string(j + 1), io::format_double(f.ensemble->members()[j].alpha),
               std::to_string(f.member_indices.at(j)), file});
    }
  }
  if (f.report) f.report->write_csv(out / ("lmsa_report" + suffix + ".csv"));
}

// ---------------------------------------------------------------------------
// lowerbound plot

void write_svg(const fs::path& path, const std::vector<PenaltyRow>& rows) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 20, B = 50;
  double xmax = 0, ymax = 0;
  for (const auto& r : rows) {
    xmax = std::max(xmax, std::sqrt(static_cast<double>(r.p) / r.m0));
    ymax = std::max(ymax, r.mean_excess + r.stderr_excess);
  }
  if (xmax <= 0) xmax = 1;
  if (ymax <= 0) ymax = 1;
  auto sx = [&](double v) { return L + v / xmax * (W - L - R); };
  auto sy = [&](double v) { return H - B - v / ymax * (H - T - B); };
  auto f = [](double v) { return io::format_double(std::round(v * 100) / 100); };
  static const char* colors[] = {"#1b6ca8", "#d1495b", "#3a9d23", "#edae49", "#6c4f9c", "#333333"};

  auto out = open_text(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (W + L) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">sqrt(p/m0) (max "
      << io::format_double(xmax) << ")</text>\n";
  out << "<text x=\"16\" y=\"" << (H - B + T) / 2 << "\" transform=\"rotate(-90 16 " << (H - B + T) / 2
      << ")\" text-anchor=\"middle\" font-size=\"13\">mean excess risk (max " << io::format_double(ymax) << ")</text>\n";
  std::vector<int> ps;
  for (const auto& r : rows)
    if (std::find(ps.begin(), ps.end(), r.p) == ps.end()) ps.push_back(r.p);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const char* color = colors[i % 6];
    std::vector<const PenaltyRow*> series;
    for (const auto& r : rows)
      if (r.p == ps[i]) series.push_back(&r);
    std::sort(series.begin(), series.end(), [](const PenaltyRow* a, const PenaltyRow* b) {
      return static_cast<double>(a->p) / a->m0 < static_cast<double>(b->p) / b->m0;
    });
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto* r : series)
      out << f(sx(std::sqrt(static_cast<double>(r->p) / r->m0))) << ',' << f(sy(r->mean_excess)) << ' ';
    out << "\"/>\n";
    for (const auto* r : series) {
      out << "<circle cx=\"" << f(sx(std::sqrt(static_cast<double>(r->p) / r->m0))) << "\" cy=\""
          << f(sy(r->mean_excess)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 * (i + 1) << "\" fill=\"" << color
        << "\" font-size=\"12\">p = " << ps[i] << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::string& source_name) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos || trim(body.substr(0, eq)).empty())
      throw ConfigError(source_name + ":" + std::to_string(lineno) + ": expected key=value, got '" + body + "'");
    cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  return parse(in, path.string());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

void ExperimentConfig::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty())
    throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ExperimentConfig::merge(const ExperimentConfig& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  return get_optional_double(key).value_or(fallback);
}

std::optional<double> ExperimentConfig::get_optional_double(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  try {
    return io::parse_double(it->second);
  } catch (const Error&) {
    throw ConfigError("config key " + key + " expects a number, got '" + it->second + "'");
  }
}

long ExperimentConfig::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != it->second.size())
    throw ConfigError("config key " + key + " expects an integer, got '" + it->second + "'");
  return v;
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + " expects true or false, got '" + v + "'");
}

std::vector<long> ExperimentConfig::get_int_list(const std::string& key, const std::vector<long>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<long> out;
  ExperimentConfig one;
  for (const auto& cell : io::split(it->second, ',')) {
    one.set(key, trim(cell));
    out.push_back(one.get_int(key, 0));
  }
  if (out.empty()) throw ConfigError("config key " + key + " expects a comma-separated list of integers");
  return out;
}

void ExperimentConfig::require_known(const std::set<std::string>& allowed, const std::string& command) const {
  for (const auto& [k, v] : values_)
    if (allowed.count(k) == 0) throw ConfigError("unknown config key '" + k + "' for command " + command);
}

const std::set<std::string>& known_keys(const std::string& command) {
  static const std::set<std::string> loss_keys{"loss", "loss.M", "loss.B", "loss.mu", "loss.intercept", "erm.reg",
                                               "erm.max_iters", "erm.tol"};
  static const std::set<std::string> disc_keys{"disc.method", "disc.restarts", "disc.iters", "disc.resolution"};
  static const std::set<std::string> minmax_keys{"minmax.steps", "minmax.eta_lambda", "minmax.eta_gamma",
                                                 "minmax.gamma_max", "minmax.feas_tol"};
  static const std::set<std::string> toy_keys{"toy.p", "toy.d", "toy.mk", "toy.m0", "toy.sigma_sq", "toy.test_size"};
  auto join = [](std::initializer_list<const std::set<std::string>*> parts, std::set<std::string> extra) {
    for (const auto* p : parts) extra.insert(p->begin(), p->end());
    return extra;
  };
  static const std::map<std::string, std::set<std::string>> table{
      {"gen", join({&toy_keys}, {"out", "seed", "n"})},
      {"run", join({&loss_keys, &disc_keys, &minmax_keys},
                   {"algorithm", "data", "out", "seed", "target-split", "cover.epsilon", "boost.s", "boost.T",
                    "boost.hierarchical", "pairwise.gamma", "penalty.c", "penalty.d_proxy", "penalty.epsilon",
                    "penalty.delta", "conv.outer_iters"})},
      {"table1", join({&loss_keys, &minmax_keys, &toy_keys}, {"out", "seed", "seeds", "m0"})},
      {"lowerbound", {"out", "seed", "p", "m0", "trials", "algorithm", "plot"}},
      {"disc", join({&loss_keys, &disc_keys}, {"a", "b", "out", "seed"})},
  };
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

DomainCollection read_collection(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("data directory does not exist: " + dir.string());
  Dataset target = io::read_dataset(dir / "target.csv", 0);
  std::vector<Dataset> sources;
  for (int k = 1; fs::exists(dir / ("source_" + std::to_string(k) + ".csv")); ++k)
    sources.push_back(io::read_dataset(dir / ("source_" + std::to_string(k) + ".csv"), k));
  if (sources.empty()) throw IoError("no source_1.csv in " + dir.string());
  return DomainCollection(std::move(target), std::move(sources));
}

// ---------------------------------------------------------------------------
// Commands

void cmd_gen(const std::string& kind, const ExperimentConfig& cfg, std::ostream& log) {
  cfg.require_known(known_keys("gen"), "gen");
  const fs::path out = output_dir(cfg);
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  if (kind == "toy") {
    if (cfg.has("n")) throw ConfigError("n applies to gen example1; use toy.m0 / toy.mk for toy data");
    const auto spec = toy_from(cfg);
    const auto data = gen_toy_regression(spec);
    write_collection(out, data.coll, data.test ? &*data.test : nullptr);
    auto f = open_text(out / "oracle.txt");
    f << "p=" << spec.p << "\nd=" << spec.d << "\nsigma_sq=" << io::format_double(spec.sigma_sq)
      << "\nseed=" << spec.seed << "\nlambda_star=" << join_lambda(data.lambda_star) << '\n';
    for (std::size_t k = 0; k < data.w.size(); ++k) {
      f << "w_" << k + 1 << '=';
      for (Eigen::Index j = 0; j < data.w[k].size(); ++j) f << (j ? "," : "") << io::format_double(data.w[k](j));
      f << '\n';
    }
    log << "wrote toy instance (p=" << spec.p << ", d=" << spec.d << ", m0=" << spec.m0 << ") to " << out.string()
        << '\n';
  } else if (kind == "example1") {
    for (const auto& key : {"toy.p", "toy.d", "toy.mk", "toy.m0", "toy.sigma_sq", "toy.test_size"})
      if (cfg.has(key)) throw ConfigError(std::string(key) + " applies to gen toy only");
    const auto data = gen_example1(cfg.get_int("n", 2000), seed);
    write_collection(out, data.coll, &data.test);
    auto f = open_text(out / "calibration.txt");
    f << "seed=" << seed << "\nn=" << data.coll.target().size() << "\nloss.B=" << io::format_double(data.loss.norm_ball_B)
      << "\nloss.M=" << io::format_double(data.loss.bound_M) << "\nsigma_sq=" << io::format_double(data.sigma_sq)
      << "\noffset=" << io::format_double(data.offset) << "\ncalibration_iters=" << data.calibration_iters << '\n';
    for (int k = 0; k < 3; ++k) f << "disc_" << k + 1 << '=' << io::format_double(data.discs(k)) << '\n';
    f << "mixture_disc=" << io::format_double(data.mixture_disc) << '\n';
    for (std::size_t k = 0; k < data.w.size(); ++k)
      f << "w_" << k + 1 << '=' << io::format_double(data.w[k](0)) << ',' << io::format_double(data.w[k](1)) << '\n';
    log << "wrote example1 instance to " << out.string() << " (discs " << io::format_double(data.discs(0)) << ", "
        << io::format_double(data.discs(1)) << ", " << io::format_double(data.discs(2)) << ")\n";
  } else {
    throw ConfigError("unknown generator '" + kind + "' (expected toy|example1)");
  }
}

std::vector<RunRow> cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.require_known(known_keys("run"), "run");
  if (!cfg.has("algorithm")) throw ConfigError("run needs algorithm=<name>");
  if (!cfg.has("data")) throw ConfigError("run needs data=<directory>");
  const std::string algorithm = cfg.get_string("algorithm", "");
  const fs::path out = output_dir(cfg);
  const fs::path data_dir = cfg.get_string("data", "");
  const DomainCollection coll = read_collection(data_dir);
  std::optional<Dataset> test;
  if (fs::exists(data_dir / "test.csv")) test = io::read_dataset(data_dir / "test.csv", 0);
  const LossSpec loss = loss_from(cfg, coll.task());
  const TrainConfig tcfg = train_from(cfg);
  const long seed = cfg.get_int("seed", 0);
  const bool split = cfg.get_bool("target-split", false);

  std::vector<RunRow> rows;
  auto run_protocol = [&](const DomainCollection& c, const std::string& protocol, const std::string& suffix) {
    const auto t0 = std::chrono::steady_clock::now();
    const Fitted f = fit(algorithm, c, loss, tcfg, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    RunRow row{algorithm, protocol, seed, f.lambda, f.loss_on(c.target(), loss), std::nullopt, secs};
    if (test) row.test_loss = f.loss_on(*test, loss);
    write_fitted(out, suffix, f);
    rows.push_back(row);
  };
  if (split) {
    run_protocol(coll, "full", "_full");
    run_protocol(split_target(coll, 0.8, static_cast<std::uint64_t>(seed)), "split", "_split");
    // The better protocol by test loss when a test set exists, else by D̂_0 loss.
    auto score = [](const RunRow& r) { return r.test_loss.value_or(r.train_loss); };
    RunRow better = score(rows[1]) < score(rows[0]) ? rows[1] : rows[0];
    better.protocol = "better:" + better.protocol;
    rows.push_back(better);
  } else {
    run_protocol(coll, "full", "");
  }

  io::CsvWriter csv(out / "results.csv");
  csv.row({"algorithm", "protocol", "seed", "lambda", "train_loss", "test_loss", "wall_time_s"});
  for (const auto& r : rows) {
    csv.row({r.algorithm, r.protocol, std::to_string(r.seed), r.lambda, io::format_double(r.train_loss),
             r.test_loss ? io::format_double(*r.test_loss) : "", io::format_double(r.wall_time)});
    log << r.algorithm << " [" << r.protocol << "] train " << io::format_double(r.train_loss);
    if (r.test_loss) log << " test " << io::format_double(*r.test_loss);
    if (!r.lambda.empty()) log << " lambda " << r.lambda;
    log << '\n';
  }
  return rows;
}

std::vector<Table1Row> cmd_table1(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.require_known(known_keys("table1"), "table1");
  if (cfg.has("toy.m0")) throw ConfigError("table1 sweeps m0; use m0=<list> instead of toy.m0");
  const fs::path out = output_dir(cfg);
  const auto m0s = cfg.get_int_list("m0", {50, 100, 200, 300, 400});
  const long seeds = cfg.get_int("seeds", 10);
  if (seeds < 1) throw ConfigError("seeds must be >= 1");
  const long base_seed = cfg.get_int("seed", 0);
  ToyRegressionSpec base = toy_from(cfg);
  base.test_size = 0;
  const LossSpec loss = loss_from(cfg, Task::regression);
  const TrainConfig tcfg = train_from(cfg);

  struct Cell {
    double target_only, minmax, oracle;
  };
  const std::size_t runs = m0s.size() * static_cast<std::size_t>(seeds);
  std::vector<Cell> cells(runs);
  kernels::parallel_for(static_cast<std::ptrdiff_t>(runs), [&](std::ptrdiff_t i) {
    ToyRegressionSpec spec = base;
    spec.m0 = m0s[static_cast<std::size_t>(i) / static_cast<std::size_t>(seeds)];
    spec.seed = static_cast<std::uint64_t>(base_seed + i % seeds);
    const auto data = gen_toy_regression(spec);
    ExperimentConfig local = cfg;
    local.set("seed", std::to_string(spec.seed));
    const auto mm = lmsa_minmax(data.coll, loss, tcfg, minmax_from(local));
    cells[static_cast<std::size_t>(i)] = {data.target_risk(train_on_dataset(data.coll.target(), loss, tcfg)),
                                          data.target_risk(mm.model),
                                          data.target_risk(train_on_mixture(data.coll, data.lambda_star, loss, tcfg))};
  });

  std::vector<Table1Row> table;
  io::CsvWriter runs_csv(out / "table1_runs.csv");
  runs_csv.row({"m0", "seed", "target_only", "lmsa_minmax", "oracle"});
  for (std::size_t r = 0; r < m0s.size(); ++r) {
    Table1Row row{m0s[r], 0.0, 0.0, 0.0, seeds};
    for (long s = 0; s < seeds; ++s) {
      const Cell& c = cells[r * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(s)];
      row.target_only += 1000.0 * c.target_only / seeds;
      row.lmsa_minmax += 1000.0 * c.minmax / seeds;
      row.oracle += 1000.0 * c.oracle / seeds;
      runs_csv.row({std::to_string(m0s[r]), std::to_string(base_seed + s), io::format_double(1000.0 * c.target_only),
                    io::format_double(1000.0 * c.minmax), io::format_double(1000.0 * c.oracle)});
    }
    table.push_back(row);
  }
  io::CsvWriter csv(out / "table1.csv");
  csv.row({"m0", "target_only", "lmsa_minmax", "oracle", "seeds", "first_seed"});
  log << "m0\ttarget_only\tlmsa_minmax\toracle   (test loss x 1000, mean of " << seeds << " seeds)\n";
  for (const auto& row : table) {
    csv.row({std::to_string(row.m0), io::format_double(row.target_only), io::format_double(row.lmsa_minmax),
             io::format_double(row.oracle), std::to_string(row.seeds), std::to_string(base_seed)});
    log << row.m0 << '\t' << row.target_only << '\t' << row.lmsa_minmax << '\t' << row.oracle << '\n';
  }
  return table;
}

void cmd_lowerbound(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.require_known(known_keys("lowerbound"), "lowerbound");
  const fs::path out = output_dir(cfg);
  auto to_ints = [](std::vector<long> v) {
    std::sort(v.begin(), v.end());
    return std::vector<int>(v.begin(), v.end());
  };
  const auto ps = to_ints(cfg.get_int_list("p", {4, 8, 16}));
  const auto m0s = to_ints(cfg.get_int_list("m0", {50, 100, 200, 400}));
  PenaltyOptions opt;
  opt.trials = static_cast<int>(cfg.get_int("trials", opt.trials));
  opt.algorithm = parse_lower_bound_algorithm(cfg.get_string("algorithm", "plug-in"));
  opt.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const auto rows = simulate_penalty(ps, m0s, opt);
  write_penalty_csv(out / "lowerbound.csv", rows);
  if (cfg.has("plot")) write_svg(cfg.get_string("plot", ""), rows);
  log << "p\tm0\tepsilon\tmean_excess\tstderr\n";
  for (const auto& r : rows)
    log << r.p << '\t' << r.m0 << '\t' << r.epsilon << '\t' << r.mean_excess << '\t' << r.stderr_excess << '\n';
}

double cmd_disc(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.require_known(known_keys("disc"), "disc");
  if (!cfg.has("a") || !cfg.has("b")) throw ConfigError("disc needs a=<dataset> and b=<dataset>");
  const Dataset a = io::read_dataset(fs::path(cfg.get_string("a", "")), 1);
  const Dataset b = io::read_dataset(fs::path(cfg.get_string("b", "")), 2);
  const LossSpec loss = loss_from(cfg, a.task());
  const DiscMethod method = parse_disc_method(cfg.get_string("disc.method", "ascent"));
  const auto est = disc_estimate(a, b, loss, method, budget_from(cfg), static_cast<std::uint64_t>(cfg.get_int("seed", 0)));
  log << "disc(" << to_string(method) << ") = " << io::format_double(est.value) << '\n';
  if (cfg.has("out")) {
    const fs::path out = output_dir(cfg);
    io::CsvWriter csv(out / "disc.csv");
    csv.row({"method", "value", "restarts_used"});
    csv.row({to_string(method), io::format_double(est.value), std::to_string(est.restarts_used)});
    io::write_model(out / "disc_witness.txt", est.witness);
  }
  return est.value;
}

}  // namespace msa::cli
