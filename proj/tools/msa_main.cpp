// Command-line entry point: `msa <gen|run|table1|lowerbound|disc> [options]`.

#include "msa/cli.hpp"
#include "msa/error.hpp"
#include "msa/kernels.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> assignments;
  std::vector<std::pair<std::string, std::string>> flags;
};

// Config file first, then --set assignments, then dedicated flags.
msa::cli::ExperimentConfig build_config(const Common& c) {
  msa::cli::ExperimentConfig cfg;
  if (!c.config_file.empty()) cfg = msa::cli::ExperimentConfig::load(c.config_file);
  for (const auto& a : c.assignments) cfg.assign(a);
  for (const auto& [k, v] : c.flags) cfg.set(k, v);
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_file, "key=value configuration file");
  sub->add_option("-s,--set", c.assignments, "extra key=value assignment (repeatable)");
}

// A flag that stores its value under a config key.
void add_keyed(CLI::App* sub, Common& c, const std::string& flag, const std::string& key, const std::string& help) {
  sub->add_option_function<std::string>(flag, [&c, key](const std::string& v) { c.flags.emplace_back(key, v); }, help);
}

}  // namespace

int main(int argc, char** argv) {
  msa::kernels::apply_env_thread_limit();
  CLI::App app{"Multiple-source adaptation with limited target labels"};
  app.require_subcommand(1);

  Common gen_c, run_c, table_c, lb_c, disc_c;
  std::string gen_kind;
  auto* gen = app.add_subcommand("gen", "generate a synthetic instance (toy | example1)");
  gen->add_option("kind", gen_kind, "toy or example1")->required();
  add_common(gen, gen_c);
  add_keyed(gen, gen_c, "--seed", "seed", "random seed");
  add_keyed(gen, gen_c, "--n", "n", "example1 rows per domain");
  add_keyed(gen, gen_c, "--out", "out", "existing output directory");

  auto* run = app.add_subcommand("run", "run one algorithm or baseline on a data directory");
  add_common(run, run_c);
  add_keyed(run, run_c, "--algorithm", "algorithm", "lmsa | lmsa_boost | lmsa_minmax | baseline name");
  add_keyed(run, run_c, "--data", "data", "directory with target.csv and source_<k>.csv");
  add_keyed(run, run_c, "--out", "out", "existing output directory");
  add_keyed(run, run_c, "--seed", "seed", "random seed");
  run->add_flag_callback("--target-split", [&run_c] { run_c.flags.emplace_back("target-split", "true"); },
                         "also run the 80/20 split protocol and report the better one");

  auto* table = app.add_subcommand("table1", "target-only vs LMSA-Min-max vs known mixture on the toy benchmark");
  add_common(table, table_c);
  add_keyed(table, table_c, "--out", "out", "existing output directory");
  add_keyed(table, table_c, "--seeds", "seeds", "number of seeds");

  auto* lb = app.add_subcommand("lowerbound", "simulate the model-selection lower bound");
  add_common(lb, lb_c);
  add_keyed(lb, lb_c, "--out", "out", "existing output directory");
  add_keyed(lb, lb_c, "--plot", "plot", "SVG output path");
  add_keyed(lb, lb_c, "--trials", "trials", "trials per grid point");

  auto* disc = app.add_subcommand("disc", "estimate the discrepancy between two dataset files");
  add_common(disc, disc_c);
  add_keyed(disc, disc_c, "--a", "a", "first dataset file");
  add_keyed(disc, disc_c, "--b", "b", "second dataset file");
  add_keyed(disc, disc_c, "--method", "disc.method", "ascent | grid-oracle");
  add_keyed(disc, disc_c, "--out", "out", "existing output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) msa::cli::cmd_gen(gen_kind, build_config(gen_c), std::cout);
    if (run->parsed()) msa::cli::cmd_run(build_config(run_c), std::cout);
    if (table->parsed()) msa::cli::cmd_table1(build_config(table_c), std::cout);
    if (lb->parsed()) msa::cli::cmd_lowerbound(build_config(lb_c), std::cout);
    if (disc->parsed()) msa::cli::cmd_disc(build_config(disc_c), std::cout);
  } catch (const msa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
