#pragma once

// Experiment harness behind the `msa` executable: flat key=value configuration and
// the gen / run / table1 / lowerbound / disc subcommands.

#include "msa/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace msa::cli {

/// key=value pairs, one per line; `#` starts a comment, blank lines are ignored.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(std::istream& in, const std::string& source_name = "<config>");
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Later assignments replace earlier ones.
  void set(const std::string& key, const std::string& value);
  /// Parses a single `key=value` assignment.
  void assign(const std::string& assignment);
  void merge(const ExperimentConfig& other);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated integers.
  std::vector<long> get_int_list(const std::string& key, const std::vector<long>& fallback) const;

  /// Throws ConfigError naming the first key not in `allowed`.
  void require_known(const std::set<std::string>& allowed, const std::string& command) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Keys accepted by a subcommand ("gen", "run", "table1", "lowerbound", "disc").
const std::set<std::string>& known_keys(const std::string& command);

/// Writes the toy or example1 instance into the existing directory `out`
/// (source_<k>.csv, target.csv, test.csv and an oracle.txt / calibration.txt sidecar).
void cmd_gen(const std::string& kind, const ExperimentConfig& cfg, std::ostream& log);

struct RunRow {
  std::string algorithm;
  /// "full", "split", or "better:<full|split>".
  std::string protocol;
  long seed = 0;
  std::string lambda;
  double train_loss = 0.0;
  std::optional<double> test_loss;
  double wall_time = 0.0;
};

/// Runs one algorithm on data=<dir> and writes results.csv plus model files into out=<dir>.
std::vector<RunRow> cmd_run(const ExperimentConfig& cfg, std::ostream& log);

struct Table1Row {
  long m0 = 0;
  double target_only = 0.0;
  double lmsa_minmax = 0.0;
  double oracle = 0.0;
  long seeds = 0;
};

/// Target-only, LMSA-Min-max and known-mixture losses on the toy benchmark, averaged
/// over seeds and scaled by 1000, one row per m0. Writes table1.csv and table1_runs.csv.
std::vector<Table1Row> cmd_table1(const ExperimentConfig& cfg, std::ostream& log);

/// Writes lowerbound.csv and, with plot=<path>, an SVG of mean excess against √(p/m0).
void cmd_lowerbound(const ExperimentConfig& cfg, std::ostream& log);

/// Estimates disc(a, b) between two dataset files; prints and optionally writes disc.csv
/// and the witness model.
double cmd_disc(const ExperimentConfig& cfg, std::ostream& log);

/// Reads target.csv, source_1.csv, source_2.csv, … from a directory.
DomainCollection read_collection(const std::filesystem::path& dir);

}  // namespace msa::cli
