#pragma once

// Text file formats: datasets, models, and small CSV helpers.

#include "msa/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace msa::io {

/// Shortest decimal text that parses back to exactly `value` (at most 17 significant digits).
std::string format_double(double value);
double parse_double(std::string_view text);

/// Dataset text format: header `# d=<int> task=<regression|classification> K=<int>`,
/// then one example per line, comma-separated decimals with the label last.
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(std::istream& in, int domain_id);
Dataset read_dataset(const std::filesystem::path& path, int domain_id);

/// Model text format: `msa-model v1`, a task/dims line, then one parameter row per
/// output (w_1..w_d[, b]).
void write_model(std::ostream& out, const Hypothesis& h);
void write_model(const std::filesystem::path& path, const Hypothesis& h);
Hypothesis read_model(std::istream& in);
Hypothesis read_model(const std::filesystem::path& path);

/// Minimal CSV writer; cells are written verbatim.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  explicit CsvWriter(std::ostream& out);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<std::string> split(std::string_view line, char sep);

}  // namespace msa::io
