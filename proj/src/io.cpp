#include "msa/io.hpp"

#include "msa/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace msa::io {

std::string format_double(double value) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (parse_double(buf) == value) break;
  }
  return buf;
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("cannot parse '" + std::string(text) + "' as a decimal number");
  }
  return value;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw IoError("output directory does not exist: " + parent.string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

// Parses `key=value` tokens separated by spaces.
std::string header_value(const std::string& line, const std::string& key) {
  std::istringstream tokens(line);
  std::string token;
  while (tokens >> token) {
    if (token.rfind(key + "=", 0) == 0) return token.substr(key.size() + 1);
  }
  throw IoError("header is missing '" + key + "=': " + line);
}

int header_int(const std::string& line, const std::string& key) {
  const std::string text = header_value(line, key);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("header field " + key + " is not an integer: " + text);
  }
  return value;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "# d=" << data.dim() << " task=" << to_string(data.task()) << " K=" << data.num_classes()
      << "\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) out << format_double(data.features()(i, j)) << ',';
    out << format_double(data.labels()(i)) << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  auto out = open_out(path);
  write_dataset(out, data);
  if (!out) throw IoError("write failed: " + path.string());
}

Dataset read_dataset(std::istream& in, int domain_id) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("#", 0) != 0) {
    throw IoError("dataset file must start with '# d=<int> task=<...> K=<int>'");
  }
  const int d = header_int(header, "d");
  const Task task = parse_task(header_value(header, "task"));
  const int k = header_int(header, "K");
  if (d < 1) throw IoError("dataset dimension must be >= 1");

  std::vector<double> values;
  Eigen::Index rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != d + 1) {
      throw IoError("line " + std::to_string(rows + 2) + " has " + std::to_string(cells.size()) +
                    " fields, expected " + std::to_string(d + 1));
    }
    for (const auto& c : cells) values.push_back(parse_double(c));
    ++rows;
  }
  if (rows == 0) throw IoError("dataset file has no examples");
  RowMatrix x(rows, d);
  Vector y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = values[static_cast<std::size_t>(i * (d + 1) + j)];
    y(i) = values[static_cast<std::size_t>(i * (d + 1) + d)];
  }
  return Dataset(domain_id, task, k, std::move(x), std::move(y));
}

Dataset read_dataset(const std::filesystem::path& path, int domain_id) {
  auto in = open_in(path);
  try {
    return read_dataset(in, domain_id);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_model(std::ostream& out, const Hypothesis& h) {
  out << "msa-model v1\n";
  out << "task=" << to_string(h.task()) << " d=" << h.dim() << " K=" << h.num_classes()
      << " intercept=" << (h.has_intercept() ? 1 : 0) << "\n";
  for (Eigen::Index r = 0; r < h.weights().rows(); ++r) {
    for (Eigen::Index j = 0; j < h.weights().cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(h.weights()(r, j));
    }
    if (h.has_intercept()) out << ',' << format_double(h.intercept()(r));
    out << '\n';
  }
}

void write_model(const std::filesystem::path& path, const Hypothesis& h) {
  auto out = open_out(path);
  write_model(out, h);
  if (!out) throw IoError("write failed: " + path.string());
}

Hypothesis read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "msa-model v1") {
    throw IoError("model file must start with 'msa-model v1'");
  }
  if (!std::getline(in, line)) throw IoError("model file is missing its task/dims line");
  const Task task = parse_task(header_value(line, "task"));
  const int d = header_int(line, "d");
  const int k = header_int(line, "K");
  const bool intercept = header_int(line, "intercept") != 0;
  const int rows = task == Task::regression ? 1 : k;
  const int q = d + (intercept ? 1 : 0);
  Vector theta(static_cast<Eigen::Index>(rows) * q);
  for (int r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw IoError("model file ends before parameter row " + std::to_string(r));
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != q) {
      throw IoError("model parameter row has " + std::to_string(cells.size()) + " fields, expected " +
                    std::to_string(q));
    }
    for (int j = 0; j < q; ++j) theta(static_cast<Eigen::Index>(r) * q + j) = parse_double(cells[j]);
  }
  return Hypothesis::from_flat(task, d, k, intercept, theta);
}

Hypothesis read_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_model(in);
}

struct CsvWriter::Impl {
  std::ofstream file;
  std::ostream* out = nullptr;
};

CsvWriter::CsvWriter(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  impl_->file = open_out(path);
  impl_->out = &impl_->file;
}

CsvWriter::CsvWriter(std::ostream& out) : impl_(std::make_unique<Impl>()) { impl_->out = &out; }

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) *impl_->out << ',';
    *impl_->out << cells[i];
  }
  *impl_->out << '\n';
  if (!*impl_->out) throw IoError("CSV write failed");
}

}  // namespace msa::io
