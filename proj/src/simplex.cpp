#include "msa/simplex.hpp"

#include "msa/error.hpp"
#include "msa/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>

namespace msa {

MixtureWeight::MixtureWeight(Vector lambda) : lambda_(std::move(lambda)) {
  if (lambda_.size() < 1) throw ConfigError("mixture weight must have at least one entry");
  for (Eigen::Index k = 0; k < lambda_.size(); ++k) {
    if (!(lambda_(k) >= 0.0) || !std::isfinite(lambda_(k))) {
      throw ConfigError("mixture weight entry " + std::to_string(k) + " is negative or not finite");
    }
  }
  if (std::abs(lambda_.sum() - 1.0) > 1e-9) {
    throw ConfigError("mixture weight entries sum to " + io::format_double(lambda_.sum()) +
                      ", expected 1");
  }
}

MixtureWeight MixtureWeight::uniform(int p) {
  if (p < 1) throw ConfigError("p must be >= 1");
  return MixtureWeight(Vector::Constant(p, 1.0 / p));
}

MixtureWeight MixtureWeight::vertex(int p, int k) {
  if (p < 1 || k < 0 || k >= p) throw ConfigError("vertex index out of range");
  Vector v = Vector::Zero(p);
  v(k) = 1.0;
  return MixtureWeight(std::move(v));
}

MixtureWeight MixtureWeight::random(int p, Rng& rng) {
  if (p < 1) throw ConfigError("p must be >= 1");
  std::exponential_distribution<double> expo(1.0);
  Vector v(p);
  for (int k = 0; k < p; ++k) v(k) = expo(rng);
  v /= v.sum();
  return MixtureWeight(std::move(v));
}

double MixtureWeight::l1_distance(const MixtureWeight& other) const {
  if (other.p() != p()) throw DimensionError("mixture weight length", p(), other.p());
  return (lambda_ - other.lambda_).lpNorm<1>();
}

namespace {

void check_cover_args(int p, double epsilon) {
  if (p < 1) throw ConfigError("p must be >= 1");
  if (!(epsilon > 0.0) || epsilon > 1.0) {
    throw ConfigError("cover epsilon must lie in (0, 1], got " + io::format_double(epsilon));
  }
}

// Calls visit(coords) for every grid assignment of the first p-1 coordinates
// whose partial sum stays within 1 + 1e-12.
template <class Visit>
void enumerate_grid(int p, double epsilon, Visit&& visit) {
  const long steps = static_cast<long>(std::floor(p / epsilon + 1e-9));
  std::vector<double> coords(static_cast<std::size_t>(p), 0.0);
  std::vector<long> idx(static_cast<std::size_t>(std::max(p - 1, 0)), 0);
  auto value = [&](long i) { return (static_cast<double>(i) * epsilon) / p; };

  // Odometer over idx with pruning on the running sum.
  const int free = p - 1;
  if (free == 0) {
    coords[0] = 1.0;
    visit(coords);
    return;
  }
  int level = 0;
  std::vector<double> partial(static_cast<std::size_t>(free + 1), 0.0);
  idx[0] = -1;
  while (level >= 0) {
    ++idx[static_cast<std::size_t>(level)];
    const double v = value(idx[static_cast<std::size_t>(level)]);
    const double s = partial[static_cast<std::size_t>(level)] + v;
    if (idx[static_cast<std::size_t>(level)] > steps || s > 1.0 + 1e-12) {
      --level;
      continue;
    }
    coords[static_cast<std::size_t>(level)] = v;
    partial[static_cast<std::size_t>(level + 1)] = s;
    if (level + 1 == free) {
      coords[static_cast<std::size_t>(free)] = std::max(0.0, 1.0 - s);
      visit(coords);
    } else {
      ++level;
      idx[static_cast<std::size_t>(level)] = -1;
    }
  }
}

}  // namespace

SimplexCover make_cover(int p, double epsilon) {
  check_cover_args(p, epsilon);
  SimplexCover cover;
  cover.epsilon = epsilon;
  std::vector<Vector> raw;
  // Points within 1e-12 of each other round to the same grid index, so duplicates
  // only need to be looked for under the same key.
  const double step = epsilon / p;
  std::map<std::vector<long>, std::size_t> seen;
  enumerate_grid(p, epsilon, [&](const std::vector<double>& coords) {
    Vector v = Eigen::Map<const Vector>(coords.data(), p);
    // Absorb rounding so the point passes the MixtureWeight sum check exactly.
    v(p - 1) = std::max(0.0, 1.0 - v.head(p - 1).sum());
    std::vector<long> key(static_cast<std::size_t>(p - 1));
    for (int j = 0; j + 1 < p; ++j) key[static_cast<std::size_t>(j)] = std::lround(v(j) / step);
    const auto [it, inserted] = seen.emplace(std::move(key), raw.size());
    if (!inserted && (raw[it->second] - v).lpNorm<Eigen::Infinity>() <= 1e-12) return;
    raw.push_back(std::move(v));
  });
  cover.points.reserve(raw.size());
  for (auto& v : raw) cover.points.emplace_back(std::move(v));
  return cover;
}

std::size_t cover_size(int p, double epsilon) {
  check_cover_args(p, epsilon);
  std::size_t n = 0;
  enumerate_grid(p, epsilon, [&](const std::vector<double>&) { ++n; });
  return n;
}

double default_cover_epsilon(int p) {
  if (p <= 4) return 0.25;
  if (p <= 6) return 0.5;
  return 1.0;
}

double skewness(const MixtureWeight& lambda, const MixtureWeight& mhat) {
  if (lambda.p() != mhat.p()) throw DimensionError("skewness weight length", lambda.p(), mhat.p());
  double s = 0.0;
  for (int k = 0; k < lambda.p(); ++k) {
    if (lambda[k] == 0.0) continue;
    if (mhat[k] == 0.0) return std::numeric_limits<double>::infinity();
    s += lambda[k] * lambda[k] / mhat[k];
  }
  return s;
}

Vector mix_weights(const MixtureWeight& lambda, const DomainCollection& coll) {
  if (lambda.p() != coll.p()) throw DimensionError("mixture weight length", coll.p(), lambda.p());
  Vector w(coll.total_source_count());
  Eigen::Index offset = 0;
  for (int k = 0; k < coll.p(); ++k) {
    const Eigen::Index mk = coll.source(static_cast<std::size_t>(k)).size();
    w.segment(offset, mk).setConstant(lambda[k] / static_cast<double>(mk));
    offset += mk;
  }
  return w;
}

MixtureWeight empirical_proportions(const DomainCollection& coll) {
  return MixtureWeight(coll.source_proportions());
}

void write_cover_csv(const std::filesystem::path& path, const SimplexCover& cover) {
  io::CsvWriter csv(path);
  std::vector<std::string> header;
  for (int k = 0; k < cover.p(); ++k) header.push_back("lambda_" + std::to_string(k + 1));
  csv.row(header);
  for (const auto& pt : cover.points) {
    std::vector<std::string> cells;
    for (int k = 0; k < pt.p(); ++k) cells.push_back(io::format_double(pt[k]));
    csv.row(cells);
  }
}

SimplexCover read_cover_csv(const std::filesystem::path& path, double epsilon) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  SimplexCover cover;
  cover.epsilon = epsilon;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty cover file");
  const std::size_t p = io::split(line, ',').size();
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = io::split(line, ',');
    if (cells.size() != p) throw IoError(path.string() + ": ragged cover row");
    Vector v(static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < p; ++k) v(static_cast<Eigen::Index>(k)) = io::parse_double(cells[k]);
    cover.points.emplace_back(std::move(v));
  }
  return cover;
}

}  // namespace msa
