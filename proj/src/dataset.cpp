#include "caattack/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace caatk {

std::vector<std::uint8_t> split_mask(std::size_t n, double labeled_fraction, std::uint64_t seed) {
  if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0))
    throw std::invalid_argument("labeled fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto labeled = static_cast<std::size_t>(std::floor(labeled_fraction * static_cast<double>(n)));
  if (n >= 2) labeled = std::clamp<std::size_t>(labeled, 1, n - 1);
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t k = 0; k < labeled; ++k) mask[order[k]] = 1;
  return mask;
}

namespace {

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

std::ifstream open(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

std::vector<int> read_labels(const std::filesystem::path& p) {
  auto in = open(p);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    std::istringstream ss(line);
    long long y;
    std::string rest;
    if (!(ss >> y) || (ss >> rest) || y < 0)
      throw DataError(p.string() + ":" + std::to_string(lineno) + ": expected a non-negative integer label");
    labels.push_back(static_cast<int>(y));
  }
  if (labels.empty()) throw DataError(p.string() + ": no labels");
  return labels;
}

std::vector<NodePair> read_edges(const std::filesystem::path& p, std::size_t n) {
  auto in = open(p);
  std::vector<NodePair> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    std::istringstream ss(line);
    long long i, j;
    std::string rest;
    if (!(ss >> i >> j) || (ss >> rest))
      throw DataError(p.string() + ":" + std::to_string(lineno) + ": expected two node ids");
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
      throw DataError(p.string() + ":" + std::to_string(lineno) + ": node id outside [0, " +
                      std::to_string(n) + ")");
    if (i == j) continue;
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return edges;
}

Matrix read_features(const std::filesystem::path& p, std::size_t n) {
  auto in = open(p);
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (skip_line(line)) continue;
    std::size_t count = 0;
    const char* s = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(s, &end);
      if (end == s) throw DataError(p.string() + ": malformed value on row " + std::to_string(rows));
      values.push_back(v);
      ++count;
      while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
      if (*end == '\0') break;
      if (*end != ',') throw DataError(p.string() + ": expected ',' on row " + std::to_string(rows));
      s = end + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols)
      throw DataError(p.string() + ": row " + std::to_string(rows) + " has " + std::to_string(count) +
                      " values, expected " + std::to_string(cols));
    ++rows;
  }
  if (rows != n)
    throw DataError(p.string() + ": " + std::to_string(rows) + " feature rows for " +
                    std::to_string(n) + " labels");
  Matrix x(rows, cols);
  std::copy(values.begin(), values.end(), x.data());
  return x;
}

}  // namespace

Graph load_dataset(const std::filesystem::path& dir, const DatasetOptions& opts) {
  if (opts.format != "text") throw DataError("unsupported dataset format '" + opts.format + "'");
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  const auto labels_path = dir / "labels.txt";
  if (!std::filesystem::exists(labels_path)) throw DataError("missing labels file " + labels_path.string());
  auto labels = read_labels(labels_path);
  const std::size_t n = labels.size();
  const auto edges = read_edges(dir / "edges.txt", n);
  const auto features_path = dir / "features.csv";
  Matrix x = std::filesystem::exists(features_path) ? read_features(features_path, n)
                                                    : Matrix::identity(n);
  Graph g = build_graph(n, edges, std::move(x), std::move(labels), std::vector<std::uint8_t>(n, 0));
  if (opts.largest_component) g = largest_connected_component(g);
  return g.with_labeled_mask(split_mask(g.n_nodes(), opts.labeled_fraction, opts.split_seed));
}

void write_dataset(const Graph& g, const std::filesystem::path& dir, bool write_features) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "edges.txt");
    for (const auto& [i, j] : g.edges()) out << i << ' ' << j << '\n';
  }
  {
    std::ofstream out(dir / "labels.txt");
    for (int y : g.labels()) out << y << '\n';
  }
  if (write_features) {
    std::ofstream out(dir / "features.csv");
    out << std::setprecision(17);
    const Matrix& x = g.features();
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) out << (j ? "," : "") << x(i, j);
      out << '\n';
    }
  }
  if (!std::filesystem::exists(dir / "edges.txt")) throw DataError("failed to write " + dir.string());
}

Graph stochastic_block_model(const SbmConfig& cfg) {
  if (cfg.block_sizes.empty()) throw std::invalid_argument("sbm needs at least one block");
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> labels;
  for (std::size_t b = 0; b < cfg.block_sizes.size(); ++b)
    labels.insert(labels.end(), cfg.block_sizes[b], static_cast<int>(b));
  const std::size_t n = labels.size();
  const std::size_t k = cfg.block_sizes.size();

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NodePair> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < (labels[i] == labels[j] ? cfg.p_in : cfg.p_out)) edges.emplace_back(i, j);

  Matrix x;
  if (cfg.feature_dim == 0) {
    x = Matrix::identity(n);
  } else {
    x = Matrix(n, cfg.feature_dim);
    const std::size_t per_class = std::max<std::size_t>(cfg.feature_dim / k, 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < cfg.feature_dim; ++f) {
        const bool own = f / per_class == static_cast<std::size_t>(labels[i]);
        x(i, f) = u(rng) < (own ? cfg.feature_signal : cfg.feature_noise) ? 1.0 : 0.0;
      }
  }
  auto mask = split_mask(n, cfg.labeled_fraction, cfg.seed ^ 0x5b3f1c2du);
  return build_graph(n, edges, std::move(x), std::move(labels), std::move(mask),
                     static_cast<int>(k));
}

}  // namespace caatk
