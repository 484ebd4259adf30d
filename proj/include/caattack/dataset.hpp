#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "caattack/graph.hpp"

namespace caatk {

// Raised for unreadable or inconsistent dataset files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// floor(fraction * n) labeled nodes chosen by a seeded shuffle; at least one
// labeled and one unlabeled node when n >= 2. Depends only on (n, fraction, seed).
std::vector<std::uint8_t> split_mask(std::size_t n, double labeled_fraction, std::uint64_t seed);

struct DatasetOptions {
  std::string format = "text";
  double labeled_fraction = 0.10;
  std::uint64_t split_seed = 0;
  bool largest_component = true;
};

// Directory layout ("text" format):
//   edges.txt     two whitespace-separated node ids per line, undirected
//   labels.txt    one integer class per line; its length fixes N
//   features.csv  optional, N rows of d comma-separated reals; identity if absent
// Blank lines and lines starting with '#' are skipped. Self-loops in the
// edge file are dropped.
Graph load_dataset(const std::filesystem::path& dir, const DatasetOptions& opts = {});

// Writes `g` in the layout above (features.csv omitted when `write_features` is false).
void write_dataset(const Graph& g, const std::filesystem::path& dir, bool write_features = true);

struct SbmConfig {
  std::vector<std::size_t> block_sizes{50, 50};
  double p_in = 0.2;
  double p_out = 0.01;
  // 0 gives identity features. Otherwise each class owns feature_dim / K
  // columns, switched on with probability feature_signal for its own nodes
  // and feature_noise for everyone else.
  std::size_t feature_dim = 20;
  double feature_signal = 0.3;
  double feature_noise = 0.05;
  double labeled_fraction = 0.10;
  std::uint64_t seed = 0;
};

// Labels are block indices; the labeled mask comes from split_mask.
Graph stochastic_block_model(const SbmConfig& cfg);

}  // namespace caatk
