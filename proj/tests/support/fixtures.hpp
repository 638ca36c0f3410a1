#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fids/dataio.hpp"
#include "fids/metrics.hpp"
#include "fids/synthetic.hpp"

namespace fids::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fids_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Published per-device confusion matrices, rows = truth, columns = prediction.
inline metrics::ConfusionMatrix edge1_matrix() {
  return metrics::ConfusionMatrix::from_rows({
      {2491, 90, 111, 80, 7, 4, 63},
      {4, 2616, 0, 0, 0, 0, 0},
      {28, 0, 2621, 2, 0, 0, 21},
      {26, 1, 5, 2416, 2, 0, 4},
      {12, 0, 0, 0, 1197, 0, 0},
      {3, 0, 0, 6, 0, 2737, 0},
      {37, 0, 134, 2, 0, 1, 2430},
  });
}

inline metrics::ConfusionMatrix edge2_matrix() {
  return metrics::ConfusionMatrix::from_rows({
      {602, 23, 32, 17, 2, 0, 3},
      {0, 652, 0, 0, 0, 0, 0},
      {6, 0, 643, 0, 0, 0, 5},
      {6, 0, 3, 615, 0, 0, 4},
      {1, 0, 0, 0, 303, 0, 0},
      {1, 0, 0, 1, 0, 631, 0},
      {10, 0, 28, 1, 0, 0, 610},
  });
}

inline metrics::ConfusionMatrix server_matrix() {
  return metrics::ConfusionMatrix::from_rows({
      {631, 26, 18, 32, 4, 1, 10},
      {1, 629, 0, 0, 1, 0, 0},
      {16, 0, 623, 1, 0, 0, 2},
      {16, 0, 1, 596, 0, 0, 1},
      {5, 0, 0, 0, 299, 0, 0},
      {2, 0, 0, 2, 0, 643, 0},
      {17, 0, 21, 1, 0, 0, 610},
  });
}

// Seven well separated classes, equal counts.
inline Dataset blobs(std::size_t rows_per_class, std::size_t n_features, std::uint64_t seed,
                     double separation = 6.0) {
  const auto labels = LabelMap::intrusion_classes();
  const std::vector<std::size_t> counts(labels.size(), rows_per_class);
  return synthetic::gaussian_blobs(labels, counts, n_features, separation, seed);
}

}  // namespace fids::testing
