#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gramsteer/types.hpp"

namespace gramsteer::fixtures {

inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                       double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

inline Vector gaussian_vector(std::mt19937_64& rng, Eigen::Index n, double sigma = 1.0) {
  return gaussian(rng, n, 1, sigma).col(0);
}

// Two unit-variance Gaussian clusters in d dimensions whose means sit
// `separation` apart along the first axis. `margin` is the gap between the
// classes on that axis; a positive margin proves linear separability.
struct SeparatedClusters {
  Matrix x;
  std::vector<std::string> y;
  double margin = 0.0;
};

inline SeparatedClusters separated_clusters(std::uint64_t seed, Eigen::Index per_class = 100,
                                            Eigen::Index d = 8, double separation = 5.0) {
  std::mt19937_64 rng(seed);
  SeparatedClusters c;
  c.x = gaussian(rng, 2 * per_class, d);
  double max_a = -1e300, min_b = 1e300;
  for (Eigen::Index i = 0; i < 2 * per_class; ++i) {
    bool b = i >= per_class;
    c.x(i, 0) += b ? separation / 2 : -separation / 2;
    c.y.push_back(b ? "b" : "a");
    if (b) min_b = std::min(min_b, c.x(i, 0));
    else max_a = std::max(max_a, c.x(i, 0));
  }
  c.margin = min_b - max_a;
  return c;
}

// Fresh empty directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gramsteer_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace gramsteer::fixtures
