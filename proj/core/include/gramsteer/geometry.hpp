#pragma once

#include <string>
#include <vector>

#include "gramsteer/types.hpp"

namespace gramsteer {

inline constexpr double kDefaultPinvCutoff = 1e-6;

struct ClassStats {
  Vector mean;
  Matrix covariance_pinv;
  std::size_t sample_count = 0;
  double cutoff = kDefaultPinvCutoff;  // relative to the largest eigenvalue
  int rank = 0;                        // eigenvalues kept by the pseudo-inverse
};

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix; eigenvalues below
// cutoff * largest are dropped.
Matrix pinv_symmetric(const Matrix& m, double cutoff, int* rank = nullptr);

// `rows` are centered samples of one class. Uses the population covariance,
// so duplicating the data leaves the statistics unchanged.
ClassStats class_stats(const Matrix& rows, double cutoff = kDefaultPinvCutoff);
ClassStats stats_from_moments(const Vector& mean, const Matrix& covariance,
                              std::size_t sample_count, double cutoff = kDefaultPinvCutoff);

struct ConceptDirection {
  Vector unit;
  Vector scaled;
  std::string feature;
  int layer = 0;
};

ConceptDirection estimate_direction(const ClassStats& stats, const std::string& feature = "",
                                    int layer = 0);

struct BinaryContrast {
  Vector vector;
  std::string positive;
  std::string negative;
};

BinaryContrast binary_contrast(const ConceptDirection& a, const ConceptDirection& b);

// Row p, column k: points.row(p) . axes[k] / |axes[k]|.
Matrix project(const Matrix& points, const std::vector<Vector>& axes);

struct ClusterQuality {
  double explained_variance = 0.0;
  double fisher_ratio = 0.0;
  double silhouette = 0.0;
};

ClusterQuality cluster_quality(const Matrix& coords, const std::vector<std::string>& labels);

double direction_cosine(const Vector& a, const Vector& b);

}  // namespace gramsteer
