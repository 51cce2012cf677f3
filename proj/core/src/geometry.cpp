#include "gramsteer/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gramsteer/error.hpp"

namespace gramsteer {

Matrix pinv_symmetric(const Matrix& m, double cutoff, int* rank) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Vector& ev = eig.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(ev.size());
  int kept = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (largest > 0 && std::abs(ev[i]) > cutoff * largest) {
      inv[i] = 1.0 / ev[i];
      ++kept;
    }
  }
  if (rank) *rank = kept;
  const Matrix& v = eig.eigenvectors();
  Matrix out = v * inv.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

ClassStats stats_from_moments(const Vector& mean, const Matrix& covariance,
                              std::size_t sample_count, double cutoff) {
  ClassStats s;
  s.mean = mean;
  s.sample_count = sample_count;
  s.cutoff = cutoff;
  s.covariance_pinv = pinv_symmetric(covariance, cutoff, &s.rank);
  return s;
}

ClassStats class_stats(const Matrix& rows, double cutoff) {
  if (rows.rows() < 2)
    throw InsufficientDataError("class statistics need at least 2 samples, got " +
                                std::to_string(rows.rows()));
  Vector mean = rows.colwise().mean().transpose();
  Matrix centered = rows.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(rows.rows());
  return stats_from_moments(mean, cov, static_cast<std::size_t>(rows.rows()), cutoff);
}

ConceptDirection estimate_direction(const ClassStats& stats, const std::string& feature,
                                    int layer) {
  Vector raw = stats.covariance_pinv * stats.mean;
  const double norm = raw.norm();
  const double scale = std::max(1.0, stats.mean.norm());
  if (!(norm > 1e-12 * scale) || !std::isfinite(norm))
    throw DegenerateDirectionError("direction for '" + feature + "' vanishes after projection");
  ConceptDirection d;
  d.unit = raw / norm;
  d.scaled = d.unit.dot(stats.mean) * d.unit;
  d.feature = feature;
  d.layer = layer;
  return d;
}

BinaryContrast binary_contrast(const ConceptDirection& a, const ConceptDirection& b) {
  if (a.layer != b.layer)
    throw LayerMismatchError("contrast between layers " + std::to_string(a.layer) + " and " +
                             std::to_string(b.layer));
  if (a.scaled.size() != b.scaled.size()) throw ContractError("dimension mismatch in contrast");
  return BinaryContrast{a.scaled - b.scaled, a.feature, b.feature};
}

Matrix project(const Matrix& points, const std::vector<Vector>& axes) {
  if (axes.empty()) throw ContractError("projection needs at least one axis");
  Matrix out(points.rows(), static_cast<Eigen::Index>(axes.size()));
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (axes[k].size() != points.cols()) throw ContractError("axis dimension mismatch");
    const double n = axes[k].norm();
    if (n == 0.0) throw ContractError("zero-norm projection axis");
    out.col(static_cast<Eigen::Index>(k)) = points * axes[k] / n;
  }
  return out;
}

ClusterQuality cluster_quality(const Matrix& coords, const std::vector<std::string>& labels) {
  if (static_cast<std::size_t>(coords.rows()) != labels.size())
    throw ContractError("coordinates and labels differ in count");
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i)
    groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (groups.size() < 2) throw DegenerateTargetError("cluster quality needs at least 2 classes");
  for (const auto& [name, idx] : groups)
    if (idx.size() < 2)
      throw InsufficientDataError("class '" + name + "' has fewer than 2 points");

  const Vector grand = coords.colwise().mean().transpose();
  double ss_between = 0.0, ss_within = 0.0;
  std::map<std::string, Vector> means;
  for (const auto& [name, idx] : groups) {
    Vector m = Vector::Zero(coords.cols());
    for (auto i : idx) m += coords.row(i).transpose();
    m /= static_cast<double>(idx.size());
    means[name] = m;
    ss_between += static_cast<double>(idx.size()) * (m - grand).squaredNorm();
    for (auto i : idx) ss_within += (coords.row(i).transpose() - m).squaredNorm();
  }
  ClusterQuality q;
  const double total = ss_between + ss_within;
  q.explained_variance = total > 0 ? ss_between / total : 0.0;
  q.fisher_ratio = ss_within > 0 ? ss_between / ss_within
                                 : std::numeric_limits<double>::infinity();

  // Mean silhouette with Euclidean distances.
  const auto n = coords.rows();
  double sil_total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::map<std::string, double> dist_sum;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) dist_sum[labels[static_cast<std::size_t>(j)]] += (coords.row(i) - coords.row(j)).norm();
    const std::string& own = labels[static_cast<std::size_t>(i)];
    double a = dist_sum[own] / static_cast<double>(groups[own].size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [name, idx] : groups)
      if (name != own) b = std::min(b, dist_sum[name] / static_cast<double>(idx.size()));
    double m = std::max(a, b);
    sil_total += m > 0 ? (b - a) / m : 0.0;
  }
  q.silhouette = sil_total / static_cast<double>(n);
  return q;
}

double direction_cosine(const Vector& a, const Vector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw ContractError("cosine of a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace gramsteer
