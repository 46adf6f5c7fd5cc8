#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mumar/geometry.hpp"
#include "mumar/mesh.hpp"

namespace mumar {

struct DistanceStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double rms = 0.0;
  std::size_t n_samples = 0;
};

/// Per-point distance from every result point to the nearest reference point.
std::vector<double> point_distances(const PointCloud& result, const PointCloud& reference);
/// Per-point distance from every result point to the nearest mesh triangle.
std::vector<double> point_distances(const PointCloud& result, const TriangleMesh& reference);

/// min / max / mean / rms of result -> reference nearest distances; max is the
/// directed Hausdorff distance. Throws kEmptyInput.
DistanceStats directed_distance_stats(const PointCloud& result, const PointCloud& reference);
DistanceStats directed_distance_stats(const PointCloud& result, const TriangleMesh& reference);

/// Stats of already computed squared distances, accumulated in order.
DistanceStats stats_from_squared(const std::vector<double>& squared);

struct AlignResult {
  PointCloud aligned;
  RigidTransform transform;  // result -> reference
};

/// Point-to-plane ICP (30% rejection) of a subsample of result onto the
/// reference; the whole result is then moved. Throws kNotConverged when ICP
/// stalls or when fewer than half the samples end within a tenth of the
/// reference diagonal.
AlignResult fine_align(const PointCloud& result, const TriangleMesh& reference);
AlignResult fine_align(const PointCloud& result, const PointCloud& reference_with_normals);

struct BenchmarkRow {
  std::string method;
  std::string object;
  double sigma = 0.0;
  DistanceStats stats;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::string reference_method = "mumar";
  std::string compared_method = "icp";

  /// compared mean / reference mean for the matching object and sigma; NaN when absent.
  double ratio(const std::string& object, double sigma) const;
  std::string csv() const;
  std::string text() const;
};

BenchmarkReport benchmark_report(std::vector<BenchmarkRow> rows, std::string reference_method = "mumar",
                                 std::string compared_method = "icp");

}  // namespace mumar
