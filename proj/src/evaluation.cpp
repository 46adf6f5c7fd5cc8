#include "mumar/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mumar/error.hpp"
#include "mumar/icp.hpp"
#include "mumar/kdtree.hpp"

namespace mumar {

namespace {

std::vector<double> squared_to_cloud(const PointCloud& result, const PointCloud& reference) {
  if (result.empty() || reference.empty()) throw Error(ErrorCode::kEmptyInput, "distance needs non-empty inputs");
  const KdTree tree(reference.points);
  std::vector<double> out;
  out.reserve(result.size());
  for (const auto& p : result.points) out.push_back(tree.nearest(p).squared_distance);
  return out;
}

std::vector<double> squared_to_mesh(const PointCloud& result, const TriangleMesh& reference) {
  if (result.empty() || reference.triangles.empty()) {
    throw Error(ErrorCode::kEmptyInput, "distance needs non-empty inputs");
  }
  std::vector<double> out;
  out.reserve(result.size());
  for (const auto& p : result.points) out.push_back(squared_distance_to_mesh(p, reference));
  return out;
}

std::vector<double> roots(std::vector<double> squared) {
  for (auto& d : squared) d = std::sqrt(d);
  return squared;
}

}  // namespace

std::vector<double> point_distances(const PointCloud& result, const PointCloud& reference) {
  return roots(squared_to_cloud(result, reference));
}

std::vector<double> point_distances(const PointCloud& result, const TriangleMesh& reference) {
  return roots(squared_to_mesh(result, reference));
}

DistanceStats stats_from_squared(const std::vector<double>& squared) {
  if (squared.empty()) throw Error(ErrorCode::kEmptyInput, "no distances");
  DistanceStats s;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double d2 : squared) {
    lo = std::min(lo, d2);
    hi = std::max(hi, d2);
    sum += std::sqrt(d2);
    sum_sq += d2;
  }
  const double n = static_cast<double>(squared.size());
  s.min = std::sqrt(lo);
  s.max = std::sqrt(hi);
  s.mean = sum / n;
  s.rms = std::sqrt(sum_sq / n);
  s.n_samples = squared.size();
  return s;
}

DistanceStats directed_distance_stats(const PointCloud& result, const PointCloud& reference) {
  return stats_from_squared(squared_to_cloud(result, reference));
}

DistanceStats directed_distance_stats(const PointCloud& result, const TriangleMesh& reference) {
  return stats_from_squared(squared_to_mesh(result, reference));
}

AlignResult fine_align(const PointCloud& result, const PointCloud& reference_with_normals) {
  if (result.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to align");
  constexpr std::size_t kMaxSamples = 20000;
  const std::size_t stride = (result.size() + kMaxSamples - 1) / kMaxSamples;
  PointCloud sample;
  for (std::size_t i = 0; i < result.size(); i += stride) sample.points.push_back(result.points[i]);

  IcpOptions opts;
  opts.rejection_fraction = 0.3;
  opts.use_boundaries = false;
  opts.max_iterations = 100;
  opts.convergence_delta = 1e-10;
  const IcpResult icp = icp_point_to_plane(sample, reference_with_normals, opts);
  if (!icp.converged) throw Error(ErrorCode::kNotConverged, "fine alignment did not converge");

  // Landing outside the reference means the start was beyond the basin.
  Eigen::Vector3d lo = reference_with_normals.points.front(), hi = lo;
  for (const auto& p : reference_with_normals.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double reach = 0.1 * (hi - lo).norm();
  const KdTree tree(reference_with_normals.points);
  std::size_t close = 0;
  for (const auto& p : sample.points) {
    if (tree.nearest(icp.transform.apply(p)).squared_distance <= reach * reach) ++close;
  }
  if (2 * close < sample.size()) {
    throw Error(ErrorCode::kNotConverged, "fine alignment left the result outside the reference");
  }
  return {apply_transform(icp.transform, result), icp.transform};
}

AlignResult fine_align(const PointCloud& result, const TriangleMesh& reference) {
  const double area = reference.surface_area();
  if (!(area > 0.0)) throw Error(ErrorCode::kEmptyInput, "reference mesh has no area");
  const PointCloud dense = sample_mesh(reference, 60000.0 / area, 0x5eed);
  return fine_align(result, dense);
}

double BenchmarkReport::ratio(const std::string& object, double sigma) const {
  double ref = std::numeric_limits<double>::quiet_NaN();
  double cmp = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    if (r.object != object || r.sigma != sigma) continue;
    if (r.method == reference_method) ref = r.stats.mean;
    if (r.method == compared_method) cmp = r.stats.mean;
  }
  return cmp / ref;
}

std::string BenchmarkReport::csv() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "method,object,sigma,min,max,mean,rms,n_samples,ratio\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.object << ',' << r.sigma << ',' << r.stats.min << ',' << r.stats.max << ','
        << r.stats.mean << ',' << r.stats.rms << ',' << r.stats.n_samples << ',' << ratio(r.object, r.sigma) << '\n';
  }
  return out.str();
}

std::string BenchmarkReport::text() const {
  std::ostringstream out;
  out << std::left << std::setw(8) << "method" << std::setw(16) << "object" << std::right << std::setw(10) << "sigma"
      << std::setw(12) << "min" << std::setw(12) << "max" << std::setw(12) << "mean" << std::setw(12) << "rms"
      << std::setw(10) << "ratio" << '\n';
  out << std::setprecision(4);
  for (const auto& r : rows) {
    out << std::left << std::setw(8) << r.method << std::setw(16) << r.object << std::right << std::setw(10)
        << r.sigma << std::scientific << std::setw(12) << r.stats.min << std::setw(12) << r.stats.max
        << std::setw(12) << r.stats.mean << std::setw(12) << r.stats.rms << std::fixed << std::setw(10)
        << ratio(r.object, r.sigma) << std::defaultfloat << '\n';
  }
  return out.str();
}

BenchmarkReport benchmark_report(std::vector<BenchmarkRow> rows, std::string reference_method,
                                 std::string compared_method) {
  std::stable_sort(rows.begin(), rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
    if (a.object != b.object) return a.object < b.object;
    if (a.sigma != b.sigma) return a.sigma < b.sigma;
    return a.method > b.method;
  });
  BenchmarkReport report;
  report.rows = std::move(rows);
  report.reference_method = std::move(reference_method);
  report.compared_method = std::move(compared_method);
  return report;
}

}  // namespace mumar
