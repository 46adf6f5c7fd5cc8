#include "mumar/plane_detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "mumar/error.hpp"
#include "mumar/simd.hpp"

namespace mumar {

void MarkerConstraints::validate() const {
  if (max_visible_planes < 1) throw Error(ErrorCode::kInvalidArgument, "max_visible_planes must be >= 1");
  if (!(angle_tolerance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "angle_tolerance must be > 0");
  if (!(inlier_distance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "inlier_distance must be > 0");
  if (!(cluster_overshoot >= 0.0 && cluster_overshoot < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cluster_overshoot must lie in [0, 1)");
  }
  for (double a : pairwise_angles) {
    if (!std::isfinite(a)) throw Error(ErrorCode::kInvalidArgument, "pairwise angle must be finite");
  }
}

std::size_t MarkerConstraints::cluster_count() const {
  return static_cast<std::size_t>(
      std::lround(static_cast<double>(max_visible_planes) * (1.0 + cluster_overshoot)));
}

MarkerConstraints MarkerConstraints::cube(double inlier_distance, double angle_tolerance) {
  MarkerConstraints c;
  c.max_visible_planes = 3;
  c.pairwise_angles = {90.0};
  c.angle_tolerance = angle_tolerance;
  c.inlier_distance = inlier_distance;
  c.cluster_overshoot = 0.4;
  return c;
}

namespace {

double fold_angle(double degrees) {
  const double a = std::fmod(std::abs(degrees), 180.0);
  return std::min(a, 180.0 - a);
}

bool pair_allowed(const UnitVector3& a, const UnitVector3& b, const MarkerConstraints& c) {
  const double folded = fold_angle(angle_between(a, b));
  for (double allowed : c.pairwise_angles) {
    if (std::abs(folded - fold_angle(allowed)) <= c.angle_tolerance) return true;
  }
  return false;
}

using Feature = Eigen::Matrix<double, 6, 1>;

struct KMeansResult {
  std::vector<int> assignment;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeansResult kmeans(const std::vector<Feature>& features, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = features.size();
  std::vector<Feature> centers;
  centers.reserve(k);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(features[pick(rng)]);

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (features[i] - centers.back()).squaredNorm());
      total += d2[i];
    }
    if (total <= 0.0) break;
    double target = unit(rng) * total;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(features[chosen]);
  }

  KMeansResult result;
  result.assignment.assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = (features[i] - centers[c]).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (result.assignment[i] != best) {
        result.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Feature> sums(centers.size(), Feature::Zero());
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[result.assignment[i]] += features[i];
      ++counts[result.assignment[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] > 0) centers[c] = sums[c] / static_cast<double>(counts[c]);
    }
  }
  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += (features[i] - centers[result.assignment[i]]).squaredNorm();
  }
  return result;
}

Eigen::Vector3d mean_normal(const PointCloud& cloud, const std::vector<std::size_t>& members) {
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (std::size_t i : members) acc += cloud.normals[i];
  return acc;
}

PlaneModel orient(const PlaneModel& plane, const Eigen::Vector3d& reference) {
  if (plane.normal.vec().dot(reference) < 0.0) return PlaneModel{-plane.normal, plane.centroid};
  return plane;
}

std::optional<PlaneModel> fit_members(const PointCloud& cloud, const std::vector<std::size_t>& members) {
  if (members.size() < 3) return std::nullopt;
  std::vector<Point3> pts;
  pts.reserve(members.size());
  for (std::size_t i : members) pts.push_back(cloud.points[i]);
  try {
    return orient(fit_plane(pts), mean_normal(cloud, members));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateSet) return std::nullopt;
    throw;
  }
}

bool coplanar(const PlaneModel& a, const PlaneModel& b, const MarkerConstraints& c) {
  return angle_between(a.normal, b.normal) < c.angle_tolerance &&
         std::abs(a.signed_distance(b.centroid)) < c.inlier_distance &&
         std::abs(b.signed_distance(a.centroid)) < c.inlier_distance;
}

/// Running first/second moments about a fixed shift, for O(1) refits.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(const Point3& shift) : shift_(shift) {}

  void add(const Point3& p) {
    const Eigen::Vector3d d = p - shift_;
    sum_ += d;
    outer_ += d * d.transpose();
    ++count_;
  }

  /// Plane of the accumulated points plus p, without modifying the state.
  std::optional<PlaneModel> plane_with(const Point3& p, const Eigen::Vector3d& orientation) const {
    const Eigen::Vector3d d = p - shift_;
    return solve(sum_ + d, outer_ + d * d.transpose(), count_ + 1, orientation);
  }

 private:
  std::optional<PlaneModel> solve(const Eigen::Vector3d& sum, const Eigen::Matrix3d& outer,
                                  std::size_t count, const Eigen::Vector3d& orientation) const {
    const double inv_n = 1.0 / static_cast<double>(count);
    const Eigen::Vector3d mean = sum * inv_n;
    const Eigen::Matrix3d cov = outer * inv_n - mean * mean.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d lambda = eig.eigenvalues();
    if (!(lambda(2) > 0.0) || lambda(1) <= 1e-10 * lambda(2)) return std::nullopt;
    Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
    if (n.dot(orientation) < 0.0) n = -n;
    return PlaneModel{UnitVector3::normalize(n), shift_ + mean};
  }

  Point3 shift_;
  Eigen::Vector3d sum_ = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer_ = Eigen::Matrix3d::Zero();
  std::size_t count_ = 0;
};

// Drops residuals beyond 3 robust sigmas (median absolute residual) and
// refits until the kept set stops changing.
PlaneModel trimmed_refit(const PointCloud& cloud, const std::vector<std::size_t>& members, PlaneModel plane) {
  std::vector<std::size_t> kept = members;
  for (int iter = 0; iter < 20; ++iter) {
    std::vector<double> r(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) r[i] = std::abs(plane.signed_distance(cloud.points[members[i]]));
    std::vector<double> sorted = r;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double limit = 3.0 * 1.4826 * sorted[sorted.size() / 2];
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (r[i] <= limit) next.push_back(members[i]);
    }
    if (next == kept && iter > 0) break;
    if (next.size() < 3 || 2 * next.size() < members.size()) break;
    const std::optional<PlaneModel> fit = fit_members(cloud, next);
    if (!fit) break;
    plane = orient(*fit, plane.normal.vec());
    kept = std::move(next);
  }
  return plane;
}

bool consistent_with_others(const PlaneModel& candidate, std::size_t self,
                            const std::vector<PlaneModel>& planes, const MarkerConstraints& c) {
  for (std::size_t j = 0; j < planes.size(); ++j) {
    if (j != self && !pair_allowed(candidate.normal, planes[j].normal, c)) return false;
  }
  return true;
}

}  // namespace

bool check_constraints(const std::vector<PlaneModel>& planes, const MarkerConstraints& constraints) {
  if (planes.empty() || planes.size() > constraints.max_visible_planes) return false;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    for (std::size_t j = i + 1; j < planes.size(); ++j) {
      if (!pair_allowed(planes[i].normal, planes[j].normal, constraints)) return false;
    }
  }
  return true;
}

double inlier_ratio(const std::vector<Point3>& points, const PlaneModel& plane, double inlier_distance) {
  if (points.empty()) return 0.0;
  std::vector<double> d(points.size());
  simd::plane_distances(points, plane.normal.vec(), plane.normal.vec().dot(plane.centroid), d);
  const auto inliers = std::count_if(d.begin(), d.end(), [&](double v) { return std::abs(v) < inlier_distance; });
  return static_cast<double>(inliers) / static_cast<double>(points.size());
}

std::vector<FaceCluster> cluster_faces(const PointCloud& cloud, const MarkerConstraints& constraints,
                                       std::uint64_t rng_seed) {
  constraints.validate();
  cloud.validate();
  if (!cloud.has_normals()) throw Error(ErrorCode::kInvalidArgument, "clustering needs cloud normals");
  const std::size_t m = std::max<std::size_t>(1, constraints.cluster_count());
  if (cloud.size() < 3 * m) {
    throw Error(ErrorCode::kTooFewPoints, "clustering needs at least 3 points per cluster");
  }

  // Positions go into the unit ball around the centroid (rotation invariant);
  // normals enter unscaled.
  Point3 center = Point3::Zero();
  for (const auto& p : cloud.points) center += p;
  center /= static_cast<double>(cloud.size());
  double radius = 0.0;
  for (const auto& p : cloud.points) radius = std::max(radius, (p - center).norm());
  if (radius <= 0.0) radius = 1.0;

  std::vector<Feature> features(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    features[i].head<3>() = (cloud.points[i] - center) / radius;
    features[i].tail<3>() = cloud.normals[i];
  }

  std::mt19937_64 rng(rng_seed);
  KMeansResult best;
  for (int restart = 0; restart < 3; ++restart) {
    KMeansResult r = kmeans(features, m, rng);
    if (r.inertia < best.inertia) best = std::move(r);
  }

  std::vector<std::vector<std::size_t>> groups(m);
  for (std::size_t i = 0; i < cloud.size(); ++i) groups[best.assignment[i]].push_back(i);

  struct Group {
    std::vector<std::size_t> members;
    PlaneModel model;
  };
  std::vector<Group> live;
  for (auto& g : groups) {
    if (auto model = fit_members(cloud, g)) live.push_back(Group{std::move(g), *model});
  }

  // Merge coplanar pairs until nothing changes.
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t a = 0; a < live.size() && !merged; ++a) {
      for (std::size_t b = a + 1; b < live.size() && !merged; ++b) {
        if (!coplanar(live[a].model, live[b].model, constraints)) continue;
        auto& dst = live[a].members;
        dst.insert(dst.end(), live[b].members.begin(), live[b].members.end());
        std::sort(dst.begin(), dst.end());
        if (auto model = fit_members(cloud, dst)) live[a].model = *model;
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(b));
        merged = true;
      }
    }
  }

  const double min_size = 0.01 * static_cast<double>(cloud.size());
  std::erase_if(live, [&](const Group& g) { return static_cast<double>(g.members.size()) < min_size; });
  if (live.empty()) throw Error(ErrorCode::kNoClustersSurvive, "every cluster was rejected");

  std::sort(live.begin(), live.end(), [](const Group& a, const Group& b) {
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    return a.members.front() < b.members.front();
  });
  if (live.size() > constraints.max_visible_planes) live.resize(constraints.max_visible_planes);

  std::vector<FaceCluster> out;
  out.reserve(live.size());
  for (auto& g : live) out.push_back(FaceCluster{std::move(g.members), g.model});
  return out;
}

std::vector<PlaneModel> detect_marker_planes(const PointCloud& cloud,
                                             const MarkerConstraints& constraints,
                                             std::uint64_t rng_seed, const RansacParams& params) {
  if (params.sample_size < 3 || params.cluster_attempts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "sample_size must be >= 3 and cluster_attempts >= 1");
  }
  std::vector<FaceCluster> clusters;
  std::vector<std::vector<std::size_t>> samples;
  std::vector<PlaneModel> seeds;
  std::mt19937_64 rng;
  bool satisfied = false;
  for (std::size_t round = 0; round < params.cluster_attempts && !satisfied; ++round) {
    const std::uint64_t seed = round == 0 ? rng_seed : std::mt19937_64(rng_seed + round)();
    clusters = cluster_faces(cloud, constraints, seed);
    rng.seed(seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<Eigen::Vector3d> orientation;
    for (const auto& c : clusters) orientation.push_back(mean_normal(cloud, c.member_indices));

    // Joint seed sample; redrawn whole until the seed planes fit the constraints.
    samples.assign(clusters.size(), {});
    seeds.assign(clusters.size(), PlaneModel{});
    for (std::size_t attempt = 0; attempt < params.max_restarts && !satisfied; ++attempt) {
      bool fitted = true;
      for (std::size_t c = 0; c < clusters.size() && fitted; ++c) {
        std::vector<std::size_t> pool = clusters[c].member_indices;
        const std::size_t take = std::min(params.sample_size, pool.size());
        for (std::size_t i = 0; i < take; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
          std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(take);
        std::sort(pool.begin(), pool.end());
        samples[c] = std::move(pool);
        std::vector<Point3> pts;
        for (std::size_t i : samples[c]) pts.push_back(cloud.points[i]);
        try {
          seeds[c] = orient(fit_plane(pts), orientation[c]);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateSet) throw;
          fitted = false;
        }
      }
      satisfied = fitted && check_constraints(seeds, constraints);
    }
  }
  if (!satisfied) {
    throw Error(ErrorCode::kConstraintsUnsatisfiable,
                "no seed sample satisfied the marker constraints after " + std::to_string(params.cluster_attempts) +
                    " clusterings of " + std::to_string(params.max_restarts) + " restarts");
  }

  std::vector<PlaneModel> planes = seeds;
  std::vector<std::vector<std::size_t>> grown(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    MomentAccumulator acc(seeds[c].centroid);
    for (std::size_t i : samples[c]) acc.add(cloud.points[i]);
    grown[c] = samples[c];

    std::vector<std::size_t> candidates;
    candidates.reserve(clusters[c].member_indices.size());
    std::set_difference(clusters[c].member_indices.begin(), clusters[c].member_indices.end(),
                        samples[c].begin(), samples[c].end(), std::back_inserter(candidates));
    std::shuffle(candidates.begin(), candidates.end(), rng);

    for (std::size_t idx : candidates) {
      const Point3& p = cloud.points[idx];
      if (std::abs(planes[c].signed_distance(p)) >= constraints.inlier_distance) continue;
      const std::optional<PlaneModel> refit = acc.plane_with(p, planes[c].normal.vec());
      if (refit && consistent_with_others(*refit, c, planes, constraints)) {
        acc.add(p);
        grown[c].push_back(idx);
        planes[c] = *refit;
      }
    }
  }

  if (!check_constraints(planes, constraints)) {
    throw Error(ErrorCode::kConstraintsUnsatisfiable, "grown planes violate the marker constraints");
  }

  std::vector<PlaneModel> refined = planes;
  for (std::size_t c = 0; c < planes.size(); ++c) refined[c] = trimmed_refit(cloud, grown[c], planes[c]);
  return check_constraints(refined, constraints) ? refined : planes;
}

}  // namespace mumar
