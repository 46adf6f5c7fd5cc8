#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mumar/correspondence.hpp"
#include "mumar/geometry.hpp"

namespace mumar {

/// Eq.-style alignment error of a window: summed normal angles (degrees) and
/// centroid-to-plane distances, each divided by the number of views.
struct ErrorPair {
  double rotation = 0.0;
  double translation = 0.0;
};

enum class TranslationRule {
  kLeastSquares,    // t minimizing sum (n_s . (R c_d + t - c_s))^2
  kProjectionMean,  // mean of (projection of R c_d on the scene plane - R c_d)
};

struct RegistrationOptions {
  std::size_t window = 4;
  std::size_t max_iters = 50;
  double rot_tol = 0.01;    // degrees
  double trans_tol = 1e-4;  // length
  bool pairwise_init = false;
  bool icp_fallback = false;
  bool scene_adjust = true;
  MatchGates gates{};
  std::size_t lookback = 2;
  TranslationRule translation_rule = TranslationRule::kLeastSquares;
  double fallback_rejection = 0.7;

  /// Throws kInvalidArgument on out-of-range fields.
  void validate() const;
};

/// Plane of one row of the correspondence table.
struct RowPlane {
  std::size_t row = 0;
  PlaneModel model;
};

/// Working state of one window: absolute per-view transforms and the table
/// whose cells hold plane models already mapped by those transforms.
struct SubsetState {
  std::vector<std::size_t> window;
  std::vector<RigidTransform> transforms;
  CorrespondenceTable table;
};

/// Global per-plane history, grown append-only.
class SceneStructure {
 public:
  struct Entry {
    Point3 centroid;
    UnitVector3 normal;
    std::size_t view_index = 0;
  };

  std::size_t rows() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::vector<Entry>& row(std::size_t r) const { return rows_.at(r); }
  /// Mean centroid and renormalized mean normal of a row.
  PlaneModel row_model(std::size_t r) const;
  std::vector<PlaneModel> row_models() const;

  std::size_t add_row();
  /// Throws kInvalidArgument unless view_index exceeds the row's last view.
  void append(std::size_t r, const PlaneModel& plane, std::size_t view_index);
  void transform(const RigidTransform& t);

 private:
  std::vector<std::vector<Entry>> rows_;
};

struct ViewRegistration {
  RigidTransform transform;
  bool rank_deficient = false;
};

struct WindowReport {
  std::vector<std::size_t> window;
  ErrorPair initial;
  std::vector<ErrorPair> trace;  // one entry per sweep
  bool converged = false;
  bool rank_deficient = false;
  bool fallback_icp_used = false;
};

struct RegistrationReport {
  std::vector<WindowReport> windows;
  std::vector<RigidTransform> transforms;  // view frame -> common frame, view 0 is identity
  bool converged = true;
  bool fallback_icp_used = false;
  bool rank_deficient = false;

  /// All sweep errors of all windows, in order.
  std::vector<ErrorPair> errors() const;
};

/// Mean plane of every row seen by at least one column other than
/// exclude_column. Throws kEmptyScene when no row qualifies.
std::vector<RowPlane> scene_model(const CorrespondenceTable& table, std::size_t exclude_column);

/// Rotation from paired normals, then translation from the rotated centroids
/// against the scene planes. Throws kEmptyInput / kLengthMismatch.
ViewRegistration register_view_to_scene(std::span<const PlaneModel> data, std::span<const PlaneModel> scene,
                                        TranslationRule rule = TranslationRule::kLeastSquares);

ErrorPair registration_error(const CorrespondenceTable& table);

/// Marker clouds of one view in its own frame, used by the ICP fallback.
using ViewClouds = std::span<const PointCloud>;

/// Sweeps every view of the window against the mean of the others until both
/// error deltas drop below tolerance. A later sweep that raises either error
/// is rolled back and also counts as convergence. clouds is either empty or holds one
/// cloud per window view (needed only for icp_fallback).
WindowReport multiview_register_window(SubsetState& state, const RegistrationOptions& opts,
                                       ViewClouds clouds = {});

/// Pre-propagates first_delta to views before the window and post-propagates
/// last_delta to views after it. Either may be skipped.
void propagate(std::vector<RigidTransform>& transforms, std::size_t window_begin, std::size_t window_end,
               const RigidTransform& first_delta, const RigidTransform& last_delta, bool pre, bool post);

/// Registers the window's mean plane models onto the structure's row means.
/// Returns identity when the structure is empty or nothing matches.
ViewRegistration scene_adjust(const SceneStructure& structure, const SubsetState& state,
                              const MatchGates& gates, TranslationRule rule = TranslationRule::kLeastSquares);

/// Appends the planes of one table column to matching rows; the rest open new rows.
void commit_to_structure(SceneStructure& structure, const CorrespondenceTable& table, std::size_t column,
                         const MatchGates& gates);

/// views[i].planes are in view i's own frame. clouds is empty or one merged
/// marker cloud per view.
RegistrationReport register_sequence(const std::vector<ViewPlanes>& views, const RegistrationOptions& opts,
                                     std::span<const PointCloud> clouds = {});

/// Maps every view by its transform and concatenates. Throws kLengthMismatch.
PointCloud transform_object(std::span<const PointCloud> object_views, std::span<const RigidTransform> transforms);

}  // namespace mumar
