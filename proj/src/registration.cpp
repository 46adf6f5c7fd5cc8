#include "mumar/registration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mumar/error.hpp"
#include "mumar/icp.hpp"

namespace mumar {

void RegistrationOptions::validate() const {
  if (window < 2) throw Error(ErrorCode::kInvalidArgument, "window must be >= 2");
  if (max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  if (!(rot_tol > 0.0) || !(trans_tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerances must be > 0");
  if (lookback < 1) throw Error(ErrorCode::kInvalidArgument, "lookback must be >= 1");
  if (!(fallback_rejection >= 0.0 && fallback_rejection < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fallback_rejection must lie in [0, 1)");
  }
}

namespace {

struct MeanAccumulator {
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  std::size_t count = 0;

  void add(const PlaneModel& p) {
    normal += p.normal.vec();
    centroid += p.centroid;
    ++count;
  }

  std::optional<PlaneModel> model() const {
    if (count == 0 || normal.norm() < 1e-12) return std::nullopt;
    return PlaneModel{UnitVector3::normalize(normal), centroid / static_cast<double>(count)};
  }
};

std::optional<PlaneModel> mean_excluding(const CorrespondenceTable& table, std::size_t row, std::size_t exclude) {
  MeanAccumulator acc;
  for (std::size_t c = 0; c < table.columns(); ++c) {
    if (c == exclude) continue;
    if (const auto& cell = table.cell(row, c)) acc.add(cell->model);
  }
  return acc.model();
}

Eigen::Vector3d solve_translation(std::span<const PlaneModel> data, std::span<const PlaneModel> scene,
                                  const Eigen::Matrix3d& rotation, TranslationRule rule) {
  if (rule == TranslationRule::kProjectionMean) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Point3 c = rotation * data[i].centroid;
      sum += project_onto_plane(c, scene[i]) - c;
    }
    return sum / static_cast<double>(data.size());
  }
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::Vector3d& n = scene[i].normal.vec();
    const Point3 c = rotation * data[i].centroid;
    a += n * n.transpose();
    b += n * n.dot(scene[i].centroid - c);
  }
  // Pseudo-inverse: directions no plane constrains get no translation.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
  const Eigen::Vector3d lambda = eig.eigenvalues();
  const double cutoff = 1e-9 * std::max(lambda(2), 1e-300);
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  for (int k = 0; k < 3; ++k) {
    if (lambda(k) > cutoff) {
      const Eigen::Vector3d v = eig.eigenvectors().col(k);
      t += v * (v.dot(b) / lambda(k));
    }
  }
  return t;
}

ErrorPair sub(const ErrorPair& a, const ErrorPair& b) {
  return {std::abs(a.rotation - b.rotation), std::abs(a.translation - b.translation)};
}

}  // namespace

PlaneModel SceneStructure::row_model(std::size_t r) const {
  MeanAccumulator acc;
  for (const auto& e : rows_.at(r)) acc.add(PlaneModel{e.normal, e.centroid});
  const auto m = acc.model();
  if (!m) throw Error(ErrorCode::kEmptyScene, "structure row " + std::to_string(r) + " has no usable mean");
  return *m;
}

std::vector<PlaneModel> SceneStructure::row_models() const {
  std::vector<PlaneModel> out;
  out.reserve(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) out.push_back(row_model(r));
  return out;
}

std::size_t SceneStructure::add_row() {
  rows_.emplace_back();
  return rows_.size() - 1;
}

void SceneStructure::append(std::size_t r, const PlaneModel& plane, std::size_t view_index) {
  auto& row = rows_.at(r);
  if (!row.empty() && row.back().view_index >= view_index) {
    throw Error(ErrorCode::kInvalidArgument, "structure rows must grow with increasing view index");
  }
  row.push_back({plane.centroid, plane.normal, view_index});
}

void SceneStructure::transform(const RigidTransform& t) {
  for (auto& row : rows_) {
    for (auto& e : row) {
      e.centroid = t.apply(e.centroid);
      e.normal = t.rotate(e.normal);
    }
  }
}

std::vector<ErrorPair> RegistrationReport::errors() const {
  std::vector<ErrorPair> out;
  for (const auto& w : windows) out.insert(out.end(), w.trace.begin(), w.trace.end());
  return out;
}

std::vector<RowPlane> scene_model(const CorrespondenceTable& table, std::size_t exclude_column) {
  if (exclude_column >= table.columns()) {
    throw Error(ErrorCode::kInvalidArgument, "excluded column outside the table");
  }
  std::vector<RowPlane> out;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (const auto m = mean_excluding(table, r, exclude_column)) out.push_back({r, *m});
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyScene, "no plane visible outside the excluded view");
  return out;
}

ViewRegistration register_view_to_scene(std::span<const PlaneModel> data, std::span<const PlaneModel> scene,
                                        TranslationRule rule) {
  if (data.size() != scene.size()) throw Error(ErrorCode::kLengthMismatch, "data and scene differ in length");
  if (data.empty()) throw Error(ErrorCode::kEmptyInput, "no plane pairs to register");

  std::vector<UnitVector3> dn, sn;
  dn.reserve(data.size());
  sn.reserve(scene.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    dn.push_back(data[i].normal);
    sn.push_back(scene[i].normal);
  }
  const RotationEstimate rot = rotation_from_normals(dn, sn);
  const Eigen::Matrix3d& r = rot.transform.rotation();
  return {RigidTransform(r, solve_translation(data, scene, r, rule)), rot.rank_deficient};
}

ErrorPair registration_error(const CorrespondenceTable& table) {
  ErrorPair e;
  if (table.columns() == 0) return e;
  for (std::size_t c = 0; c < table.columns(); ++c) {
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const auto& cell = table.cell(r, c);
      if (!cell) continue;
      const auto mean = mean_excluding(table, r, c);
      if (!mean) continue;
      e.rotation += angle_between(cell->model.normal, mean->normal);
      e.translation += std::abs(mean->signed_distance(cell->model.centroid));
    }
  }
  const double n = static_cast<double>(table.columns());
  e.rotation /= n;
  e.translation /= n;
  return e;
}

namespace {

struct Pairs {
  std::vector<PlaneModel> data;
  std::vector<PlaneModel> scene;
};

Pairs pairs_against_column(const CorrespondenceTable& table, std::size_t data_col, std::size_t scene_col) {
  Pairs p;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto& d = table.cell(r, data_col);
    const auto& s = table.cell(r, scene_col);
    if (d && s) {
      p.data.push_back(d->model);
      p.scene.push_back(s->model);
    }
  }
  return p;
}

Pairs pairs_against_scene(const CorrespondenceTable& table, std::size_t data_col) {
  Pairs p;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto& d = table.cell(r, data_col);
    if (!d) continue;
    if (const auto s = mean_excluding(table, r, data_col)) {
      p.data.push_back(d->model);
      p.scene.push_back(*s);
    }
  }
  return p;
}

void apply_to_view(SubsetState& state, std::size_t col, const RigidTransform& t) {
  state.table.transform_column(col, t);
  state.transforms[col] = t * state.transforms[col];
}

RigidTransform icp_refine(const SubsetState& state, std::size_t col, ViewClouds clouds, double rejection) {
  PointCloud scene;
  for (std::size_t c = 0; c < clouds.size(); ++c) {
    if (c != col) scene.append(apply_transform(state.transforms[c], clouds[c]));
  }
  const PointCloud data = apply_transform(state.transforms[col], clouds[col]);
  IcpOptions opts;
  opts.rejection_fraction = rejection;
  return icp_point_to_plane(data, scene, opts).transform;
}

}  // namespace

WindowReport multiview_register_window(SubsetState& state, const RegistrationOptions& opts, ViewClouds clouds) {
  opts.validate();
  const std::size_t n = state.table.columns();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "a window needs at least two views");
  if (state.transforms.size() != n) throw Error(ErrorCode::kLengthMismatch, "one transform per window view expected");
  if (!clouds.empty() && clouds.size() != n) throw Error(ErrorCode::kLengthMismatch, "one cloud per window view expected");

  WindowReport report;
  report.window = state.window;
  report.initial = registration_error(state.table);

  if (opts.pairwise_init) {
    for (std::size_t c = 1; c < n; ++c) {
      const Pairs p = pairs_against_column(state.table, c, c - 1);
      if (p.data.empty()) continue;
      apply_to_view(state, c, register_view_to_scene(p.data, p.scene, opts.translation_rule).transform);
    }
  }

  ErrorPair previous = report.initial;
  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    const SubsetState before = state;
    for (std::size_t c = 0; c < n; ++c) {
      const Pairs p = pairs_against_scene(state.table, c);
      if (p.data.empty()) continue;
      const ViewRegistration reg = register_view_to_scene(p.data, p.scene, opts.translation_rule);
      apply_to_view(state, c, reg.transform);
      if (reg.rank_deficient) {
        report.rank_deficient = true;
        if (opts.icp_fallback && !clouds.empty()) {
          apply_to_view(state, c, icp_refine(state, c, clouds, opts.fallback_rejection));
          report.fallback_icp_used = true;
        }
      }
    }
    const ErrorPair current = registration_error(state.table);
    // A sweep that makes either error worse is undone and ends the window.
    if (iter > 0 && (current.rotation > previous.rotation || current.translation > previous.translation)) {
      state = before;
      report.converged = true;
      break;
    }
    report.trace.push_back(current);
    const ErrorPair delta = sub(previous, current);
    previous = current;
    if (delta.rotation < opts.rot_tol && delta.translation < opts.trans_tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

void propagate(std::vector<RigidTransform>& transforms, std::size_t window_begin, std::size_t window_end,
               const RigidTransform& first_delta, const RigidTransform& last_delta, bool pre, bool post) {
  if (window_begin > window_end || window_end > transforms.size()) {
    throw Error(ErrorCode::kInvalidArgument, "window outside the transform list");
  }
  if (pre) {
    for (std::size_t v = 0; v < window_begin; ++v) transforms[v] = first_delta * transforms[v];
  }
  if (post) {
    for (std::size_t v = window_end; v < transforms.size(); ++v) transforms[v] = last_delta * transforms[v];
  }
}

namespace {

std::vector<PlaneModel> window_means(const CorrespondenceTable& table, std::vector<std::size_t>& rows) {
  std::vector<PlaneModel> out;
  rows.clear();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    MeanAccumulator acc;
    for (std::size_t c = 0; c < table.columns(); ++c) {
      if (const auto& cell = table.cell(r, c)) acc.add(cell->model);
    }
    if (const auto m = acc.model()) {
      out.push_back(*m);
      rows.push_back(r);
    }
  }
  return out;
}

}  // namespace

ViewRegistration scene_adjust(const SceneStructure& structure, const SubsetState& state, const MatchGates& gates,
                              TranslationRule rule) {
  if (structure.empty()) return {};
  std::vector<std::size_t> rows;
  const std::vector<PlaneModel> data = window_means(state.table, rows);
  const std::vector<PlaneModel> scene = structure.row_models();
  const auto pairs = match_planes(data, scene, gates);
  if (pairs.empty()) return {};
  std::vector<PlaneModel> d, s;
  for (const auto& p : pairs) {
    d.push_back(data[p.a]);
    s.push_back(scene[p.b]);
  }
  return register_view_to_scene(d, s, rule);
}

void commit_to_structure(SceneStructure& structure, const CorrespondenceTable& table, std::size_t column,
                         const MatchGates& gates) {
  std::vector<PlaneModel> planes;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (const auto& cell = table.cell(r, column)) planes.push_back(cell->model);
  }
  const std::size_t view = table.view_index(column);
  std::vector<bool> placed(planes.size(), false);
  if (!structure.empty()) {
    for (const auto& p : match_planes(planes, structure.row_models(), gates)) {
      structure.append(p.b, planes[p.a], view);
      placed[p.a] = true;
    }
  }
  for (std::size_t i = 0; i < planes.size(); ++i) {
    if (!placed[i]) structure.append(structure.add_row(), planes[i], view);
  }
}

RegistrationReport register_sequence(const std::vector<ViewPlanes>& views, const RegistrationOptions& opts,
                                     std::span<const PointCloud> clouds) {
  opts.validate();
  const std::size_t n_views = views.size();
  if (n_views < 2) throw Error(ErrorCode::kInvalidArgument, "registration needs at least two views");
  if (!clouds.empty() && clouds.size() != n_views) {
    throw Error(ErrorCode::kLengthMismatch, "one marker cloud per view expected");
  }
  const std::size_t w = std::min(opts.window, n_views);

  RegistrationReport report;
  std::vector<RigidTransform> transforms(n_views);
  SceneStructure structure;

  for (std::size_t begin = 0; begin + w <= n_views; ++begin) {
    const std::size_t end = begin + w;
    SubsetState state;
    std::vector<ViewPlanes> current;
    for (std::size_t v = begin; v < end; ++v) {
      state.window.push_back(v);
      state.transforms.push_back(transforms[v]);
      ViewPlanes vp{views[v].view_index, {}};
      for (const auto& p : views[v].planes) vp.planes.push_back(transforms[v].apply(p));
      current.push_back(std::move(vp));
    }
    state.table = build_table(current, opts.gates, opts.lookback);

    const ViewClouds window_clouds = clouds.empty() ? ViewClouds{} : clouds.subspan(begin, w);
    WindowReport wr = multiview_register_window(state, opts, window_clouds);

    const RigidTransform first_delta = state.transforms.front() * transforms[begin].inverse();
    const RigidTransform last_delta = state.transforms.back() * transforms[end - 1].inverse();
    propagate(transforms, begin, end, first_delta, last_delta, begin > 0, end < n_views);
    if (begin > 0) structure.transform(first_delta);
    for (std::size_t j = 0; j < w; ++j) transforms[begin + j] = state.transforms[j];

    if (opts.scene_adjust && !structure.empty()) {
      const ViewRegistration adjust = scene_adjust(structure, state, opts.gates, opts.translation_rule);
      for (std::size_t v = begin; v < n_views; ++v) transforms[v] = adjust.transform * transforms[v];
      for (std::size_t j = 0; j < w; ++j) {
        state.table.transform_column(j, adjust.transform);
        state.transforms[j] = transforms[begin + j];
      }
      wr.rank_deficient = wr.rank_deficient || adjust.rank_deficient;
    }

    commit_to_structure(structure, state.table, 0, opts.gates);
    if (end == n_views) {
      for (std::size_t j = 1; j < w; ++j) commit_to_structure(structure, state.table, j, opts.gates);
    }

    report.converged = report.converged && wr.converged;
    report.fallback_icp_used = report.fallback_icp_used || wr.fallback_icp_used;
    report.rank_deficient = report.rank_deficient || wr.rank_deficient;
    report.windows.push_back(std::move(wr));
  }

  const RigidTransform anchor = transforms.front().inverse();
  for (auto& t : transforms) t = anchor * t;
  report.transforms = std::move(transforms);
  return report;
}

PointCloud transform_object(std::span<const PointCloud> object_views, std::span<const RigidTransform> transforms) {
  if (object_views.size() != transforms.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one transform per object view expected");
  }
  PointCloud merged;
  for (std::size_t i = 0; i < object_views.size(); ++i) {
    merged.append(apply_transform(transforms[i], object_views[i]));
  }
  return merged;
}

}  // namespace mumar
