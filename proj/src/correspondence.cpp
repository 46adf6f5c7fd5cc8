#include "mumar/correspondence.hpp"

#include <algorithm>
#include <string>

#include "mumar/error.hpp"

namespace mumar {

std::vector<PlanePair> match_planes(const std::vector<PlaneModel>& a, const std::vector<PlaneModel>& b,
                                    const MatchGates& gates) {
  if (!(gates.max_normal_angle > 0.0) || !(gates.max_centroid_dist > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "match gates must be positive");
  }
  std::vector<PlanePair> candidates;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double angle = angle_between(a[i].normal, b[j].normal);
      const double dist = (a[i].centroid - b[j].centroid).norm();
      if (angle > gates.max_normal_angle || dist > gates.max_centroid_dist) continue;
      candidates.push_back({i, j, angle / gates.max_normal_angle + dist / gates.max_centroid_dist});
    }
  }
  // Lowest cost first; the tie-break is symmetric in (a, b) so swapping the
  // inputs yields the mirrored pairing.
  std::sort(candidates.begin(), candidates.end(), [](const PlanePair& x, const PlanePair& y) {
    if (x.cost != y.cost) return x.cost < y.cost;
    const auto kx = std::minmax(x.a, x.b);
    const auto ky = std::minmax(y.a, y.b);
    if (kx != ky) return kx < ky;
    return x.a < y.a;
  });

  std::vector<bool> used_a(a.size(), false);
  std::vector<bool> used_b(b.size(), false);
  std::vector<PlanePair> pairs;
  for (const auto& c : candidates) {
    if (used_a[c.a] || used_b[c.b]) continue;
    used_a[c.a] = used_b[c.b] = true;
    pairs.push_back(c);
  }
  std::sort(pairs.begin(), pairs.end(), [](const PlanePair& x, const PlanePair& y) { return x.a < y.a; });
  return pairs;
}

std::vector<PlanePair> match_planes(const ViewPlanes& a, const ViewPlanes& b, const MatchGates& gates) {
  return match_planes(a.planes, b.planes, gates);
}

CorrespondenceTable::CorrespondenceTable(std::vector<std::size_t> view_indices)
    : view_indices_(std::move(view_indices)) {
  for (std::size_t i = 0; i < view_indices_.size(); ++i) {
    for (std::size_t j = i + 1; j < view_indices_.size(); ++j) {
      if (view_indices_[i] == view_indices_[j]) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate view index in correspondence table");
      }
    }
  }
}

std::size_t CorrespondenceTable::column_of(std::size_t view_index) const {
  const auto it = std::find(view_indices_.begin(), view_indices_.end(), view_index);
  if (it == view_indices_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "view " + std::to_string(view_index) + " not in table");
  }
  return static_cast<std::size_t>(it - view_indices_.begin());
}

std::optional<std::size_t> CorrespondenceTable::row_of(std::size_t column, std::size_t plane_index) const {
  for (std::size_t r = 0; r < cells_.size(); ++r) {
    const auto& c = cells_[r][column];
    if (c && c->plane_index == plane_index) return r;
  }
  return std::nullopt;
}

std::size_t CorrespondenceTable::count_in_row(std::size_t row) const {
  const auto& r = cells_.at(row);
  return static_cast<std::size_t>(std::count_if(r.begin(), r.end(), [](const auto& c) { return c.has_value(); }));
}

std::size_t CorrespondenceTable::add_row() {
  cells_.emplace_back(view_indices_.size());
  return cells_.size() - 1;
}

void CorrespondenceTable::set(std::size_t row, std::size_t column, std::size_t plane_index,
                              const PlaneModel& model) {
  if (const auto existing = row_of(column, plane_index); existing && *existing != row) {
    throw Error(ErrorCode::kInvalidArgument, "plane already assigned to another row");
  }
  cells_.at(row).at(column) = Cell{plane_index, model};
}

void CorrespondenceTable::transform_column(std::size_t column, const RigidTransform& t) {
  for (auto& row : cells_) {
    if (auto& c = row.at(column)) c->model = t.apply(c->model);
  }
}

CorrespondenceTable build_table(const std::vector<ViewPlanes>& views, const MatchGates& gates,
                                std::size_t lookback) {
  if (views.empty()) throw Error(ErrorCode::kEmptyInput, "no views to correlate");
  std::vector<std::size_t> ids;
  for (const auto& v : views) ids.push_back(v.view_index);
  CorrespondenceTable table(ids);

  for (std::size_t p = 0; p < views[0].planes.size(); ++p) {
    table.set(table.add_row(), 0, p, views[0].planes[p]);
  }

  for (std::size_t col = 1; col < views.size(); ++col) {
    const auto& current = views[col].planes;
    const std::size_t first = col > lookback ? col - lookback : 0;

    struct Candidate {
      std::size_t column;
      std::vector<PlanePair> pairs;
    };
    std::vector<Candidate> candidates;
    for (std::size_t prev = col; prev-- > first;) {  // most recent first
      candidates.push_back({prev, match_planes(views[prev].planes, current, gates)});
    }
    // Stable sort keeps the most recent view ahead on ties.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& x, const Candidate& y) { return x.pairs.size() > y.pairs.size(); });

    std::vector<bool> placed(current.size(), false);
    for (const auto& cand : candidates) {
      for (const auto& pair : cand.pairs) {
        if (placed[pair.b]) continue;
        const auto row = table.row_of(cand.column, pair.a);
        if (!row || table.has(*row, col)) continue;
        table.set(*row, col, pair.b, current[pair.b]);
        placed[pair.b] = true;
      }
    }
    for (std::size_t p = 0; p < current.size(); ++p) {
      if (!placed[p]) table.set(table.add_row(), col, p, current[p]);
    }
  }
  return table;
}

}  // namespace mumar
