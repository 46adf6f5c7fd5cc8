#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mumar/geometry.hpp"

namespace mumar {

/// All plane models seen in one view, every marker concatenated.
struct ViewPlanes {
  std::size_t view_index = 0;
  std::vector<PlaneModel> planes;
};

/// Hard gates for plane similarity; the combined cost is
/// angle / max_normal_angle + centroid distance / max_centroid_dist.
struct MatchGates {
  double max_normal_angle = 20.0;  // degrees
  double max_centroid_dist = 0.3;  // scene length units
};

struct PlanePair {
  std::size_t a = 0;
  std::size_t b = 0;
  double cost = 0.0;
};

/// Greedy mutual-nearest matching: pairs are accepted in increasing cost so
/// each accepted pair is mutually nearest among the still-unmatched planes.
/// Each plane is used at most once; pairs outside either gate never match.
std::vector<PlanePair> match_planes(const std::vector<PlaneModel>& a, const std::vector<PlaneModel>& b,
                                    const MatchGates& gates);
std::vector<PlanePair> match_planes(const ViewPlanes& a, const ViewPlanes& b, const MatchGates& gates);

/// Planes x views grid. Columns follow the order the views were added; each
/// cell optionally holds (index of the plane inside its view, plane model).
class CorrespondenceTable {
 public:
  struct Cell {
    std::size_t plane_index = 0;
    PlaneModel model;
  };

  CorrespondenceTable() = default;
  explicit CorrespondenceTable(std::vector<std::size_t> view_indices);

  std::size_t rows() const { return cells_.size(); }
  std::size_t columns() const { return view_indices_.size(); }
  std::size_t view_index(std::size_t column) const { return view_indices_.at(column); }
  /// Column holding view_index; throws kInvalidArgument if absent.
  std::size_t column_of(std::size_t view_index) const;

  const std::optional<Cell>& cell(std::size_t row, std::size_t column) const {
    return cells_.at(row).at(column);
  }
  bool has(std::size_t row, std::size_t column) const { return cell(row, column).has_value(); }
  /// Row holding plane plane_index of the given column, if any.
  std::optional<std::size_t> row_of(std::size_t column, std::size_t plane_index) const;
  std::size_t count_in_row(std::size_t row) const;

  std::size_t add_row();
  /// Throws kInvalidArgument if the column already references the plane in another row.
  void set(std::size_t row, std::size_t column, std::size_t plane_index, const PlaneModel& model);
  /// Moves every model of the column by t.
  void transform_column(std::size_t column, const RigidTransform& t);

 private:
  std::vector<std::size_t> view_indices_;
  std::vector<std::vector<std::optional<Cell>>> cells_;
};

/// Builds the table view by view. Each view is matched against up to
/// `lookback` preceding views and linked through the one sharing the most
/// planes (ties go to the most recent); planes still unmatched are tried
/// against the remaining lookback views, and anything left opens a new row.
CorrespondenceTable build_table(const std::vector<ViewPlanes>& views, const MatchGates& gates,
                                std::size_t lookback = 2);

}  // namespace mumar
