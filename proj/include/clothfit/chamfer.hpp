#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clothfit/types.hpp"

namespace clothfit {

// Exact nearest neighbor by linear scan; ties resolved to the lowest index.
// Returns (index, squared distance). Throws ValidationError on empty targets.
std::pair<int, Real> nearest_neighbor_sq(const Vec3& query, const Mat3X& targets);

// Uniform hash grid over the target points. Queries are exact: a probe around
// the query seeds the best distance, then every occupied cell whose box could
// hold a closer point is scanned. Exact distance ties resolve to the lowest
// point index, which keeps results interchangeable with the linear scan.
class SpatialHashGrid {
 public:
  explicit SpatialHashGrid(const Mat3X& points);

  std::pair<int, Real> nearest(const Vec3& query) const;
  Real cell_size() const { return cell_; }

 private:
  std::uint64_t key(int ix, int iy, int iz) const;
  Mat3X points_;
  Vec3 origin_;
  Real cell_ = 1;
  int max_cell_[3] = {0, 0, 0};
  std::unordered_map<std::uint64_t, int> cell_of_key_;
  std::vector<std::array<int, 3>> cell_coords_;  // one entry per occupied cell
  std::vector<int> cell_start_;                  // CSR offsets into point_ids_
  std::vector<int> point_ids_;                   // point indices grouped by cell
};

struct LossReport {
  Real value = 0;
  std::vector<int> argmins;  // for each first-cloud point, its target index
  int frame_index = -1;
};

// Mean over `sim` of squared distance to the nearest `real` point. `real` is
// treated as constant data.
LossReport unidirectional_chamfer(const Mat3X& sim, const Mat3X& real, int frame_index = -1);

// Sum of the two directed mean terms; symmetric in its arguments.
Real bidirectional_chamfer(const Mat3X& a, const Mat3X& b);

// d(loss)/d(sim point i) = 2 (sim_i - real[argmin_i]) / N with the matches
// held fixed. Throws ValidationError when the report is stale (size or index
// mismatch against the clouds).
Mat3X chamfer_point_gradients(const LossReport& report, const Mat3X& sim, const Mat3X& real);

}  // namespace clothfit
