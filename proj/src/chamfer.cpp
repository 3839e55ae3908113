#include "clothfit/chamfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clothfit {

std::pair<int, Real> nearest_neighbor_sq(const Vec3& query, const Mat3X& targets) {
  if (targets.cols() == 0) throw ValidationError("nearest_neighbor_sq: empty target set");
  int best = 0;
  Real best_sq = (targets.col(0) - query).squaredNorm();
  for (Eigen::Index i = 1; i < targets.cols(); ++i) {
    const Real d2 = (targets.col(i) - query).squaredNorm();
    if (d2 < best_sq) {
      best_sq = d2;
      best = static_cast<int>(i);
    }
  }
  return {best, best_sq};
}

namespace {

// Median 1-NN distance over a strided subsample; sets the grid resolution so a
// typical query terminates after one or two rings.
Real estimate_cell_size(const Mat3X& points) {
  const Eigen::Index n = points.cols();
  if (n < 2) return 1.0;
  const Eigen::Index stride = std::max<Eigen::Index>(1, n / 256);
  std::vector<Real> dists;
  for (Eigen::Index i = 0; i < n; i += stride) {
    Real best = std::numeric_limits<Real>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, (points.col(j) - points.col(i)).squaredNorm());
    }
    dists.push_back(best);
  }
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  Real cell = std::sqrt(dists[dists.size() / 2]);
  const Vec3 extent = points.rowwise().maxCoeff() - points.rowwise().minCoeff();
  const Real max_extent = extent.maxCoeff();
  if (!(cell > 0) || !std::isfinite(cell)) cell = max_extent > 0 ? max_extent / 16 : 1.0;
  // Keep per-axis cell counts inside the 21-bit key budget.
  cell = std::max(cell, max_extent / Real(1 << 20));
  return cell;
}

}  // namespace

SpatialHashGrid::SpatialHashGrid(const Mat3X& points) : points_(points) {
  if (points_.cols() == 0) throw ValidationError("SpatialHashGrid: empty point set");
  origin_ = points_.rowwise().minCoeff();
  cell_ = estimate_cell_size(points_);

  const Eigen::Index n = points_.cols();
  std::vector<int> cell_id(n);
  std::vector<int> count;
  for (Eigen::Index i = 0; i < n; ++i) {
    int c[3];
    for (int k = 0; k < 3; ++k) {
      c[k] = static_cast<int>(std::floor((points_(k, i) - origin_[k]) / cell_));
      max_cell_[k] = std::max(max_cell_[k], c[k]);
    }
    const auto [it, fresh] =
        cell_of_key_.try_emplace(key(c[0], c[1], c[2]), int(cell_coords_.size()));
    if (fresh) {
      cell_coords_.push_back({c[0], c[1], c[2]});
      count.push_back(0);
    }
    cell_id[i] = it->second;
    ++count[it->second];
  }

  cell_start_.assign(cell_coords_.size() + 1, 0);
  for (size_t c = 0; c < count.size(); ++c) cell_start_[c + 1] = cell_start_[c] + count[c];
  point_ids_.resize(n);
  std::vector<int> cursor(cell_start_.begin(), cell_start_.end() - 1);
  for (Eigen::Index i = 0; i < n; ++i) point_ids_[cursor[cell_id[i]]++] = static_cast<int>(i);
}

std::uint64_t SpatialHashGrid::key(int ix, int iy, int iz) const {
  return (static_cast<std::uint64_t>(ix) << 42) | (static_cast<std::uint64_t>(iy) << 21) |
         static_cast<std::uint64_t>(iz);
}

std::pair<int, Real> SpatialHashGrid::nearest(const Vec3& query) const {
  int center[3];
  for (int k = 0; k < 3; ++k) {
    const int c = static_cast<int>(std::floor((query[k] - origin_[k]) / cell_));
    center[k] = std::clamp(c, 0, max_cell_[k]);
  }

  int best = -1;
  Real best_sq = std::numeric_limits<Real>::infinity();
  const auto scan_cell = [&](int c) {
    for (int p = cell_start_[c]; p < cell_start_[c + 1]; ++p) {
      const int idx = point_ids_[p];
      const Real d2 = (points_.col(idx) - query).squaredNorm();
      if (d2 < best_sq || (d2 == best_sq && idx < best)) {
        best_sq = d2;
        best = idx;
      }
    }
  };

  // Seed with the block around the query so the box prune below bites early.
  for (int ix = center[0] - 1; ix <= center[0] + 1; ++ix)
    for (int iy = center[1] - 1; iy <= center[1] + 1; ++iy)
      for (int iz = center[2] - 1; iz <= center[2] + 1; ++iz) {
        const auto it = cell_of_key_.find(key(ix, iy, iz));
        if (it != cell_of_key_.end()) scan_cell(it->second);
      }

  // Cells outside the probed block sit at least one full cell away, so a seed
  // hit strictly inside cell_ distance cannot be beaten or tied.
  if (best_sq < cell_ * cell_) return {best, best_sq};

  // Exactness: any cell whose box lower bound beats the current best is
  // scanned; ties keep equal-bound cells so the lowest index wins.
  for (size_t c = 0; c < cell_coords_.size(); ++c) {
    Real lb = 0;
    for (int k = 0; k < 3; ++k) {
      const Real lo = origin_[k] + cell_ * cell_coords_[c][k];
      const Real gap = std::max({lo - query[k], query[k] - (lo + cell_), Real(0)});
      lb += gap * gap;
    }
    if (lb <= best_sq) scan_cell(int(c));
  }
  return {best, best_sq};
}

LossReport unidirectional_chamfer(const Mat3X& sim, const Mat3X& real, int frame_index) {
  if (sim.cols() == 0) throw ValidationError("unidirectional_chamfer: empty query cloud");
  const SpatialHashGrid grid(real);
  LossReport report;
  report.frame_index = frame_index;
  report.argmins.resize(sim.cols());
  Real sum = 0;
  for (Eigen::Index i = 0; i < sim.cols(); ++i) {
    const auto [idx, d2] = grid.nearest(sim.col(i));
    report.argmins[i] = idx;
    sum += d2;
  }
  report.value = sum / Real(sim.cols());
  return report;
}

Real bidirectional_chamfer(const Mat3X& a, const Mat3X& b) {
  return unidirectional_chamfer(a, b).value + unidirectional_chamfer(b, a).value;
}

Mat3X chamfer_point_gradients(const LossReport& report, const Mat3X& sim, const Mat3X& real) {
  if (static_cast<Eigen::Index>(report.argmins.size()) != sim.cols())
    throw ValidationError("chamfer_point_gradients: report does not match query cloud");
  Mat3X grads(3, sim.cols());
  const Real scale = 2.0 / Real(sim.cols());
  for (Eigen::Index i = 0; i < sim.cols(); ++i) {
    const int m = report.argmins[i];
    if (m < 0 || m >= real.cols())
      throw ValidationError("chamfer_point_gradients: report does not match target cloud");
    grads.col(i) = scale * (sim.col(i) - real.col(m));
  }
  return grads;
}

}  // namespace clothfit
