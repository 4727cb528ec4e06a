#ifndef DPCD_PATCHES_H_
#define DPCD_PATCHES_H_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dpcd/frame.h"

namespace dpcd {

// A center point followed by its K nearest neighbors, nearest first.
struct Patch {
  Index center_index = 0;
  std::vector<Index> member_indices;

  Index size() const { return static_cast<Index>(member_indices.size()); }
};

// The patch decomposition of one frame. Patch l occupies rows
// [l*(K+1), (l+1)*(K+1)) of the stacked patch-row space; member r of patch l
// is row l*(K+1)+r. This indexing stands in for the sampling matrix.
struct PatchSet {
  Index k = 0;
  std::vector<Patch> patches;

  Index patch_count() const { return static_cast<Index>(patches.size()); }
  Index patch_size() const { return k + 1; }
  Index row_count() const { return patch_count() * patch_size(); }
  Index row(Index patch, Index slot) const { return patch * patch_size() + slot; }
  Index point_of_row(Index row) const {
    return patches[row / patch_size()].member_indices[row % patch_size()];
  }

  // M x 3 center positions.
  Points centers(const Points& positions) const;
  // Stacked relative coordinates, (K+1)M x 3.
  Eigen::MatrixXd stacked_relative(const Points& positions) const;
  // Stacked relative coordinates with externally frozen centers.
  Eigen::MatrixXd stacked_relative(const Points& positions,
                                   const Points& centers) const;
};

// Centers from farthest point sampling, members from k-NN around each center.
PatchSet build_patches(const Frame& frame, Index m, Index k, std::uint64_t seed);

// Patch count for the "ratio * N" rule, at least 1 and at most N.
Index patch_count_for(Index n, double ratio);

// Row r = position(member r) - position(center).
Eigen::MatrixXd relative_coords(const Patch& patch, const Points& positions);

// c times the mean nearest-neighbor distance among the patch's points.
double patch_epsilon(const Patch& patch, const Points& positions, double c);

}  // namespace dpcd

#endif  // DPCD_PATCHES_H_
