#include "dpcd/patches.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpcd/geometry.h"

namespace dpcd {

Points PatchSet::centers(const Points& positions) const {
  Points c(patch_count(), 3);
  for (Index l = 0; l < patch_count(); ++l) {
    c.row(l) = positions.row(patches[l].center_index);
  }
  return c;
}

Eigen::MatrixXd PatchSet::stacked_relative(const Points& positions) const {
  return stacked_relative(positions, centers(positions));
}

Eigen::MatrixXd PatchSet::stacked_relative(const Points& positions,
                                           const Points& centers) const {
  Eigen::MatrixXd p(row_count(), 3);
  for (Index l = 0; l < patch_count(); ++l) {
    for (Index r = 0; r < patch_size(); ++r) {
      p.row(row(l, r)) =
          positions.row(patches[l].member_indices[r]) - centers.row(l);
    }
  }
  return p;
}

Index patch_count_for(Index n, double ratio) {
  const auto m = static_cast<Index>(std::llround(ratio * static_cast<double>(n)));
  return std::clamp<Index>(m, 1, n);
}

PatchSet build_patches(const Frame& frame, Index m, Index k, std::uint64_t seed) {
  if (k < 0) throw PreconditionError("k must be non-negative");
  if (k + 1 > frame.size()) throw PreconditionError("k+1 exceeds point count");
  if (m < 1 || m > frame.size()) throw PreconditionError("patch count out of range");
  const NeighborIndex index(frame);
  PatchSet set;
  set.k = k;
  set.patches.reserve(static_cast<std::size_t>(m));
  for (Index c : farthest_point_sampling(frame, m, seed)) {
    Patch p;
    p.center_index = c;
    p.member_indices.reserve(static_cast<std::size_t>(k + 1));
    p.member_indices.push_back(c);
    if (k > 0) {
      for (Index j : index.knn_of(c, k, true)) p.member_indices.push_back(j);
    }
    set.patches.push_back(std::move(p));
  }
  return set;
}

Eigen::MatrixXd relative_coords(const Patch& patch, const Points& positions) {
  Eigen::MatrixXd rel(patch.size(), 3);
  const Eigen::RowVector3d c = positions.row(patch.center_index);
  for (Index r = 0; r < patch.size(); ++r) {
    rel.row(r) = positions.row(patch.member_indices[r]) - c;
  }
  return rel;
}

double patch_epsilon(const Patch& patch, const Points& positions, double c) {
  const Index n = patch.size();
  if (n < 2) throw PreconditionError("patch needs at least two members");
  double sum = 0.0;
  for (Index a = 0; a < n; ++a) {
    double best = std::numeric_limits<double>::infinity();
    const auto pa = positions.row(patch.member_indices[a]);
    for (Index b = 0; b < n; ++b) {
      if (a == b) continue;
      best = std::min(best, (pa - positions.row(patch.member_indices[b])).squaredNorm());
    }
    sum += std::sqrt(best);
  }
  return c * sum / static_cast<double>(n);
}

}  // namespace dpcd
