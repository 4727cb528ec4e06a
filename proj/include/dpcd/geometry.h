#ifndef DPCD_GEOMETRY_H_
#define DPCD_GEOMETRY_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dpcd/frame.h"

namespace dpcd {

// Static k-d tree over a copy of a point set. Results are ordered by
// (squared distance, point index), so equal distances resolve to the lower
// index and every query agrees exactly with a brute-force scan.
class NeighborIndex {
 public:
  explicit NeighborIndex(const Points& points);
  explicit NeighborIndex(const Frame& frame) : NeighborIndex(frame.positions) {}

  Index size() const { return points_.rows(); }
  const Points& points() const { return points_; }

  // The k nearest points to `query`. When `exclude` is set that index is
  // skipped, so at most size()-1 results come back. Throws if k > size().
  std::vector<Index> knn(const Vec3& query, Index k,
                         std::optional<Index> exclude = std::nullopt) const;

  // Neighbors of an indexed point; exclude_self drops the point itself.
  std::vector<Index> knn_of(Index i, Index k, bool exclude_self) const;

  // All points with distance strictly below `radius`, ascending.
  std::vector<Index> radius(const Vec3& query, double radius) const;

 private:
  struct Node {
    Index begin = 0;
    Index end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(Index begin, Index end);

  Points points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Mean distance from each point to its nearest other point.
double mean_nn_distance(const Frame& frame, const NeighborIndex& index);

// Per-point plane fit over the point and its k_plane nearest neighbors; the
// normal is the smallest-eigenvalue eigenvector of the covariance, then
// oriented with orient_normals. Rank-deficient neighborhoods get (0,0,1) and
// bump *degenerate_count when provided.
Frame estimate_normals(const Frame& frame, int k_plane,
                       std::size_t* degenerate_count = nullptr);

// Deterministic sign convention. Each normal is first put in canonical sign
// (n_z > 0, else n_y > 0, else n_x >= 0), then flipped to agree with the mean
// canonical normal of its k_plane neighborhood. The result does not depend
// on the input signs.
Frame orient_normals(const Frame& frame, int k_plane);

// Greedy max-min selection; the first pick is drawn from a seeded generator.
std::vector<Index> farthest_point_sampling(const Frame& frame, Index m,
                                           std::uint64_t seed);
std::vector<Index> farthest_point_sampling_from(const Frame& frame, Index m,
                                                Index first);

// Keeps ceil(rate * N) points, in input order. Normals are carried along.
Frame downsample_random(const Frame& frame, double rate, std::uint64_t seed);

}  // namespace dpcd

#endif  // DPCD_GEOMETRY_H_
