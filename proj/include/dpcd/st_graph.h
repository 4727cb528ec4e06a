#ifndef DPCD_ST_GRAPH_H_
#define DPCD_ST_GRAPH_H_

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dpcd/frame.h"
#include "dpcd/graph.h"
#include "dpcd/m2m.h"
#include "dpcd/patches.h"

namespace dpcd {

using RowPair = std::pair<Index, Index>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

// Intra-frame connectivity in patch-row space. Every patch links to its k_s
// nearest patches (by center distance); each row of the patch is joined to
// the row of the neighbor patch with the nearest relative coordinate. The
// directed links are symmetrized by union. Pairs come back with first < second,
// sorted and unique.
std::vector<RowPair> spatial_connectivity(const PatchSet& patches,
                                          const Points& positions, Index k_s,
                                          int threads = 1);

// (x, y, z, nx, ny, nz) for every patch row.
Eigen::MatrixXd row_features(const PatchSet& patches, const Frame& frame);

// a_ij = exp(-|f_i - f_j|^2).
SparseGraph initial_spatial_weights(const std::vector<RowPair>& pairs,
                                    const Eigen::MatrixXd& features);

// a_ij = exp(-(f_i - f_j)^T M (f_i - f_j)); M must be symmetric PSD.
SparseGraph weighted_spatial_graph(const std::vector<RowPair>& pairs,
                                   const Eigen::MatrixXd& features,
                                   const Matrix6d& metric);

// One weight in [0, 1] per target patch. The diagonal of W repeats w_l over
// the K+1 rows of patch l.
struct TemporalWeights {
  Eigen::VectorXd w;

  Eigen::VectorXd expand(Index patch_size) const;
};

// w_l = exp(-d_l) from the match distances, in target-patch order.
TemporalWeights temporal_weight_init(const std::vector<TemporalMatch>& matches);

// Row i is prev_relative[point_map[i]].
Eigen::MatrixXd reorder_matched_patch(const TemporalMatch& match,
                                      const Eigen::MatrixXd& prev_relative);

// Stacks the reordered matched patches into a (K+1)M x 3 matrix aligned with
// the target patch rows.
Eigen::MatrixXd stacked_reference(const std::vector<TemporalMatch>& matches,
                                  const MatchReference& reference,
                                  Index patch_size);

}  // namespace dpcd

#endif  // DPCD_ST_GRAPH_H_
