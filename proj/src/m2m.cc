#include "dpcd/m2m.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "dpcd/graph.h"
#include "dpcd/parallel.h"

namespace dpcd {

namespace {

Points gather(const Points& src, const std::vector<Index>& idx) {
  Points out(static_cast<Index>(idx.size()), 3);
  for (Index r = 0; r < out.rows(); ++r) out.row(r) = src.row(idx[r]);
  return out;
}

}  // namespace

Eigen::MatrixXd variation_rows(const Patch& patch, const Points& positions,
                               const Points& normals, double epsilon) {
  const Points pts = gather(positions, patch.member_indices);
  const Eigen::MatrixXd n = gather(normals, patch.member_indices);
  // Coincident points give a zero epsilon; such a patch has no edges.
  if (!(epsilon > 0.0)) return Eigen::MatrixXd::Zero(n.rows(), 3);
  const RwLaplacian lap = random_walk_laplacian(build_epsilon_graph(pts, epsilon));
  return apply_rw(lap, n);
}

VariationVector variation_measure(const Patch& patch, const Points& positions,
                                  const Points& normals, double epsilon) {
  const Eigen::MatrixXd rows = variation_rows(patch, positions, normals, epsilon);
  return rows.cwiseAbs().colwise().sum().transpose() /
         static_cast<double>(patch.size());
}

double patch_distance(const VariationVector& a, const VariationVector& b) {
  return (a - b).cwiseAbs().norm();
}

PatchDescriptor describe_patch(const Patch& patch, const Points& positions,
                               const Points& normals, double c) {
  PatchDescriptor d;
  const double eps = patch.size() >= 2 ? patch_epsilon(patch, positions, c) : 0.0;
  d.variation_rows = variation_rows(patch, positions, normals, eps);
  d.variation = d.variation_rows.cwiseAbs().colwise().sum().transpose() /
                static_cast<double>(patch.size());
  d.relative = relative_coords(patch, positions);
  return d;
}

std::vector<PatchDescriptor> describe_patches(const PatchSet& patches,
                                              const Frame& frame, double c,
                                              int threads) {
  if (!frame.normals) throw PreconditionError("patch description needs normals");
  std::vector<PatchDescriptor> out(static_cast<std::size_t>(patches.patch_count()));
  parallel_for(patches.patch_count(), threads, [&](Index l) {
    out[l] = describe_patch(patches.patches[l], frame.positions, *frame.normals, c);
  });
  return out;
}

MatchReference::MatchReference(Frame frame, PatchSet patches, double c,
                               int threads)
    : frame_(std::move(frame)), patches_(std::move(patches)) {
  if (patches_.patch_count() == 0) {
    throw PreconditionError("reference frame has no patches");
  }
  descriptors_ = describe_patches(patches_, frame_, c, threads);
  center_index_ = std::make_unique<NeighborIndex>(patches_.centers(frame_.positions));
}

std::vector<Index> MatchReference::candidates(const Vec3& position,
                                              Index xi) const {
  const Index k = std::min<Index>(std::max<Index>(xi, 1), center_index_->size());
  return center_index_->knn(position, k);
}

std::vector<Index> point_correspondence(const Eigen::MatrixXd& rw_target,
                                        const Eigen::MatrixXd& rw_matched,
                                        const Eigen::MatrixXd& rel_target,
                                        const Eigen::MatrixXd& rel_matched,
                                        double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw PreconditionError("alpha must lie in [0, 1]");
  }
  if (rw_target.rows() != rel_target.rows() ||
      rw_matched.rows() != rel_matched.rows()) {
    throw PreconditionError("variation and coordinate rows disagree");
  }
  std::vector<Index> map(static_cast<std::size_t>(rw_target.rows()), 0);
  for (Index i = 0; i < rw_target.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < rw_matched.rows(); ++j) {
      const double d = alpha * (rw_target.row(i) - rw_matched.row(j)).squaredNorm() +
                       (1.0 - alpha) * (rel_target.row(i) - rel_matched.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        map[i] = j;
      }
    }
  }
  return map;
}

TemporalMatch temporal_match(Index target_patch, const PatchDescriptor& target,
                             const Vec3& target_center,
                             const MatchReference& reference, Index xi,
                             double alpha) {
  if (xi < 1) throw PreconditionError("xi must be at least 1");
  std::vector<Index> cands = reference.candidates(target_center, xi);
  std::sort(cands.begin(), cands.end());
  TemporalMatch match;
  match.target_patch = target_patch;
  match.distance = std::numeric_limits<double>::infinity();
  for (Index m : cands) {
    const double d = patch_distance(target.variation, reference.descriptors()[m].variation);
    if (d < match.distance) {
      match.distance = d;
      match.matched_patch = m;
    }
  }
  const PatchDescriptor& matched = reference.descriptors()[match.matched_patch];
  match.point_map = point_correspondence(target.variation_rows, matched.variation_rows,
                                         target.relative, matched.relative, alpha);
  return match;
}

}  // namespace dpcd
