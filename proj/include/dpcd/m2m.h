#ifndef DPCD_M2M_H_
#define DPCD_M2M_H_

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "dpcd/frame.h"
#include "dpcd/geometry.h"
#include "dpcd/patches.h"

namespace dpcd {

// Per-axis total variation of a patch's normal field.
using VariationVector = Eigen::Vector3d;

// L_rw n on the patch's epsilon graph, one row per member.
Eigen::MatrixXd variation_rows(const Patch& patch, const Points& positions,
                               const Points& normals, double epsilon);

// Column-wise mean absolute value of variation_rows.
VariationVector variation_measure(const Patch& patch, const Points& positions,
                                  const Points& normals, double epsilon);

// l2 norm of the per-axis absolute differences.
double patch_distance(const VariationVector& a, const VariationVector& b);

// Everything temporal matching needs to know about one patch.
struct PatchDescriptor {
  VariationVector variation = VariationVector::Zero();
  Eigen::MatrixXd variation_rows;  // (K+1) x 3
  Eigen::MatrixXd relative;        // (K+1) x 3
};

// Uses epsilon = patch_epsilon(patch, positions, c).
PatchDescriptor describe_patch(const Patch& patch, const Points& positions,
                               const Points& normals, double c);

std::vector<PatchDescriptor> describe_patches(const PatchSet& patches,
                                              const Frame& frame, double c,
                                              int threads = 1);

struct TemporalMatch {
  Index target_patch = 0;
  Index matched_patch = 0;
  double distance = 0.0;
  std::vector<Index> point_map;  // target slot -> matched slot
};

// The denoised previous frame, prepared once for repeated matching.
class MatchReference {
 public:
  // frame must carry normals.
  MatchReference(Frame frame, PatchSet patches, double c, int threads = 1);

  const Frame& frame() const { return frame_; }
  const PatchSet& patches() const { return patches_; }
  const std::vector<PatchDescriptor>& descriptors() const { return descriptors_; }

  // Indices of the xi patches whose centers are nearest to `position`.
  std::vector<Index> candidates(const Vec3& position, Index xi) const;

 private:
  Frame frame_;
  PatchSet patches_;
  std::vector<PatchDescriptor> descriptors_;
  std::unique_ptr<NeighborIndex> center_index_;
};

// For each target slot i, argmin_j alpha*|rw_t[i]-rw_m[j]|^2 +
// (1-alpha)*|rel_t[i]-rel_m[j]|^2, lowest j on ties.
std::vector<Index> point_correspondence(const Eigen::MatrixXd& rw_target,
                                        const Eigen::MatrixXd& rw_matched,
                                        const Eigen::MatrixXd& rel_target,
                                        const Eigen::MatrixXd& rel_matched,
                                        double alpha);

// Best match among the xi reference patches nearest the target center.
// xi is clamped to the reference patch count.
TemporalMatch temporal_match(Index target_patch, const PatchDescriptor& target,
                             const Vec3& target_center,
                             const MatchReference& reference, Index xi,
                             double alpha);

}  // namespace dpcd

#endif  // DPCD_M2M_H_
