#ifndef DPCD_OPTIMIZER_H_
#define DPCD_OPTIMIZER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpcd/frame.h"
#include "dpcd/graph.h"
#include "dpcd/m2m.h"
#include "dpcd/patches.h"
#include "dpcd/st_graph.h"

namespace dpcd {

// A count given either as an absolute number or as a fraction of some base
// ("0.5N" for patches, "0.9M" for the temporal trace bound).
struct CountRule {
  double value = 0.0;
  bool relative = true;

  double resolve(double base) const { return relative ? value * base : value; }
  std::string to_string(char base_symbol) const;
  static CountRule parse(const std::string& text, char base_symbol);
};

struct DenoiseConfig {
  Index K = 30;
  CountRule M{0.5, true};
  Index K_s = 10;
  Index xi = 10;
  double c = 5.0;
  double alpha = 0.5;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  CountRule M_prime{0.9, true};
  double C = 5.0;
  double cg_tol = 1e-10;
  int cg_max_iters = 5000;
  double pg_step = 1e-3;
  int pg_max_iters = 50;
  double pg_tol = 1e-6;
  int outer_max_iters = 4;
  double outer_tol = 1e-3;
  std::uint64_t seed = 1;
  int k_normal = 10;
  int threads = 1;

  void validate() const;
};

struct ObjectiveBreakdown {
  double fidelity = 0.0;
  double temporal = 0.0;
  double spatial = 0.0;
  double total = 0.0;
};

// The quantities held fixed during a point-cloud update: patch layout, the
// frozen centers C, the reordered reference patches, per-patch temporal
// weights and the intra-frame graph over patch rows.
struct FrameSystem {
  PatchSet patches;
  Points centers;               // M x 3
  Eigen::MatrixXd reference;    // (K+1)M x 3; empty when there is no temporal term
  Eigen::VectorXd temporal_weights;  // M entries; empty when there is no temporal term
  SparseGraph spatial;          // over (K+1)M rows

  bool has_temporal() const { return reference.rows() > 0; }
};

// |U - U_hat|_F^2 + lambda1 tr[(P-P~)^T W (P-P~)] + lambda2 tr(P^T L P),
// with P = S U - C.
ObjectiveBreakdown objective(const Points& u, const Points& u_hat,
                             const FrameSystem& system, double lambda1,
                             double lambda2);

// Solves (I + l1 S^T W S + l2 S^T L S) U = U_hat + l1 S^T W (C + P~) +
// l2 S^T L C column by column with conjugate gradient. Throws SolverError if
// any column misses cg_tol (relative residual).
Points solve_point_cloud(const Points& u_hat, const FrameSystem& system,
                         double lambda1, double lambda2, double cg_tol,
                         int cg_max_iters);

// min w.d  s.t. 0 <= w <= 1, sum w >= m_prime. The smallest floor(m_prime)
// entries of d get weight 1, the next one the fractional remainder.
Eigen::VectorXd solve_temporal_weights(const Eigen::VectorXd& d, double m_prime);

// One spatially connected pair for metric learning: the feature difference
// and the squared difference of the two rows' relative coordinates.
struct MetricPair {
  Vector6d feature_diff = Vector6d::Zero();
  double weight = 0.0;
};

struct MetricLearningOptions {
  double trace_bound = 5.0;
  double step = 1e-3;
  int max_iters = 50;
  double tol = 1e-6;
};

struct MetricLearningResult {
  Matrix6d factor = Matrix6d::Identity();  // R
  Matrix6d metric = Matrix6d::Identity();  // M = R^T R
  std::vector<double> objective_trace;     // accepted iterates, initial first
  int iterations = 0;
  int rejected_steps = 0;
};

// Sum over pairs of exp(-|R df|^2) * d_ij.
double metric_objective(const std::vector<MetricPair>& pairs, const Matrix6d& r);
// Gradient of metric_objective with respect to R.
Matrix6d metric_gradient(const std::vector<MetricPair>& pairs, const Matrix6d& r);
// Clamps the diagonal at zero, then rescales it if its sum exceeds the bound.
Matrix6d project_factor(const Matrix6d& r, double trace_bound);

// Projected gradient from R = (trace_bound/6) I. A step that raises the
// objective is rejected and the step halved; three rejections in a row throw
// SolverError("step size too large").
MetricLearningResult learn_metric(const std::vector<MetricPair>& pairs,
                                  const MetricLearningOptions& options);

struct IterationRecord {
  ObjectiveBreakdown objective;
  bool accepted = true;
  double trace_r = 0.0;
  double trace_m = 0.0;
  Index patch_count = 0;
  Index spatial_edges = 0;
  std::size_t degenerate_normals = 0;
};

struct FrameResult {
  Frame output;
  std::vector<IterationRecord> trace;
  std::size_t best_iteration = 0;
};

// The denoised previous frame with normals and patches, ready for matching.
MatchReference prepare_reference(const Frame& denoised_prev,
                                 const DenoiseConfig& config);

// Alternating minimization for one frame. Without a reference (or with
// lambda1 = 0) the temporal term is off and the reference is never touched.
FrameResult denoise_frame(const Frame& noisy, const MatchReference* reference,
                          const DenoiseConfig& config);

struct SequenceResult {
  Sequence denoised;
  std::vector<FrameResult> frames;
};

SequenceResult denoise_sequence(const Sequence& noisy, const DenoiseConfig& config);

}  // namespace dpcd

#endif  // DPCD_OPTIMIZER_H_
