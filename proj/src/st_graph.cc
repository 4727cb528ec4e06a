#include "dpcd/st_graph.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "dpcd/geometry.h"
#include "dpcd/parallel.h"

namespace dpcd {

std::vector<RowPair> spatial_connectivity(const PatchSet& patches,
                                          const Points& positions, Index k_s,
                                          int threads) {
  const Index m = patches.patch_count();
  if (k_s < 1) throw PreconditionError("k_s must be positive");
  if (k_s >= m) throw PreconditionError("k_s must be smaller than the patch count");

  const NeighborIndex centers(patches.centers(positions));
  std::vector<Eigen::MatrixXd> rel(static_cast<std::size_t>(m));
  for (Index l = 0; l < m; ++l) rel[l] = relative_coords(patches.patches[l], positions);

  std::vector<std::vector<RowPair>> per_patch(static_cast<std::size_t>(m));
  parallel_for(m, threads, [&](Index l) {
    auto& out = per_patch[l];
    for (Index nb : centers.knn_of(l, k_s, true)) {
      for (Index r = 0; r < rel[l].rows(); ++r) {
        Index best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (Index s = 0; s < rel[nb].rows(); ++s) {
          const double d2 = (rel[l].row(r) - rel[nb].row(s)).squaredNorm();
          if (d2 < best_d2) {
            best_d2 = d2;
            best = s;
          }
        }
        const Index a = patches.row(l, r);
        const Index b = patches.row(nb, best);
        out.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
  });

  std::vector<RowPair> pairs;
  for (auto& v : per_patch) pairs.insert(pairs.end(), v.begin(), v.end());
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

Eigen::MatrixXd row_features(const PatchSet& patches, const Frame& frame) {
  if (!frame.normals) throw PreconditionError("features need normals");
  Eigen::MatrixXd f(patches.row_count(), 6);
  for (Index row = 0; row < patches.row_count(); ++row) {
    const Index p = patches.point_of_row(row);
    f.block<1, 3>(row, 0) = frame.positions.row(p);
    f.block<1, 3>(row, 3) = frame.normals->row(p);
  }
  return f;
}

namespace {

SparseGraph build_weighted(const std::vector<RowPair>& pairs,
                           const Eigen::MatrixXd& features,
                           const Matrix6d* metric) {
  if (features.cols() != 6) throw PreconditionError("features must have 6 columns");
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= features.rows() || j >= features.rows()) {
      throw PreconditionError("row pair out of range");
    }
    const Vector6d diff = (features.row(i) - features.row(j)).transpose();
    const double q = metric ? diff.dot(*metric * diff) : diff.squaredNorm();
    edges.push_back({i, j, std::exp(-q)});
  }
  return SparseGraph(features.rows(), std::move(edges));
}

}  // namespace

SparseGraph initial_spatial_weights(const std::vector<RowPair>& pairs,
                                    const Eigen::MatrixXd& features) {
  return build_weighted(pairs, features, nullptr);
}

SparseGraph weighted_spatial_graph(const std::vector<RowPair>& pairs,
                                   const Eigen::MatrixXd& features,
                                   const Matrix6d& metric) {
  if (!metric.allFinite() || !(metric - metric.transpose()).isZero(1e-12)) {
    throw PreconditionError("metric must be finite and symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix6d> eig(metric, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9) {
    throw PreconditionError("metric must be positive semidefinite");
  }
  return build_weighted(pairs, features, &metric);
}

Eigen::VectorXd TemporalWeights::expand(Index patch_size) const {
  Eigen::VectorXd diag(w.size() * patch_size);
  for (Index l = 0; l < w.size(); ++l) diag.segment(l * patch_size, patch_size).setConstant(w[l]);
  return diag;
}

TemporalWeights temporal_weight_init(const std::vector<TemporalMatch>& matches) {
  TemporalWeights tw;
  tw.w.resize(static_cast<Index>(matches.size()));
  for (std::size_t l = 0; l < matches.size(); ++l) {
    if (!(matches[l].distance >= 0.0)) {
      throw PreconditionError("match distance must be non-negative");
    }
    tw.w[static_cast<Index>(l)] = std::exp(-matches[l].distance);
  }
  return tw;
}

Eigen::MatrixXd reorder_matched_patch(const TemporalMatch& match,
                                      const Eigen::MatrixXd& prev_relative) {
  Eigen::MatrixXd out(static_cast<Index>(match.point_map.size()), prev_relative.cols());
  for (Index i = 0; i < out.rows(); ++i) {
    const Index j = match.point_map[i];
    if (j < 0 || j >= prev_relative.rows()) {
      throw PreconditionError("point map entry out of range");
    }
    out.row(i) = prev_relative.row(j);
  }
  return out;
}

Eigen::MatrixXd stacked_reference(const std::vector<TemporalMatch>& matches,
                                  const MatchReference& reference,
                                  Index patch_size) {
  Eigen::MatrixXd out(static_cast<Index>(matches.size()) * patch_size, 3);
  for (std::size_t l = 0; l < matches.size(); ++l) {
    const auto& m = matches[l];
    out.middleRows(static_cast<Index>(l) * patch_size, patch_size) =
        reorder_matched_patch(m, reference.descriptors()[m.matched_patch].relative);
  }
  return out;
}

}  // namespace dpcd
