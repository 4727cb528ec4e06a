#ifndef DPCD_GRAPH_H_
#define DPCD_GRAPH_H_

#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dpcd/frame.h"

namespace dpcd {

struct Edge {
  Index i = 0;
  Index j = 0;
  double weight = 0.0;
};

// Undirected weighted graph. Edges are stored once with i < j; the adjacency
// lists hold both directions.
class SparseGraph {
 public:
  SparseGraph() = default;

  // Validates: indices in range, no self-loops, no duplicate pairs, finite
  // non-negative weights. Edges with i > j are swapped.
  SparseGraph(Index node_count, std::vector<Edge> edges);

  Index node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }

  struct Neighbor {
    Index node;
    double weight;
  };
  const std::vector<Neighbor>& neighbors(Index i) const { return adjacency_[i]; }
  double degree(Index i) const { return degree_[i]; }

  Eigen::MatrixXd dense_adjacency() const;

 private:
  Index node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<double> degree_;
};

// Unit-weight graph joining points with 0 < |p_i - p_j| < epsilon.
SparseGraph build_epsilon_graph(const Points& points, double epsilon);

// L = D - A.
Eigen::SparseMatrix<double> combinatorial_laplacian(const SparseGraph& graph);

// x^T L x evaluated edge-wise, summed over signal columns.
double laplacian_quadratic_form(const SparseGraph& graph,
                                const Eigen::MatrixXd& signal);

// L_rw = I - D^{-1} A. Rows of isolated nodes are zero.
class RwLaplacian {
 public:
  explicit RwLaplacian(SparseGraph graph) : graph_(std::move(graph)) {}

  const SparseGraph& graph() const { return graph_; }
  Index size() const { return graph_.node_count(); }

  // Row i = sum_j (a_ij / d_ii) (f_i - f_j), column by column.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& signal) const;

  Eigen::MatrixXd dense() const;

 private:
  SparseGraph graph_;
};

RwLaplacian random_walk_laplacian(const SparseGraph& graph);
Eigen::MatrixXd apply_rw(const RwLaplacian& lap, const Eigen::MatrixXd& signal);

}  // namespace dpcd

#endif  // DPCD_GRAPH_H_
