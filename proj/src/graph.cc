#include "dpcd/graph.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace dpcd {

SparseGraph::SparseGraph(Index node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ < 0) throw PreconditionError("negative node count");
  for (Edge& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= node_count_) {
      throw PreconditionError("edge endpoint out of range");
    }
    if (e.i == e.j) throw PreconditionError("self-loop on node " + std::to_string(e.i));
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw PreconditionError("edge weight must be finite and non-negative");
    }
  }
  std::vector<std::pair<Index, Index>> keys;
  keys.reserve(edges_.size());
  for (const Edge& e : edges_) keys.emplace_back(e.i, e.j);
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw PreconditionError("duplicate edge");
  }

  adjacency_.assign(static_cast<std::size_t>(node_count_), {});
  degree_.assign(static_cast<std::size_t>(node_count_), 0.0);
  for (const Edge& e : edges_) {
    adjacency_[e.i].push_back({e.j, e.weight});
    adjacency_[e.j].push_back({e.i, e.weight});
  }
  // Fixed neighbor order keeps degree sums and applications reproducible
  // whatever order the edges arrived in.
  for (Index i = 0; i < node_count_; ++i) {
    auto& adj = adjacency_[i];
    std::sort(adj.begin(), adj.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    double d = 0.0;
    for (const Neighbor& nb : adj) d += nb.weight;
    degree_[i] = d;
  }
}

Eigen::MatrixXd SparseGraph::dense_adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(node_count_, node_count_);
  for (const Edge& e : edges_) {
    a(e.i, e.j) = e.weight;
    a(e.j, e.i) = e.weight;
  }
  return a;
}

SparseGraph build_epsilon_graph(const Points& points, double epsilon) {
  if (!std::isfinite(epsilon)) throw PreconditionError("epsilon must be finite");
  if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
  if (points.rows() == 0) throw PreconditionError("empty point set");
  const double eps2 = epsilon * epsilon;
  std::vector<Edge> edges;
  const Index n = points.rows();
  // Patches are small (K+1 points); the quadratic scan is the fast path here.
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (points.row(i) - points.row(j)).squaredNorm();
      if (d2 > 0.0 && d2 < eps2) edges.push_back({i, j, 1.0});
    }
  }
  return SparseGraph(n, std::move(edges));
}

Eigen::SparseMatrix<double> combinatorial_laplacian(const SparseGraph& graph) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(graph.edges().size() * 2 + static_cast<std::size_t>(graph.node_count()));
  for (Index i = 0; i < graph.node_count(); ++i) {
    trips.emplace_back(i, i, graph.degree(i));
  }
  for (const Edge& e : graph.edges()) {
    trips.emplace_back(e.i, e.j, -e.weight);
    trips.emplace_back(e.j, e.i, -e.weight);
  }
  Eigen::SparseMatrix<double> l(graph.node_count(), graph.node_count());
  l.setFromTriplets(trips.begin(), trips.end());
  return l;
}

double laplacian_quadratic_form(const SparseGraph& graph,
                                const Eigen::MatrixXd& signal) {
  if (signal.rows() != graph.node_count()) {
    throw PreconditionError("signal rows do not match node count");
  }
  double total = 0.0;
  for (const Edge& e : graph.edges()) {
    total += e.weight * (signal.row(e.i) - signal.row(e.j)).squaredNorm();
  }
  return total;
}

Eigen::MatrixXd RwLaplacian::apply(const Eigen::MatrixXd& signal) const {
  if (signal.rows() != graph_.node_count()) {
    throw PreconditionError("signal rows do not match node count");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(signal.rows(), signal.cols());
  for (Index i = 0; i < graph_.node_count(); ++i) {
    const double d = graph_.degree(i);
    if (d <= 0.0) continue;
    for (const auto& nb : graph_.neighbors(i)) {
      out.row(i) += (nb.weight / d) * (signal.row(i) - signal.row(nb.node));
    }
  }
  return out;
}

Eigen::MatrixXd RwLaplacian::dense() const {
  const Index n = graph_.node_count();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double d = graph_.degree(i);
    if (d <= 0.0) continue;
    l(i, i) = 1.0;
    for (const auto& nb : graph_.neighbors(i)) l(i, nb.node) -= nb.weight / d;
  }
  return l;
}

RwLaplacian random_walk_laplacian(const SparseGraph& graph) {
  return RwLaplacian(graph);
}

Eigen::MatrixXd apply_rw(const RwLaplacian& lap, const Eigen::MatrixXd& signal) {
  return lap.apply(signal);
}

}  // namespace dpcd
