#include "dpcd/geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include <Eigen/Eigenvalues>

namespace dpcd {

void Frame::validate() const {
  if (positions.rows() == 0) throw PreconditionError("empty frame");
  if (!positions.allFinite()) {
    throw PreconditionError("frame has non-finite positions");
  }
  if (normals) {
    if (normals->rows() != positions.rows()) {
      throw PreconditionError("normal count does not match point count");
    }
    for (Index i = 0; i < normals->rows(); ++i) {
      if (std::abs(normals->row(i).norm() - 1.0) > 1e-9) {
        throw PreconditionError("normal " + std::to_string(i) +
                                " is not unit length");
      }
    }
  }
}

void Sequence::validate() const {
  for (std::size_t f = 1; f < frames.size(); ++f) {
    if (frames[f].frame_index <= frames[f - 1].frame_index) {
      throw PreconditionError("frame indices must be strictly increasing");
    }
  }
}

namespace {

constexpr Index kLeafSize = 8;

inline double sq_dist(const Points& p, Index i, const Vec3& q) {
  const double dx = p(i, 0) - q.x();
  const double dy = p(i, 1) - q.y();
  const double dz = p(i, 2) - q.z();
  return dx * dx + dy * dy + dz * dz;
}

using Candidate = std::pair<double, Index>;

// Bounded sorted list of the best k candidates seen so far.
class BestK {
 public:
  explicit BestK(Index k) : k_(k) { items_.reserve(static_cast<std::size_t>(k) + 1); }

  bool full() const { return static_cast<Index>(items_.size()) >= k_; }
  double worst() const {
    return full() ? items_.back().first : std::numeric_limits<double>::infinity();
  }

  void offer(Candidate c) {
    if (full() && !(c < items_.back())) return;
    auto pos = std::lower_bound(items_.begin(), items_.end(), c);
    items_.insert(pos, c);
    if (static_cast<Index>(items_.size()) > k_) items_.pop_back();
  }

  std::vector<Index> indices() const {
    std::vector<Index> out;
    out.reserve(items_.size());
    for (const auto& c : items_) out.push_back(c.second);
    return out;
  }

 private:
  Index k_;
  std::vector<Candidate> items_;
};

}  // namespace

NeighborIndex::NeighborIndex(const Points& points) : points_(points) {
  if (points_.rows() == 0) throw PreconditionError("empty frame");
  order_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), Index{0});
  nodes_.reserve(static_cast<std::size_t>(2 * points_.rows() / kLeafSize + 2));
  root_ = build(0, points_.rows());
}

int NeighborIndex::build(Index begin, Index end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (Index k = begin; k < end; ++k) {
    const Eigen::Vector3d p = points_.row(order_[k]).transpose();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

  const Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](Index a, Index b) {
                     return points_(a, axis) < points_(b, axis);
                   });
  const double split = points_(order_[mid], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Index> NeighborIndex::knn(const Vec3& query, Index k,
                                      std::optional<Index> exclude) const {
  if (k <= 0) throw PreconditionError("k must be positive");
  if (k > size()) throw PreconditionError("k too large");
  BestK best(k);
  // Explicit stack of (node, lower bound on squared distance).
  std::vector<std::pair<int, double>> stack;
  stack.emplace_back(root_, 0.0);
  while (!stack.empty()) {
    auto [id, bound] = stack.back();
    stack.pop_back();
    if (best.full() && bound > best.worst()) continue;
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (Index p = node.begin; p < node.end; ++p) {
        const Index i = order_[p];
        if (exclude && *exclude == i) continue;
        best.offer({sq_dist(points_, i, query), i});
      }
      continue;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta <= 0 ? node.left : node.right;
    const int far = delta <= 0 ? node.right : node.left;
    stack.emplace_back(far, std::max(bound, delta * delta));
    stack.emplace_back(near, bound);
  }
  return best.indices();
}

std::vector<Index> NeighborIndex::knn_of(Index i, Index k,
                                         bool exclude_self) const {
  if (i < 0 || i >= size()) throw PreconditionError("point index out of range");
  return knn(points_.row(i).transpose(), k,
             exclude_self ? std::optional<Index>(i) : std::nullopt);
}

std::vector<Index> NeighborIndex::radius(const Vec3& query,
                                         double radius) const {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw PreconditionError("radius must be positive and finite");
  }
  const double r2 = radius * radius;
  std::vector<Candidate> found;
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.axis < 0) {
      for (Index p = node.begin; p < node.end; ++p) {
        const Index i = order_[p];
        const double d2 = sq_dist(points_, i, query);
        if (d2 < r2) found.emplace_back(d2, i);
      }
      continue;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta <= 0 ? node.left : node.right;
    const int far = delta <= 0 ? node.right : node.left;
    if (delta * delta < r2) stack.push_back(far);
    stack.push_back(near);
  }
  std::sort(found.begin(), found.end());
  std::vector<Index> out;
  out.reserve(found.size());
  for (const auto& c : found) out.push_back(c.second);
  return out;
}

double mean_nn_distance(const Frame& frame, const NeighborIndex& index) {
  if (frame.size() < 2) throw PreconditionError("need two points");
  double sum = 0.0;
  for (Index i = 0; i < frame.size(); ++i) {
    const Index j = index.knn_of(i, 1, true).front();
    sum += (frame.positions.row(i) - frame.positions.row(j)).norm();
  }
  return sum / static_cast<double>(frame.size());
}

Frame estimate_normals(const Frame& frame, int k_plane,
                       std::size_t* degenerate_count) {
  if (k_plane < 3) throw PreconditionError("k_plane must be at least 3");
  if (frame.size() <= k_plane) {
    throw PreconditionError("k_plane must be smaller than the point count");
  }
  const NeighborIndex index(frame);
  Points normals(frame.size(), 3);
  std::size_t degenerate = 0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  for (Index i = 0; i < frame.size(); ++i) {
    std::vector<Index> hood = index.knn_of(i, k_plane, true);
    hood.push_back(i);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (Index j : hood) mean += frame.position(j);
    mean /= static_cast<double>(hood.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (Index j : hood) {
      const Eigen::Vector3d d = frame.position(j) - mean;
      cov.noalias() += d * d.transpose();
    }
    solver.compute(cov);
    const Eigen::Vector3d& ev = solver.eigenvalues();
    if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) {
      normals.row(i) = Eigen::RowVector3d(0.0, 0.0, 1.0);
      ++degenerate;
      continue;
    }
    normals.row(i) = solver.eigenvectors().col(0).normalized().transpose();
  }
  if (degenerate_count) *degenerate_count += degenerate;
  Frame out = frame;
  out.normals = std::move(normals);
  return orient_normals(out, k_plane);
}

namespace {

Eigen::RowVector3d canonical_sign(const Eigen::RowVector3d& n) {
  for (int axis = 2; axis >= 0; --axis) {
    if (n[axis] > 0.0) return n;
    if (n[axis] < 0.0) return -n;
  }
  return n;
}

}  // namespace

Frame orient_normals(const Frame& frame, int k_plane) {
  if (!frame.normals) throw PreconditionError("orient_normals needs normals");
  const Index n = frame.size();
  Points canon(n, 3);
  for (Index i = 0; i < n; ++i) canon.row(i) = canonical_sign(frame.normals->row(i));

  Frame out = frame;
  if (n == 1) {
    out.normals = std::move(canon);
    return out;
  }
  const NeighborIndex index(frame);
  const Index k = std::min<Index>(std::max(k_plane, 1), n - 1);
  Points oriented = canon;
  for (Index i = 0; i < n; ++i) {
    Eigen::RowVector3d mean = canon.row(i);
    for (Index j : index.knn_of(i, k, true)) mean += canon.row(j);
    if (canon.row(i).dot(mean) < 0.0) oriented.row(i) = -canon.row(i);
  }
  out.normals = std::move(oriented);
  return out;
}

std::vector<Index> farthest_point_sampling_from(const Frame& frame, Index m,
                                                Index first) {
  const Index n = frame.size();
  if (m < 1) throw PreconditionError("m must be positive");
  if (m > n) throw PreconditionError("m exceeds point count");
  if (first < 0 || first >= n) throw PreconditionError("first pick out of range");

  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(m));
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<double> min_d2(static_cast<std::size_t>(n),
                             std::numeric_limits<double>::infinity());
  Index next = first;
  while (true) {
    chosen.push_back(next);
    taken[next] = 1;
    if (static_cast<Index>(chosen.size()) == m) break;
    const Vec3 c = frame.position(next);
    Index best = -1;
    double best_d2 = -1.0;
    for (Index j = 0; j < n; ++j) {
      const double d2 = sq_dist(frame.positions, j, c);
      if (d2 < min_d2[j]) min_d2[j] = d2;
      if (!taken[j] && min_d2[j] > best_d2) {
        best_d2 = min_d2[j];
        best = j;
      }
    }
    next = best;
  }
  return chosen;
}

std::vector<Index> farthest_point_sampling(const Frame& frame, Index m,
                                           std::uint64_t seed) {
  if (frame.size() == 0) throw PreconditionError("empty frame");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, frame.size() - 1);
  return farthest_point_sampling_from(frame, m, pick(rng));
}

Frame downsample_random(const Frame& frame, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw PreconditionError("sampling rate must lie in (0, 1]");
  }
  const Index n = frame.size();
  const Index keep = static_cast<Index>(std::ceil(rate * static_cast<double>(n)));
  if (keep < 1) throw PreconditionError("sampling rate keeps no points");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < keep; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(static_cast<std::size_t>(keep));
  std::sort(idx.begin(), idx.end());

  Frame out;
  out.frame_index = frame.frame_index;
  out.positions.resize(keep, 3);
  if (frame.normals) out.normals = Points(keep, 3);
  for (Index r = 0; r < keep; ++r) {
    out.positions.row(r) = frame.positions.row(idx[r]);
    if (frame.normals) out.normals->row(r) = frame.normals->row(idx[r]);
  }
  return out;
}

}  // namespace dpcd
