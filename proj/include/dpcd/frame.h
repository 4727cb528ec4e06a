#ifndef DPCD_FRAME_H_
#define DPCD_FRAME_H_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dpcd {

using Index = std::ptrdiff_t;
using Vec3 = Eigen::Vector3d;

// One row per point.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// Raised when an operation's input contract is violated.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Iterative solver failed to meet its tolerance or diverged.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

struct Frame {
  Points positions;
  std::optional<Points> normals;
  std::size_t frame_index = 0;

  Index size() const { return positions.rows(); }
  bool has_normals() const { return normals.has_value(); }
  Vec3 position(Index i) const { return positions.row(i).transpose(); }
  Vec3 normal(Index i) const { return normals->row(i).transpose(); }

  // Throws PreconditionError unless positions are non-empty and finite and
  // normals (when present) have matching size and unit length.
  void validate() const;
};

struct Sequence {
  std::string name;
  std::string units;
  std::vector<Frame> frames;

  // frame_index must be strictly increasing.
  void validate() const;
};

}  // namespace dpcd

#endif  // DPCD_FRAME_H_
