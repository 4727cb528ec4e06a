#include "dpcd/metrics.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "dpcd/geometry.h"

namespace dpcd {

Frame add_gaussian_noise(const Frame& frame, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw PreconditionError("sigma must be finite and non-negative");
  }
  Frame out;
  out.frame_index = frame.frame_index;
  out.positions = frame.positions;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (Index i = 0; i < out.positions.rows(); ++i) {
    for (int d = 0; d < 3; ++d) out.positions(i, d) += noise(rng);
  }
  return out;
}

namespace {

double directional_mse(const Frame& from, const NeighborIndex& to) {
  double sum = 0.0;
  for (Index i = 0; i < from.size(); ++i) {
    const Vec3 p = from.position(i);
    const Index j = to.knn(p, 1).front();
    sum += (to.points().row(j).transpose() - p).squaredNorm();
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

double mse_nn(const Frame& a, const Frame& b) {
  if (a.size() == 0 || b.size() == 0) throw PreconditionError("empty frame");
  const NeighborIndex ia(a), ib(b);
  return 0.5 * (directional_mse(a, ib) + directional_mse(b, ia));
}

double mse_index(const Frame& a, const Frame& b) {
  if (a.size() != b.size()) throw PreconditionError("cardinality mismatch");
  if (a.size() == 0) throw PreconditionError("empty frame");
  return (a.positions - b.positions).rowwise().squaredNorm().mean();
}

double gpsnr(const Frame& test, const Frame& reference, double peak) {
  if (!reference.normals) throw PreconditionError("gpsnr needs reference normals");
  if (!(peak > 0.0)) throw PreconditionError("peak must be positive");
  if (test.size() == 0 || reference.size() == 0) throw PreconditionError("empty frame");
  const NeighborIndex ref_index(reference), test_index(test);

  double test_to_ref = 0.0;
  for (Index i = 0; i < test.size(); ++i) {
    const Vec3 p = test.position(i);
    const Index j = ref_index.knn(p, 1).front();
    const double e = (p - reference.position(j)).dot(reference.normal(j));
    test_to_ref += e * e;
  }
  test_to_ref /= static_cast<double>(test.size());

  double ref_to_test = 0.0;
  for (Index j = 0; j < reference.size(); ++j) {
    const Vec3 q = reference.position(j);
    const Index i = test_index.knn(q, 1).front();
    const double e = (test.position(i) - q).dot(reference.normal(j));
    ref_to_test += e * e;
  }
  ref_to_test /= static_cast<double>(reference.size());

  const double worst = std::max(test_to_ref, ref_to_test);
  if (worst == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / worst);
}

double bounding_box_diagonal(const Frame& frame) {
  if (frame.size() == 0) throw PreconditionError("empty frame");
  return (frame.positions.colwise().maxCoeff() - frame.positions.colwise().minCoeff()).norm();
}

FrameMetrics evaluate_frame(const Frame& test, const Frame& clean_with_normals,
                            double peak) {
  FrameMetrics m;
  m.frame_index = test.frame_index;
  m.mse_nn = mse_nn(test, clean_with_normals);
  if (test.size() == clean_with_normals.size()) {
    m.mse_index = mse_index(test, clean_with_normals);
  }
  m.gpsnr_db = gpsnr(test, clean_with_normals, peak);
  return m;
}

}  // namespace dpcd
