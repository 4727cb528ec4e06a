#ifndef DPCD_METRICS_H_
#define DPCD_METRICS_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "dpcd/frame.h"
#include "dpcd/optimizer.h"

namespace dpcd {

// Adds i.i.d. N(0, sigma^2) to every coordinate. Normals are dropped.
Frame add_gaussian_noise(const Frame& frame, double sigma, std::uint64_t seed);

// Symmetric nearest-neighbor MSE: the two directional means of squared
// distance to the nearest point of the other cloud, averaged.
double mse_nn(const Frame& a, const Frame& b);

// Mean of |a_i - b_i|^2 over matching indices.
double mse_index(const Frame& a, const Frame& b);

constexpr double kGpsnrPeak = 5.0;

// Point-to-plane PSNR in dB against a reference with normals. Errors are
// projected on the reference normal of the nearest reference point (for the
// reference->test direction, the reference point's own normal); the worse
// directional MSE is used. Returns +infinity when the error is exactly zero.
double gpsnr(const Frame& test, const Frame& reference, double peak = kGpsnrPeak);

// Axis-aligned bounding box diagonal length.
double bounding_box_diagonal(const Frame& frame);

struct FrameMetrics {
  std::size_t frame_index = 0;
  double mse_nn = 0.0;
  std::optional<double> mse_index;
  double gpsnr_db = std::numeric_limits<double>::infinity();
  std::vector<ObjectiveBreakdown> objective_trace;
};

using MetricsReport = std::vector<FrameMetrics>;

FrameMetrics evaluate_frame(const Frame& test, const Frame& clean_with_normals,
                            double peak = kGpsnrPeak);

}  // namespace dpcd

#endif  // DPCD_METRICS_H_
