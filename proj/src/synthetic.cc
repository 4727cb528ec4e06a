#include "dpcd/synthetic.h"

#include <cmath>
#include <numbers>
#include <random>

namespace dpcd {

SurfaceKind parse_surface_kind(const std::string& name) {
  if (name == "plane") return SurfaceKind::kPlane;
  if (name == "sphere-cap") return SurfaceKind::kSphereCap;
  if (name == "sinusoid-sheet") return SurfaceKind::kSinusoidSheet;
  throw PreconditionError("unknown surface kind '" + name + "'");
}

std::string surface_kind_name(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::kPlane: return "plane";
    case SurfaceKind::kSphereCap: return "sphere-cap";
    case SurfaceKind::kSinusoidSheet: return "sinusoid-sheet";
  }
  return "unknown";
}

Sequence generate_sequence(const SyntheticSpec& spec) {
  if (spec.points < 1 || spec.frames < 1) {
    throw PreconditionError("synthetic spec needs points and frames");
  }
  constexpr double kPi = std::numbers::pi;
  const double cap_cos = std::cos(kPi / 3.0);
  Sequence seq;
  seq.name = surface_kind_name(spec.kind);
  seq.units = "unit";
  for (Index t = 0; t < spec.frames; ++t) {
    std::seed_seq seeds{static_cast<std::uint32_t>(spec.seed),
                        static_cast<std::uint32_t>(spec.seed >> 32),
                        static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seeds);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double s_t = std::sin(static_cast<double>(t) * spec.phase_step);

    Frame f;
    f.frame_index = static_cast<std::size_t>(t);
    f.positions.resize(spec.points, 3);
    Points normals(spec.points, 3);
    for (Index i = 0; i < spec.points; ++i) {
      const double u = unit(rng);
      const double v = unit(rng);
      switch (spec.kind) {
        case SurfaceKind::kPlane:
          f.positions.row(i) << u, v, spec.amplitude * s_t;
          normals.row(i) << 0.0, 0.0, 1.0;
          break;
        case SurfaceKind::kSphereCap: {
          const double cos_theta = cap_cos + (1.0 - cap_cos) * u;
          const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
          const double phi = 2.0 * kPi * v;
          const Eigen::RowVector3d dir(sin_theta * std::cos(phi), sin_theta * std::sin(phi),
                                       cos_theta);
          f.positions.row(i) = (1.0 + spec.amplitude * s_t) * dir;
          normals.row(i) = dir;
          break;
        }
        case SurfaceKind::kSinusoidSheet: {
          const double w = 2.0 * kPi * spec.frequency;
          const double z = spec.height * std::sin(w * u) + spec.amplitude * s_t * std::sin(w * v);
          const double zx = spec.height * w * std::cos(w * u);
          const double zy = spec.amplitude * s_t * w * std::cos(w * v);
          f.positions.row(i) << u, v, z;
          normals.row(i) = Eigen::RowVector3d(-zx, -zy, 1.0).normalized();
          break;
        }
      }
    }
    f.normals = std::move(normals);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace dpcd
