#ifndef DPCD_SYNTHETIC_H_
#define DPCD_SYNTHETIC_H_

#include <cstdint>
#include <string>

#include "dpcd/frame.h"

namespace dpcd {

enum class SurfaceKind { kPlane, kSphereCap, kSinusoidSheet };

SurfaceKind parse_surface_kind(const std::string& name);
std::string surface_kind_name(SurfaceKind kind);

// A deforming analytic surface, sampled afresh (uniform random parameters)
// for every frame. With s_t = sin(t * phase_step):
//   plane           z = amplitude * s_t over [0,1]^2
//   sphere-cap      radius 1 + amplitude * s_t, polar angle <= 60 degrees
//   sinusoid-sheet  z = height * sin(2 pi f x) + amplitude * s_t * sin(2 pi f y)
// Zero amplitude leaves every frame on the same surface.
struct SyntheticSpec {
  SurfaceKind kind = SurfaceKind::kSinusoidSheet;
  Index points = 2000;
  Index frames = 3;
  double amplitude = 0.05;
  double phase_step = 0.5;
  double height = 0.1;
  double frequency = 1.0;
  std::uint64_t seed = 7;
};

// Clean frames with analytic normals attached.
Sequence generate_sequence(const SyntheticSpec& spec);

}  // namespace dpcd

#endif  // DPCD_SYNTHETIC_H_
