#pragma once

#include <cstdint>
#include <string>

#include "gaugeforge/domain.hpp"
#include "gaugeforge/gauge.hpp"

namespace gaugeforge::potentials {

// Builds an antisymmetric potential on the grid.
//
//  * "zero"     - the zero field (target_norm is ignored).
//  * "constant" - the planar rotation block embedded in the upper-left 2x2
//                 corner, rescaled exactly to target_norm.
//  * "random"   - a seeded band-limited trigonometric sum per upper-triangle
//                 entry (integer wave vectors up to 2 per axis), averaged
//                 `smoothness_passes` times and rescaled to target_norm.
//
// All coefficients are drawn from one mt19937_64 stream in a fixed order
// before any grid sampling, so the underlying function is independent of N:
// refining the grid samples the same potential.
gauge::AntisymmetricPotential generate(const domain::GridDomain& dom, int n,
                                       const std::string& kind, std::uint64_t seed,
                                       double target_norm, int smoothness_passes);

}  // namespace gaugeforge::potentials
