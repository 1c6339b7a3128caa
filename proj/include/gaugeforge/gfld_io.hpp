#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaugeforge/domain.hpp"

namespace gaugeforge::gfld {

// Binary grid-field container. Layout:
//   bytes 0..3   magic "GFLD"
//   bytes 4..5   version (u16 little-endian, currently 1)
//   bytes 6..17  m, n, N (u32 little-endian each)
//   payload      float64 little-endian, one block per lattice node in
//                lexicographic order, row-major within a block.
// The node count is N^m over the full lattice; nodes outside the ball carry
// zeros. The per-node block size is inferred from the file size.
struct GfldData {
  int m = 0, n = 0, N = 0;
  int comps = 0;
  std::vector<double> payload;  // N^m * comps
};

void write_gfld(const std::string& path, const domain::GridDomain& dom, int n,
                const domain::GridField& field);
GfldData read_gfld(const std::string& path);

// Interior values of a GFLD payload as a field on `dom` (zero boundary
// values; boundary data is reconstructed from configuration by callers).
domain::GridField field_from_gfld(const GfldData& data, const domain::GridDomain& dom, int rows,
                                  int cols);

}  // namespace gaugeforge::gfld
