#include "gaugeforge/gfld_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gaugeforge/errors.hpp"

namespace gaugeforge::gfld {

static_assert(std::endian::native == std::endian::little,
              "GFLD serialization assumes a little-endian host");

namespace {

void put_u32(std::ofstream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::ifstream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

void write_gfld(const std::string& path, const domain::GridDomain& dom, int n,
                const domain::GridField& field) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write("GFLD", 4);
  const std::uint16_t version = 1;
  os.write(reinterpret_cast<const char*>(&version), 2);
  put_u32(os, static_cast<std::uint32_t>(dom.m()));
  put_u32(os, static_cast<std::uint32_t>(n));
  put_u32(os, static_cast<std::uint32_t>(dom.N()));
  const int C = field.comps();
  std::vector<double> row(static_cast<std::size_t>(C), 0.0);
  for (std::int64_t flat = 0; flat < dom.lattice_size(); ++flat) {
    const int k = dom.interior_index(flat);
    const double* src = k >= 0 ? field.at(k) : row.data();
    os.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(8) * C);
  }
  if (!os) throw IoError("write failed: " + path);
}

GfldData read_gfld(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw IoError("cannot open: " + path);
  const std::int64_t size = static_cast<std::int64_t>(is.tellg());
  is.seekg(0);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GFLD", 4) != 0) throw IoError("bad magic: " + path);
  std::uint16_t version = 0;
  is.read(reinterpret_cast<char*>(&version), 2);
  if (version != 1) throw IoError("unsupported version in " + path);
  GfldData d;
  d.m = static_cast<int>(get_u32(is));
  d.n = static_cast<int>(get_u32(is));
  d.N = static_cast<int>(get_u32(is));
  if (d.m < 1 || d.m > domain::kMaxDim || d.N < 3) throw IoError("bad header in " + path);
  std::int64_t nodes = 1;
  for (int i = 0; i < d.m; ++i) nodes *= d.N;
  const std::int64_t body = size - 18;
  if (body <= 0 || body % (8 * nodes) != 0) throw IoError("truncated payload in " + path);
  d.comps = static_cast<int>(body / (8 * nodes));
  d.payload.resize(static_cast<std::size_t>(nodes) * d.comps);
  is.read(reinterpret_cast<char*>(d.payload.data()), body);
  if (!is) throw IoError("read failed: " + path);
  return d;
}

domain::GridField field_from_gfld(const GfldData& data, const domain::GridDomain& dom, int rows,
                                  int cols) {
  if (data.m != dom.m() || data.N != dom.N())
    throw IoError("field header does not match the domain");
  if (rows * cols != data.comps) throw IoError("component count mismatch");
  domain::GridField f = domain::make_field(dom, rows, cols);
  const int C = data.comps;
  for (int k = 0; k < dom.n_interior(); ++k) {
    const std::int64_t flat = dom.flat_of(k);
    std::memcpy(f.at(k), data.payload.data() + static_cast<std::size_t>(flat) * C,
                sizeof(double) * C);
  }
  return f;
}

}  // namespace gaugeforge::gfld
