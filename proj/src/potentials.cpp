#include "gaugeforge/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gaugeforge/errors.hpp"
#include "gaugeforge/liealg.hpp"

namespace gaugeforge::potentials {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kModes = 5;  // band-limited terms per matrix entry

struct Mode {
  double amp = 0.0;
  double phase = 0.0;
  int wave[domain::kMaxDim] = {};
};

// One trigonometric sum per strict upper-triangle entry, drawn in a fixed
// entry-major, mode-major order.
std::vector<std::vector<Mode>> draw_modes(int n, int mdim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int entries = n * (n - 1) / 2;
  std::vector<std::vector<Mode>> all(entries);
  for (int e = 0; e < entries; ++e) {
    all[e].resize(kModes);
    for (Mode& mode : all[e]) {
      mode.amp = (2.0 * liealg::uniform01(rng) - 1.0) / kModes;
      for (int d = 0; d < mdim; ++d) {
        const int w = static_cast<int>(liealg::uniform01(rng) * 5.0);  // 0..4
        mode.wave[d] = std::min(w, 4) - 2;                             // -2..2
      }
      mode.phase = 2.0 * kPi * liealg::uniform01(rng);
    }
  }
  return all;
}

double eval_entry(const std::vector<Mode>& modes, const double* x, int mdim) {
  double s = 0.0;
  for (const Mode& mode : modes) {
    double kx = 0.0;
    for (int d = 0; d < mdim; ++d) kx += mode.wave[d] * x[d];
    s += mode.amp * std::sin(kPi * kx + mode.phase);
  }
  return s;
}

domain::MatrixField random_field(const domain::GridDomain& dom, int n, std::uint64_t seed) {
  const int mdim = dom.m();
  const auto modes = draw_modes(n, mdim, seed);
  return domain::sample(dom, n, n, [&](const double* x, double* out) {
    int e = 0;
    for (int i = 0; i < n; ++i) out[i * n + i] = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++e) {
        const double v = eval_entry(modes[e], x, mdim);
        out[i * n + j] = v;
        out[j * n + i] = -v;
      }
    }
  });
}

domain::MatrixField constant_field(const domain::GridDomain& dom, int n) {
  return domain::sample(dom, n, n, [&](const double*, double* out) {
    std::fill(out, out + n * n, 0.0);
    out[0 * n + 1] = 1.0;
    out[1 * n + 0] = -1.0;
  });
}

}  // namespace

gauge::AntisymmetricPotential generate(const domain::GridDomain& dom, int n,
                                       const std::string& kind, std::uint64_t seed,
                                       double target_norm, int smoothness_passes) {
  if (n < 2 || n > 8) throw ConfigError("potential dimension must lie in [2, 8]");
  if (smoothness_passes < 1) throw ConfigError("potential needs at least one averaging pass");
  if (!(target_norm >= 0.0)) throw ConfigError("potential target norm must be >= 0");

  domain::MatrixField f;
  if (kind == "zero") {
    f = domain::make_field(dom, n, n);
  } else if (kind == "constant") {
    f = constant_field(dom, n);
  } else if (kind == "random") {
    f = random_field(dom, n, seed);
  } else {
    throw ConfigError("unknown potential kind '" + kind + "'");
  }
  std::fill(f.bv.begin(), f.bv.end(), 0.0);
  f = domain::mollify(f, smoothness_passes);

  gauge::AntisymmetricPotential pot = gauge::make_potential(std::move(f), smoothness_passes);
  if (kind != "zero" && pot.l_half_m_norm > 0.0) {
    domain::scale(pot.omega, target_norm / pot.l_half_m_norm);
    pot = gauge::make_potential(std::move(pot.omega), smoothness_passes);
  }
  return pot;
}

}  // namespace gaugeforge::potentials
