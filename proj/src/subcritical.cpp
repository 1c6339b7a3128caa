#include "gaugeforge/subcritical.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "gaugeforge/errors.hpp"
#include "gaugeforge/liealg.hpp"
#include "gaugeforge/nodemat.hpp"

namespace gaugeforge::subcritical {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(const clock_type::time_point& t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void check_tol(double tol) {
  if (!(tol > 1e-14 && tol < 1e-4)) throw ConfigError("solver tolerance outside (1e-14, 1e-4)");
}

void check_vector_shape(const GridField& v, const char* what) {
  if (v.dom == nullptr) throw ConfigError(std::string(what) + " has no domain");
  if (v.cols != 1 || v.rows < 1) throw ConfigError(std::string(what) + " is not a vector field");
}

void check_matched(const MatrixField& A, const VectorField& v) {
  if (A.dom == nullptr || v.dom == nullptr) throw ConfigError("field has no domain");
  if (A.dom != v.dom) throw ConfigError("coefficient and state live on different domains");
  if (A.rows != A.cols) throw ConfigError("coefficient blocks are not square");
  if (v.cols != 1 || v.rows != A.rows)
    throw ConfigError("state block shape does not match coefficient");
}

void check_boundary_data(const GridDomain& dom, int n, const std::vector<double>& g_bv) {
  const std::size_t blen = dom.boundary().size() * static_cast<std::size_t>(n);
  if (!g_bv.empty() && g_bv.size() != blen)
    throw ConfigError("boundary data length does not match domain");
}

// y = divergence of the antisymmetric face fluxes of x against coefficient A.
// bv may be null (zero Dirichlet data for the state; the coefficient always
// has boundary blocks).
void apply_conservation(const GridDomain& dom, const MatrixField& A, const double* x,
                        const double* bv, double* y) {
  const int n = A.rows;
  const int mdim = dom.m();
  const double h = dom.h();
  const int nk = dom.n_interior();
  constexpr int kMaxN = 8;  // matches the heap-free kernel cap
  const double zeros[kMaxN] = {};
  double flux[kMaxN];
  for (int k = 0; k < nk; ++k) {
    double* yk = y + static_cast<std::size_t>(k) * n;
    std::fill(yk, yk + n, 0.0);
    const double* Ak = A.at(k);
    const double* vk = x + static_cast<std::size_t>(k) * n;
    for (int d = 0; d < mdim; ++d) {
      const double tm = dom.arm(k, d, 0);
      const double tp = dom.arm(k, d, 1);
      const double inv_cell = 2.0 / ((tm + tp) * h);
      for (int s = 0; s < 2; ++s) {
        const int nb = dom.neighbor(k, d, s);
        const double* An;
        const double* vn;
        if (nb >= 0) {
          An = A.at(nb);
          vn = x + static_cast<std::size_t>(nb) * n;
        } else {
          const int b = -(nb + 1);
          An = A.bat(b);
          vn = bv ? bv + static_cast<std::size_t>(b) * n : zeros;
        }
        // Outward flux through the face between k and its side-s neighbor is
        // (A(k) v(nb) - A(nb) v(k)) / arm length on both sides; the node
        // divergence is the sum of outward fluxes over the cell width.
        const double invl = 1.0 / ((s == 0 ? tm : tp) * h);
        mat_mul(Ak, vn, flux, n, n, 1);
        mat_mul_add(An, vk, flux, n, n, 1, -1.0);
        const double w = invl * inv_cell;
        for (int c = 0; c < n; ++c) yk[c] += w * flux[c];
      }
    }
  }
}

struct LogFit {
  double slope = 0.0;
  int points = 0;
};

// Least-squares slope of log(vals) against log(rs); nonpositive values are
// skipped. Fewer than two usable points yields slope 0.
LogFit fit_loglog(const std::vector<double>& rs, const std::vector<double>& vals) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (vals[i] > 0.0 && rs[i] > 0.0) {
      lx.push_back(std::log(rs[i]));
      ly.push_back(std::log(vals[i]));
    }
  }
  LogFit fit;
  fit.points = static_cast<int>(lx.size());
  if (fit.points < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < fit.points; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= fit.points;
  my /= fit.points;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < fit.points; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  return fit;
}

// Geometric radius ladder from rmax down to rmin (factor 0.8).
std::vector<double> radius_ladder(double rmax, double rmin) {
  std::vector<double> rs;
  for (double r = rmax; r >= rmin - 1e-12; r *= 0.8) rs.push_back(r);
  return rs;
}

double frob(const double* a, int c) {
  double s = 0.0;
  for (int i = 0; i < c; ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

}  // namespace

StateField solve_direct(const AntisymmetricPotential& omega, const std::vector<double>& g_bv,
                        double tol) {
  check_tol(tol);
  const GridDomain& dom = *omega.omega.dom;
  const int n = omega.n();
  check_boundary_data(dom, n, g_bv);

  elliptic::LinearOperatorSpec spec;
  spec.dom = &dom;
  spec.rows = n;
  spec.cols = 1;
  spec.zero_order_left = omega.omega;  // second difference of v plus omega v
  GridField rhs = domain::make_field(dom, n, 1);
  auto [v, rep] = elliptic::solve_perturbed(spec, rhs, g_bv, tol);
  return StateField{std::move(v), "direct", rep};
}

VectorField gauge_transform(const MatrixField& A, const VectorField& v) {
  check_matched(A, v);
  const GridDomain& dom = *A.dom;
  const int n = A.rows;
  VectorField w = domain::make_field(dom, n, 1);
  for (int k = 0; k < dom.n_interior(); ++k) mat_mul(A.at(k), v.at(k), w.at(k), n, n, 1);
  for (std::size_t b = 0; b < dom.boundary().size(); ++b)
    mat_mul(A.bat(static_cast<int>(b)), v.bat(static_cast<int>(b)),
            w.bat(static_cast<int>(b)), n, n, 1);
  return w;
}

double conservation_residual(const MatrixField& A, const VectorField& v) {
  check_matched(A, v);
  const GridDomain& dom = *A.dom;
  const int n = A.rows;
  const int mdim = dom.m();

  std::vector<GridField> gv = domain::gradient(v);
  std::vector<GridField> gA = domain::gradient(A);
  std::vector<GridField> F;
  F.reserve(mdim);
  for (int d = 0; d < mdim; ++d) {
    GridField f = domain::make_field(dom, n, 1);
    for (int k = 0; k < dom.n_interior(); ++k) {
      mat_mul(A.at(k), gv[d].at(k), f.at(k), n, n, 1);
      mat_mul_add(gA[d].at(k), v.at(k), f.at(k), n, n, 1, -1.0);
    }
    F.push_back(std::move(f));
  }
  GridField divF = domain::divergence(F);
  domain::BallSpec region = dom.ball();
  region.radius -= 2.0 * dom.h();
  return domain::lp_norm(divF, 1.0, region);
}

StateField solve_conservation(const MatrixField& A, const std::vector<double>& g_bv, double tol) {
  check_tol(tol);
  if (A.dom == nullptr) throw ConfigError("coefficient has no domain");
  if (A.rows != A.cols) throw ConfigError("coefficient blocks are not square");
  if (A.rows > 8) throw ConfigError("coefficient blocks exceed the kernel cap");
  const GridDomain& dom = *A.dom;
  const int n = A.rows;
  check_boundary_data(dom, n, g_bv);
  const int nk = dom.n_interior();
  const std::size_t len = static_cast<std::size_t>(nk) * n;

  const auto t0 = clock_type::now();
  // Affine split around the boundary mean, as in the point-form solvers:
  // with e carrying the data, solve the zero-boundary system L u0 = -L e.
  std::vector<double> b(len, 0.0);
  GridField e = domain::make_field(dom, n, 1);
  if (!g_bv.empty()) {
    std::vector<double> gbar(n, 0.0);
    for (std::size_t i = 0; i < g_bv.size(); ++i) gbar[i % n] += g_bv[i];
    for (int c = 0; c < n; ++c) gbar[c] /= static_cast<double>(dom.boundary().size());
    for (std::size_t i = 0; i < len; ++i) e.v[i] = gbar[i % n];
    std::copy(g_bv.begin(), g_bv.end(), e.bv.begin());
    apply_conservation(dom, A, e.v.data(), e.bv.data(), b.data());
    for (double& bi : b) bi = -bi;
  }

  elliptic::LaplacePrecond pre(dom);
  elliptic::krylov::Apply Aop = [&](const double* in, double* out) {
    apply_conservation(dom, A, in, nullptr, out);
  };
  elliptic::krylov::Apply M = [&](const double* in, double* out) { pre.apply(n, in, out); };

  std::vector<double> x(len, 0.0);
  elliptic::krylov::Outcome oc =
      elliptic::krylov::bicgstab(len, Aop, M, b.data(), x.data(), tol, 4000);
  elliptic::SolveReport rep;
  rep.iterations = oc.iterations;
  rep.relative_residual = oc.relative_residual;
  rep.converged = oc.converged;
  rep.wall_time = seconds_since(t0);
  rep.method = pre.kind() == elliptic::LaplacePrecond::Kind::ssor ? "bicgstab(ssor)"
                                                                  : "bicgstab(jacobi)";
  if (!oc.converged)
    throw SolverError("conservation solve diverged: relative residual " +
                      std::to_string(oc.relative_residual) + " after " +
                      std::to_string(oc.iterations) + " iterations");

  GridField u = domain::make_field(dom, n, 1);
  std::copy(x.begin(), x.end(), u.v.begin());
  if (!g_bv.empty()) {
    for (std::size_t i = 0; i < len; ++i) u.v[i] += e.v[i];
    std::copy(g_bv.begin(), g_bv.end(), u.bv.begin());
  }
  return StateField{std::move(u), "conservation", rep};
}

LocalDecomposition local_decomposition(const MatrixField& A, const VectorField& v,
                                       const double* x0, double r, double tol) {
  check_tol(tol);
  check_matched(A, v);
  const GridDomain& dom = *A.dom;
  const int n = A.rows;
  const int mdim = dom.m();
  if (!(r > 0.0)) throw ConfigError("sub-ball radius must be positive");
  if (2.0 * r < 4.0 * dom.h())
    throw ConfigError("sub-ball spans fewer than 5 lattice nodes across");

  std::array<double, domain::kMaxDim> c{};
  for (int d = 0; d < mdim; ++d) c[d] = x0[d];
  auto subdom = std::make_unique<GridDomain>(GridDomain::sub(dom, c, r));

  VectorField w_par = gauge_transform(A, v);

  // Commutator source of w on the parent grid: per axis (d_d A) A^{-1} w,
  // assembled with full parent stencils before restriction.
  std::vector<GridField> gA = domain::gradient(A);
  std::vector<GridField> H;
  H.reserve(mdim);
  for (int d = 0; d < mdim; ++d) H.push_back(domain::make_field(dom, n, 1));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 8, 8> Am(n, n);
  liealg::VecN wk(n), t(n);
  for (int k = 0; k < dom.n_interior(); ++k) {
    std::memcpy(Am.data(), A.at(k), sizeof(double) * n * n);
    std::memcpy(wk.data(), w_par.at(k), sizeof(double) * n);
    t = Am.partialPivLu().solve(wk);
    for (int d = 0; d < mdim; ++d) mat_mul(gA[d].at(k), t.data(), H[d].at(k), n, n, 1);
  }
  GridField divH = domain::divergence(H);

  GridField rhs = domain::restrict_to(divH, *subdom);
  domain::scale(rhs, 2.0);
  auto [phi, rep] = elliptic::solve_dirichlet(rhs, {}, tol);

  VectorField w = domain::restrict_to(w_par, *subdom);
  domain::extrapolate_boundary(w, w_par);
  VectorField xi = domain::diff(w, phi);

  LocalDecomposition out;
  out.sub = std::move(subdom);
  out.w = std::move(w);
  out.phi = std::move(phi);
  out.xi = std::move(xi);
  out.report = rep;
  return out;
}

DecayReport decay_experiment(const MatrixField& A, const VectorField& v,
                             const std::vector<std::vector<double>>& centers,
                             const std::vector<double>& radii, double lambda) {
  check_matched(A, v);
  const GridDomain& dom = *A.dom;
  const int mdim = dom.m();
  const double R = dom.ball().radius;
  const double h = dom.h();
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("shrink factor must lie in (0, 1)");
  if (centers.empty() || radii.empty()) throw ConfigError("need at least one center and radius");
  if (mdim <= 2) throw ConfigError("decay exponent needs dimension at least 3");
  const double p = static_cast<double>(mdim) / (mdim - 2);

  for (const auto& cc : centers) {
    if (static_cast<int>(cc.size()) != mdim) throw ConfigError("center dimension mismatch");
    double nrm = 0.0;
    for (int d = 0; d < mdim; ++d) {
      const double dx = cc[d] - dom.ball().center[d];
      nrm += dx * dx;
    }
    if (std::sqrt(nrm) > 0.5 * R + 1e-12)
      throw ConfigError("decay centers must lie in the half-radius ball");
  }
  for (double r : radii) {
    if (!(r > 0.0) || r > 0.25 * R + 1e-12)
      throw ConfigError("decay radii must lie in (0, R/4]");
    if (lambda * r < h) throw ConfigError("shrunken ball falls below grid resolution");
  }

  DecayReport rep;
  rep.centers = centers;
  rep.radii = radii;
  rep.lambda = lambda;

  domain::ScalarField gmagA = gauge::gradient_magnitude(A);

  for (const auto& cc : centers) {
    domain::BallSpec around{};
    for (int d = 0; d < mdim; ++d) around.center[d] = cc[d];
    for (double r : radii) {
      LocalDecomposition loc = local_decomposition(A, v, cc.data(), r, 1e-10);
      domain::BallSpec inner = around;
      inner.radius = lambda * r;
      const double w_in = std::pow(domain::lp_norm(loc.w, p, inner), p);
      const double w_all = std::pow(domain::lp_norm(loc.w, p), p);
      const double xi_in = std::pow(domain::lp_norm(loc.xi, p, inner), p);
      const double xi_all = std::pow(domain::lp_norm(loc.xi, p), p);
      rep.ratios.push_back(w_all > 0.0 ? w_in / w_all : 0.0);
      rep.harmonic_ratios.push_back(xi_all > 0.0 ? xi_in / xi_all : 0.0);

      // Measured constant of the source-part bound:
      //   integral |phi|^p  <=  C sup|A^{-1}| (integral |grad A|^m)^{1/(m-2)}
      //                           * integral |w|^p   over B_r(x0).
      const double phi_all = std::pow(domain::lp_norm(loc.phi, p), p);
      domain::BallSpec outer = around;
      outer.radius = r;
      double ainv_max = 0.0;
      {
        const int n = A.rows;
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 8, 8> Am(n, n),
            Inv(n, n);
        std::array<double, domain::kMaxDim> xk{};
        for (int k = 0; k < dom.n_interior(); ++k) {
          dom.coords(k, xk.data());
          double dist = 0.0;
          for (int d = 0; d < mdim; ++d) dist += (xk[d] - cc[d]) * (xk[d] - cc[d]);
          if (dist >= r * r) continue;
          std::memcpy(Am.data(), A.at(k), sizeof(double) * n * n);
          Inv = Am.partialPivLu().inverse();
          ainv_max = std::max(ainv_max, frob(Inv.data(), n * n));
        }
      }
      const double grad_mass = std::pow(domain::lp_norm(gmagA, mdim, outer), mdim);
      const double grad_factor = std::pow(grad_mass, 1.0 / (mdim - 2));
      const double denom = ainv_max * grad_factor * w_all;
      rep.phi_bound_consts.push_back(denom > 1e-300 ? phi_all / denom : 0.0);
    }
  }

  // Mass-growth exponent of v itself over a radius ladder clear of the
  // discretization floor; the reported value is the worst (smallest) slope.
  const std::vector<double> ladder = radius_ladder(0.25 * R, 4.0 * h);
  if (ladder.size() >= 2) {
    double gmin = 0.0;
    bool any = false;
    for (const auto& cc : centers) {
      domain::BallSpec ball{};
      for (int d = 0; d < mdim; ++d) ball.center[d] = cc[d];
      std::vector<double> masses;
      masses.reserve(ladder.size());
      for (double r : ladder) {
        ball.radius = r;
        masses.push_back(std::pow(domain::lp_norm(v, p, ball), p));
      }
      const LogFit fit = fit_loglog(ladder, masses);
      if (fit.points >= 2) {
        gmin = any ? std::min(gmin, fit.slope) : fit.slope;
        any = true;
        rep.gamma_points = std::max(rep.gamma_points, fit.points);
      }
    }
    rep.gamma_hat = any ? gmin : 0.0;
  }
  return rep;
}

IntegrabilityReport integrability_report(const VectorField& v, std::vector<double> exponents) {
  check_vector_shape(v, "state");
  const GridDomain& dom = *v.dom;
  const int mdim = dom.m();
  if (mdim <= 2) throw ConfigError("integrability exponents need dimension at least 3");
  const double p0 = static_cast<double>(mdim) / (mdim - 2);
  if (exponents.empty()) exponents = {p0, p0 + 0.5, 2.0 * p0};

  IntegrabilityReport rep;
  rep.exponents = std::move(exponents);
  domain::BallSpec half = dom.ball();
  half.radius *= 0.5;
  for (double p : rep.exponents) {
    if (!(p >= 1.0)) throw ConfigError("integrability exponents must be >= 1");
    rep.norms.push_back(domain::lp_norm(v, p, half));
  }

  GridField lap = domain::laplacian(v);
  rep.radii = radius_ladder(0.5 * dom.ball().radius, 4.0 * dom.h());
  if (rep.radii.size() < 2) rep.radii.clear();
  domain::BallSpec ball = dom.ball();
  for (double r : rep.radii) {
    ball.radius = r;
    rep.laplace_mass.push_back(domain::lp_norm(lap, 1.0, ball));
  }
  const LogFit fit = fit_loglog(rep.radii, rep.laplace_mass);
  rep.gamma_fit = fit.slope;
  rep.gamma_points = fit.points;
  return rep;
}

VectorField manufactured_field(const GridDomain& dom, const double* kvec, const double* lvec) {
  const int mdim = dom.m();
  return domain::sample(dom, 2, 1, [&](const double* x, double* out) {
    double kx = 0.0, lx = 0.0;
    for (int d = 0; d < mdim; ++d) {
      kx += kvec[d] * x[d];
      lx += lvec[d] * x[d];
    }
    const double g = std::exp(kx);
    out[0] = g * std::cos(lx);
    out[1] = g * std::sin(lx);
  });
}

AntisymmetricPotential manufactured_potential(const GridDomain& dom, const double* kvec,
                                              const double* lvec) {
  const int mdim = dom.m();
  double k2 = 0.0, l2 = 0.0, kl = 0.0;
  for (int d = 0; d < mdim; ++d) {
    k2 += kvec[d] * kvec[d];
    l2 += lvec[d] * lvec[d];
    kl += kvec[d] * lvec[d];
  }
  if (std::fabs(k2 - l2) > 1e-12)
    throw ConfigError("planar family needs equal-length wave vectors");
  const double c = 2.0 * kl;
  MatrixField om = domain::sample(dom, 2, 2, [&](const double*, double* out) {
    out[0] = 0.0;
    out[1] = c;
    out[2] = -c;
    out[3] = 0.0;
  });
  std::fill(om.bv.begin(), om.bv.end(), 0.0);
  // One averaging pass; exact on this constant field, recorded honestly.
  om = domain::mollify(om, 1);
  return gauge::make_potential(std::move(om), 1);
}

}  // namespace gaugeforge::subcritical
