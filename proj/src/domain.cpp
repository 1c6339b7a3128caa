#include "gaugeforge/domain.hpp"

#include <cmath>
#include <cstring>

#include "gaugeforge/errors.hpp"

namespace gaugeforge::domain {

namespace {

double sqr(double x) { return x * x; }

}  // namespace

GridDomain GridDomain::build(int m, int N) {
  if (m < 3 || m > kMaxDim) throw ConfigError("dimension m must be in [3, 5]");
  if (N < 9 || N % 2 == 0) throw ConfigError("N must be odd and >= 9");
  double lattice = std::pow(static_cast<double>(N), m);
  if (lattice > 5e8) throw ConfigError("lattice too large for desk scale");
  GridDomain d;
  d.init(m, N, BallSpec{});
  return d;
}

GridDomain GridDomain::sub(const GridDomain& parent, const std::array<double, kMaxDim>& center,
                           double radius) {
  const int m = parent.m();
  if (radius <= 0.0) throw ConfigError("sub-ball radius must be positive");
  if (2.0 * radius / parent.h() < 4.0)
    throw ConfigError("sub-ball too small: fewer than 5 nodes across");
  double c2 = 0.0;
  for (int d = 0; d < m; ++d) c2 += sqr(center[d] - parent.ball().center[d]);
  if (std::sqrt(c2) + radius + 2.0 * parent.h() > parent.ball().radius)
    throw ConfigError("sub-ball must lie inside the parent ball with a 2h margin");
  BallSpec spec;
  spec.center = center;
  spec.radius = radius;
  GridDomain d;
  d.init(m, parent.N(), spec);
  if (d.n_interior() == 0) throw ConfigError("sub-ball contains no lattice node");
  return d;
}

void GridDomain::init(int m, int N, const BallSpec& ball) {
  m_ = m;
  N_ = N;
  h_ = 2.0 / (N - 1);
  ball_ = ball;
  lattice_size_ = 1;
  for (int d = 0; d < m; ++d) lattice_size_ *= N;
  // Lexicographic order: axis 0 slowest, axis m-1 fastest.
  stride_[m - 1] = 1;
  for (int d = m - 2; d >= 0; --d) stride_[d] = stride_[d + 1] * N;

  interior_of_flat_.assign(static_cast<std::size_t>(lattice_size_), -1);
  const double R2 = sqr(ball.radius);
  std::array<int, kMaxDim> idx{};
  std::array<double, kMaxDim> x{};
  for (std::int64_t flat = 0; flat < lattice_size_; ++flat) {
    std::int64_t rem = flat;
    double r2 = 0.0;
    for (int d = 0; d < m; ++d) {
      idx[d] = static_cast<int>(rem / stride_[d]);
      rem %= stride_[d];
      x[d] = -1.0 + idx[d] * h_;
      r2 += sqr(x[d] - ball.center[d]);
    }
    if (r2 < R2) {
      interior_of_flat_[flat] = static_cast<int>(interior_flat_.size());
      interior_flat_.push_back(flat);
    }
  }

  const int n = n_interior();
  neigh_.assign(static_cast<std::size_t>(n) * 2 * m, 0);
  theta_.assign(static_cast<std::size_t>(n) * 2 * m, 1.0);
  cut_.assign(n, 0);
  for (int k = 0; k < n; ++k) {
    const std::int64_t flat = interior_flat_[k];
    double r2 = 0.0;
    std::int64_t rem = flat;
    for (int d = 0; d < m; ++d) {
      idx[d] = static_cast<int>(rem / stride_[d]);
      rem %= stride_[d];
      x[d] = -1.0 + idx[d] * h_;
      r2 += sqr(x[d] - ball.center[d]);
    }
    for (int d = 0; d < m; ++d) {
      const double xd = x[d] - ball.center[d];
      const double rho2 = r2 - sqr(xd);
      for (int s = 0; s < 2; ++s) {
        const int sv = s == 0 ? -1 : +1;
        const std::int64_t nb_flat = flat + sv * stride_[d];
        // An interior node never sits on the lattice edge, so nb_flat is valid.
        const int nb = (idx[d] + sv >= 0 && idx[d] + sv < N)
                           ? interior_of_flat_[nb_flat]
                           : -1;
        if (nb >= 0) {
          neigh_[(2 * static_cast<std::size_t>(k) + s) * m + d] = nb;
          continue;
        }
        // Arm meets the sphere: |xd + sv*theta*h|^2 = R^2 - rho2.
        const double b = sv * std::sqrt(std::max(R2 - rho2, 0.0));
        double theta = (b - xd) * sv / h_;
        if (theta > 1.0) theta = 1.0;
        if (theta < 1e-12) theta = 1e-12;
        BoundaryPoint bp;
        bp.node = k;
        bp.dir = d;
        bp.side = sv;
        bp.theta = theta;
        for (int e = 0; e < m; ++e) bp.x[e] = x[e];
        bp.x[d] = ball.center[d] + b;
        const int bidx = static_cast<int>(boundary_.size());
        boundary_.push_back(bp);
        neigh_[(2 * static_cast<std::size_t>(k) + s) * m + d] = -(bidx + 1);
        theta_[(2 * static_cast<std::size_t>(k) + s) * m + d] = theta;
        cut_[k] = 1;
      }
    }
  }
}

void GridDomain::coords(int k, double* x) const {
  std::int64_t rem = interior_flat_[k];
  for (int d = 0; d < m_; ++d) {
    x[d] = -1.0 + static_cast<int>(rem / stride_[d]) * h_;
    rem %= stride_[d];
  }
}

std::array<double, kMaxDim> GridDomain::coords(int k) const {
  std::array<double, kMaxDim> x{};
  coords(k, x.data());
  return x;
}

double GridDomain::cell_weight() const {
  double w = 1.0;
  for (int d = 0; d < m_; ++d) w *= h_;
  return w;
}

GridField make_field(const GridDomain& dom, int rows, int cols) {
  GridField f;
  f.dom = &dom;
  f.rows = rows;
  f.cols = cols;
  f.v.assign(static_cast<std::size_t>(dom.n_interior()) * rows * cols, 0.0);
  f.bv.assign(dom.boundary().size() * rows * cols, 0.0);
  return f;
}

GridField sample(const GridDomain& dom, int rows, int cols,
                 const std::function<void(const double*, double*)>& fn) {
  GridField f = make_field(dom, rows, cols);
  double x[kMaxDim];
  for (int k = 0; k < dom.n_interior(); ++k) {
    dom.coords(k, x);
    fn(x, f.at(k));
  }
  set_boundary(f, fn);
  return f;
}

void set_boundary(GridField& f, const std::function<void(const double*, double*)>& fn) {
  const auto& bps = f.dom->boundary();
  for (std::size_t b = 0; b < bps.size(); ++b) fn(bps[b].x.data(), f.bat(static_cast<int>(b)));
}

void set_boundary_constant(GridField& f, const double* block) {
  const int c = f.comps();
  for (std::size_t b = 0; b < f.dom->boundary().size(); ++b)
    std::memcpy(f.bat(static_cast<int>(b)), block, sizeof(double) * c);
}

void set_boundary_identity(GridField& f) {
  const int n = f.rows;
  for (std::size_t b = 0; b < f.dom->boundary().size(); ++b) {
    double* blk = f.bat(static_cast<int>(b));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) blk[i * n + j] = i == j ? 1.0 : 0.0;
  }
}

void raw_laplacian(const GridDomain& dom, int C, const double* x, const double* bv, double* y) {
  const int m = dom.m();
  const double inv_h2 = 1.0 / (dom.h() * dom.h());
  double acc[64];
  double zero[64] = {0.0};
  for (int k = 0; k < dom.n_interior(); ++k) {
    for (int c = 0; c < C; ++c) acc[c] = 0.0;
    const double* uc = x + static_cast<std::size_t>(k) * C;
    for (int d = 0; d < m; ++d) {
      const int nm = dom.neighbor(k, d, 0);
      const int np = dom.neighbor(k, d, 1);
      const double* um = nm >= 0 ? x + static_cast<std::size_t>(nm) * C
                                 : (bv ? bv + static_cast<std::size_t>(-nm - 1) * C : zero);
      const double* up = np >= 0 ? x + static_cast<std::size_t>(np) * C
                                 : (bv ? bv + static_cast<std::size_t>(-np - 1) * C : zero);
      const double tm = dom.arm(k, d, 0);
      const double tp = dom.arm(k, d, 1);
      if (tm == 1.0 && tp == 1.0) {
        for (int c = 0; c < C; ++c) acc[c] += (um[c] + up[c] - 2.0 * uc[c]) * inv_h2;
      } else {
        // Difference form: the center weight is exactly wm + wp, so constants
        // are annihilated exactly even at shortened arms.
        const double wm = 2.0 * inv_h2 / (tm * (tm + tp));
        const double wp = 2.0 * inv_h2 / (tp * (tm + tp));
        for (int c = 0; c < C; ++c) acc[c] += wm * (um[c] - uc[c]) + wp * (up[c] - uc[c]);
      }
    }
    double* o = y + static_cast<std::size_t>(k) * C;
    for (int c = 0; c < C; ++c) o[c] = acc[c];
  }
}

void raw_derivative(const GridDomain& dom, int axis, int C, const double* x, const double* bv,
                    double* y) {
  const double inv_2h = 0.5 / dom.h();
  const double inv_h = 1.0 / dom.h();
  double zero[64] = {0.0};
  for (int k = 0; k < dom.n_interior(); ++k) {
    const double* uc = x + static_cast<std::size_t>(k) * C;
    const int nm = dom.neighbor(k, axis, 0);
    const int np = dom.neighbor(k, axis, 1);
    const double* um = nm >= 0 ? x + static_cast<std::size_t>(nm) * C
                               : (bv ? bv + static_cast<std::size_t>(-nm - 1) * C : zero);
    const double* up = np >= 0 ? x + static_cast<std::size_t>(np) * C
                               : (bv ? bv + static_cast<std::size_t>(-np - 1) * C : zero);
    const double tm = dom.arm(k, axis, 0);
    const double tp = dom.arm(k, axis, 1);
    double* o = y + static_cast<std::size_t>(k) * C;
    if (tm == 1.0 && tp == 1.0) {
      for (int c = 0; c < C; ++c) o[c] = (up[c] - um[c]) * inv_2h;
    } else {
      // Exact on quadratics for unequal arms; difference form keeps the
      // weights summing to zero exactly, so constants map to exactly zero.
      const double denom = tm * tp * (tm + tp);
      const double am = -tp * tp / denom * inv_h;
      const double ap = tm * tm / denom * inv_h;
      for (int c = 0; c < C; ++c) o[c] = am * (um[c] - uc[c]) + ap * (up[c] - uc[c]);
    }
  }
}

GridField laplacian(const GridField& f) {
  GridField out = make_field(*f.dom, f.rows, f.cols);
  raw_laplacian(*f.dom, f.comps(), f.v.data(), f.bv.empty() ? nullptr : f.bv.data(),
                out.v.data());
  return out;
}

std::vector<GridField> gradient(const GridField& f) {
  const GridDomain& dom = *f.dom;
  const int m = dom.m();
  std::vector<GridField> out;
  out.reserve(m);
  for (int d = 0; d < m; ++d) {
    out.push_back(make_field(dom, f.rows, f.cols));
    raw_derivative(dom, d, f.comps(), f.v.data(), f.bv.empty() ? nullptr : f.bv.data(),
                   out[d].v.data());
  }
  return out;
}

GridField divergence(const std::vector<GridField>& F) {
  const GridDomain& dom = *F.at(0).dom;
  const int m = dom.m();
  const int C = F[0].comps();
  const double inv_2h = 0.5 / dom.h();
  const double inv_h = 1.0 / dom.h();
  GridField out = make_field(dom, F[0].rows, F[0].cols);
  for (int k = 0; k < dom.n_interior(); ++k) {
    double* o = out.at(k);
    for (int d = 0; d < m; ++d) {
      const GridField& Fd = F[d];
      const int nm = dom.neighbor(k, d, 0);
      const int np = dom.neighbor(k, d, 1);
      const double* uc = Fd.at(k);
      if (nm >= 0 && np >= 0) {
        const double* um = Fd.at(nm);
        const double* up = Fd.at(np);
        for (int c = 0; c < C; ++c) o[c] += (up[c] - um[c]) * inv_2h;
      } else if (nm >= 0) {
        const double* um = Fd.at(nm);
        for (int c = 0; c < C; ++c) o[c] += (uc[c] - um[c]) * inv_h;
      } else if (np >= 0) {
        const double* up = Fd.at(np);
        for (int c = 0; c < C; ++c) o[c] += (up[c] - uc[c]) * inv_h;
      }
    }
  }
  return out;
}

namespace {

double node_frobenius_sq(const double* v, int C) {
  double s = 0.0;
  for (int c = 0; c < C; ++c) s += v[c] * v[c];
  return s;
}

}  // namespace

double lp_norm(const GridField& f, double p, const BallSpec& region) {
  if (p < 1.0) throw ConfigError("lp_norm requires p >= 1");
  const GridDomain& dom = *f.dom;
  const int m = dom.m();
  const int C = f.comps();
  const double w = dom.cell_weight();
  const double R2 = region.radius * region.radius;
  double x[kMaxDim];
  double sum = 0.0;
  std::int64_t count = 0;
  for (int k = 0; k < dom.n_interior(); ++k) {
    dom.coords(k, x);
    double r2 = 0.0;
    for (int d = 0; d < m; ++d) r2 += sqr(x[d] - region.center[d]);
    if (r2 >= R2) continue;
    ++count;
    sum += w * std::pow(node_frobenius_sq(f.at(k), C), 0.5 * p);
  }
  if (count == 0) throw ConfigError("lp_norm: region contains no node");
  return std::pow(sum, 1.0 / p);
}

double lp_norm(const GridField& f, double p) {
  BallSpec whole = f.dom->ball();
  return lp_norm(f, p, whole);
}

double sobolev2_norm(const GridField& f, double q) { return lp_norm(laplacian(f), q); }

GridField mollify(const GridField& f, int passes) {
  const GridDomain& dom = *f.dom;
  const int m = dom.m();
  const int C = f.comps();
  GridField cur = f;
  double acc[64];
  for (int pass = 0; pass < passes; ++pass) {
    GridField next = cur;
    for (int k = 0; k < dom.n_interior(); ++k) {
      int cnt = 0;
      for (int c = 0; c < C; ++c) acc[c] = 0.0;
      for (int d = 0; d < m; ++d) {
        for (int s = 0; s < 2; ++s) {
          const int nb = dom.neighbor(k, d, s);
          if (nb < 0) continue;
          const double* u = cur.at(nb);
          for (int c = 0; c < C; ++c) acc[c] += u[c];
          ++cnt;
        }
      }
      const double* uc = cur.at(k);
      double* o = next.at(k);
      if (cnt == 0) {
        for (int c = 0; c < C; ++c) o[c] = uc[c];
      } else {
        const double wn = 0.5 / cnt;
        for (int c = 0; c < C; ++c) o[c] = 0.5 * uc[c] + wn * acc[c];
      }
    }
    cur = std::move(next);
  }
  return cur;
}

GridField restrict_to(const GridField& parent_field, const GridDomain& sub) {
  const GridDomain& par = *parent_field.dom;
  const int C = parent_field.comps();
  GridField out = make_field(sub, parent_field.rows, parent_field.cols);
  for (int k = 0; k < sub.n_interior(); ++k) {
    const int pk = par.interior_index(sub.flat_of(k));
    if (pk < 0) throw ConfigError("sub-domain node outside parent interior");
    std::memcpy(out.at(k), parent_field.at(pk), sizeof(double) * C);
  }
  return out;
}

void extrapolate_boundary(GridField& f, const GridField& parent_field) {
  const GridDomain& sub = *f.dom;
  const GridDomain& par = *parent_field.dom;
  const int C = f.comps();
  const auto& bps = sub.boundary();
  for (std::size_t b = 0; b < bps.size(); ++b) {
    const BoundaryPoint& bp = bps[b];
    const std::int64_t flat0 = sub.flat_of(bp.node);
    const std::int64_t step = bp.side * sub.axis_stride(bp.dir);
    const int p0 = par.interior_index(flat0);
    const int p1 = par.interior_index(flat0 - step);
    const int p2 = par.interior_index(flat0 - 2 * step);
    if (p0 < 0 || p1 < 0 || p2 < 0)
      throw ConfigError("arm extrapolation needs two parent nodes behind the sub-boundary");
    const double t = bp.theta;
    // Quadratic through samples at t = 0, -1, -2.
    const double w0 = 0.5 * (t + 1.0) * (t + 2.0);
    const double w1 = -t * (t + 2.0);
    const double w2 = 0.5 * t * (t + 1.0);
    const double* u0 = parent_field.at(p0);
    const double* u1 = parent_field.at(p1);
    const double* u2 = parent_field.at(p2);
    double* o = f.bat(static_cast<int>(b));
    for (int c = 0; c < C; ++c) o[c] = w0 * u0[c] + w1 * u1[c] + w2 * u2[c];
  }
}

void axpy(GridField& y, double a, const GridField& x) {
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
  for (std::size_t i = 0; i < y.bv.size(); ++i) y.bv[i] += a * x.bv[i];
}

GridField diff(const GridField& a, const GridField& b) {
  GridField out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.v[i];
  for (std::size_t i = 0; i < out.bv.size(); ++i) out.bv[i] -= b.bv[i];
  return out;
}

void scale(GridField& f, double a) {
  for (double& x : f.v) x *= a;
  for (double& x : f.bv) x *= a;
}

}  // namespace gaugeforge::domain
