#include "gaugeforge/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "gaugeforge/errors.hpp"
#include "gaugeforge/liealg.hpp"
#include "gaugeforge/nodemat.hpp"

namespace gaugeforge::gauge {

using domain::BallSpec;
using domain::laplacian;
using domain::lp_norm;
using domain::make_field;
using domain::set_boundary_identity;
using elliptic::LinearOperatorSpec;
using liealg::MatN;

namespace {

void mat_into_block(const MatN& M, double* p, int n) {
  std::memcpy(p, M.data(), sizeof(double) * static_cast<std::size_t>(n) * n);
}

MatrixField exp_field(const MatrixField& U) {
  const int n = U.rows;
  MatrixField P = make_field(*U.dom, n, n);
  MatN u(n, n);
  for (int k = 0; k < U.dom->n_interior(); ++k) {
    std::memcpy(u.data(), U.at(k), sizeof(double) * static_cast<std::size_t>(n) * n);
    mat_into_block(liealg::exp_so(u), P.at(k), n);
  }
  set_boundary_identity(P);
  return P;
}

// One linearization point: frame P = exp(U), its conjugated second difference
// W = P^T Delta_h P, the residual R = skew(W) + omega_t, and the monitors.
struct StateEval {
  MatrixField P;
  MatrixField W;
  MatrixField R;
  double residual_norm = 0.0;
  double skew_norm = 0.0;  // || W - W^T ||_{L^p}
  double eps0 = 0.0;
  double eps1 = 0.0;
};

StateEval evaluate_state(const MatrixField& U, const MatrixField& omega_t, double p) {
  const GridDomain& dom = *U.dom;
  const int n = U.rows;
  const int nk = dom.n_interior();
  StateEval ev;
  ev.P = exp_field(U);
  const MatrixField LP = laplacian(ev.P);
  ev.W = make_field(dom, n, n);
  ev.R = make_field(dom, n, n);
  MatrixField skew = make_field(dom, n, n);
  for (int k = 0; k < nk; ++k) {
    mat_tmul(ev.P.at(k), LP.at(k), ev.W.at(k), n, n, n);
    mat_skew_part(ev.W.at(k), n, skew.at(k));
    const double* s = skew.at(k);
    const double* o = omega_t.at(k);
    double* r = ev.R.at(k);
    for (int c = 0; c < n * n; ++c) r[c] = s[c] + o[c];
  }
  ev.residual_norm = lp_norm(ev.R, p);
  ev.skew_norm = 2.0 * lp_norm(skew, p);
  ev.eps0 = gradient_energy(ev.P);
  ev.eps1 = lp_norm(LP, p);
  return ev;
}

void check_monitors(const StateEval& ev, const ContinuationConfig& cfg, int stage) {
  if (!(ev.eps0 < cfg.eps0_monitor)) {
    std::ostringstream msg;
    msg << "frame gradient energy " << ev.eps0 << " reached the eps0 monitor "
        << cfg.eps0_monitor << " at continuation stage " << stage;
    throw MonitorError("eps0", stage, msg.str());
  }
  if (!(ev.eps1 < cfg.eps1_monitor)) {
    std::ostringstream msg;
    msg << "second-order frame proxy " << ev.eps1 << " reached the eps1 monitor "
        << cfg.eps1_monitor << " at continuation stage " << stage;
    throw MonitorError("eps1", stage, msg.str());
  }
}

LinearOperatorSpec jacobian_spec(const GridDomain& dom, const MatrixField& P,
                                 const MatrixField& W) {
  LinearOperatorSpec spec;
  spec.dom = &dom;
  spec.rows = P.rows;
  spec.cols = P.cols;
  spec.conj_frame = P;
  spec.conj_w = W;
  return spec;
}

}  // namespace

AntisymmetricPotential make_potential(MatrixField omega, int smoothness_passes) {
  if (omega.dom == nullptr || omega.rows != omega.cols) {
    throw ConfigError("potential must be a square matrix field on a grid domain");
  }
  const int n = omega.rows;
  for (int k = 0; k < omega.dom->n_interior(); ++k) {
    const double* a = omega.at(k);
    for (int i = 0; i < n; ++i) {
      if (a[i * n + i] != 0.0) throw ConfigError("potential has a non-zero diagonal entry");
      for (int j = i + 1; j < n; ++j) {
        if (a[i * n + j] != -a[j * n + i]) {
          throw ConfigError("potential is not exactly antisymmetric node-wise");
        }
      }
    }
  }
  AntisymmetricPotential pot;
  pot.l_half_m_norm = lp_norm(omega, omega.dom->m() / 2.0);
  pot.smoothness_passes = smoothness_passes;
  pot.omega = std::move(omega);
  return pot;
}

MatrixField residual_F(const MatrixField& U, const AntisymmetricPotential& omega) {
  if (U.dom != omega.omega.dom || U.rows != omega.n() || U.cols != omega.n()) {
    throw ConfigError("logarithm field does not match the potential");
  }
  StateEval ev = evaluate_state(U, omega.omega, U.dom->m() / 2.0);
  return std::move(ev.R);
}

MatrixField linearized_apply(const MatrixField& P0, const MatrixField& omega0,
                             const MatrixField& zeta) {
  // omega0 is determined by P0 (2 omega0 = W^T - W); the exact derivative
  // needs the full conjugated second difference W, so it is recomputed here.
  (void)omega0;
  const GridDomain& dom = *P0.dom;
  const int n = P0.rows;
  const MatrixField LP = laplacian(P0);
  MatrixField W = make_field(dom, n, n);
  for (int k = 0; k < dom.n_interior(); ++k) {
    mat_tmul(P0.at(k), LP.at(k), W.at(k), n, n, n);
  }
  return elliptic::apply_operator(jacobian_spec(dom, P0, W), zeta);
}

domain::ScalarField gradient_magnitude(const MatrixField& P) {
  const GridDomain& dom = *P.dom;
  const std::vector<GridField> dP = domain::gradient(P);
  domain::ScalarField g = make_field(dom, 1, 1);
  const int C = P.comps();
  for (int k = 0; k < dom.n_interior(); ++k) {
    double s = 0.0;
    for (int d = 0; d < dom.m(); ++d) {
      const double* block = dP[d].at(k);
      for (int c = 0; c < C; ++c) s += block[c] * block[c];
    }
    g.at(k)[0] = std::sqrt(s);
  }
  return g;
}

double gradient_energy(const MatrixField& P) {
  const double m = static_cast<double>(P.dom->m());
  const double nrm = lp_norm(gradient_magnitude(P), m);
  return std::pow(nrm, m);
}

PResult construct_P(const AntisymmetricPotential& omega, const ContinuationConfig& cfg) {
  const GridDomain& dom = *omega.omega.dom;
  const int n = omega.n();
  if (cfg.steps < 1 || cfg.newton_max < 1) {
    throw ConfigError("continuation needs at least one stage and one Newton step");
  }
  if (!(cfg.newton_tol > 0.0) || !(cfg.eps0_monitor > 0.0) || !(cfg.eps1_monitor > 0.0)) {
    throw ConfigError("continuation tolerances and monitors must be positive");
  }
  if (omega.smoothness_passes < 1) {
    throw ConfigError("potential must be smoothed at least once before gauge construction");
  }
  // Beyond this size the homotopy has no tested convergence radius.
  if (omega.l_half_m_norm > 1.0) {
    throw ConfigError("potential norm exceeds the supported continuation range");
  }

  const double p = dom.m() / 2.0;
  const double scale = std::max(1.0, omega.l_half_m_norm);
  const double target = cfg.newton_tol * scale;

  MatrixField U = make_field(dom, n, n);
  MatrixField prev1 = make_field(dom, n, n);
  MatrixField prev2 = make_field(dom, n, n);

  PResult out;
  MatrixField final_P = exp_field(U);
  MatN ublock(n, n), zblock(n, n);

  for (int s = 1; s <= cfg.steps; ++s) {
    const double t = static_cast<double>(s) / cfg.steps;
    MatrixField omega_t = omega.omega;
    domain::scale(omega_t, t);

    StageTrace st;
    st.t = t;

    StateEval ev = evaluate_state(U, omega_t, p);
    if (s >= 3) {
      // Secant predictor: extrapolate the previous two stage solutions.
      MatrixField cand = prev1;
      domain::scale(cand, 2.0);
      domain::axpy(cand, -1.0, prev2);
      StateEval evc = evaluate_state(cand, omega_t, p);
      if (evc.residual_norm < ev.residual_norm) {
        U = std::move(cand);
        ev = std::move(evc);
        st.predictor_used = true;
      }
    }

    int iterations = 0;
    while (true) {
      st.residuals.push_back(ev.residual_norm);
      check_monitors(ev, cfg, s);
      if (ev.residual_norm <= target) break;
      if (iterations >= cfg.newton_max) {
        std::ostringstream msg;
        msg << "Newton residual " << ev.residual_norm << " still above " << target << " after "
            << iterations << " steps at continuation stage " << s;
        throw MonitorError("newton_divergence", s, msg.str());
      }

      MatrixField rhs = ev.R;
      domain::scale(rhs, -1.0);
      const double inner_tol =
          std::clamp(0.01 * ev.residual_norm / scale, 2e-12, 9e-5);
      MatrixField zeta;
      try {
        zeta = elliptic::solve_perturbed(jacobian_spec(dom, ev.P, ev.W), rhs, {}, inner_tol)
                   .first;
      } catch (const SolverError& err) {
        throw MonitorError("linear_solver", s, err.what());
      }

      if (n == 2) {
        // so(2) is abelian: the exponential chart is additive.
        domain::axpy(U, 1.0, zeta);
      } else {
        try {
          for (int k = 0; k < dom.n_interior(); ++k) {
            std::memcpy(ublock.data(), U.at(k), sizeof(double) * static_cast<std::size_t>(n) * n);
            std::memcpy(zblock.data(), zeta.at(k),
                        sizeof(double) * static_cast<std::size_t>(n) * n);
            const MatN eta = liealg::dexp_conj_inverse(ublock, zblock);
            double* u = U.at(k);
            for (int c = 0; c < n * n; ++c) u[c] += eta.data()[c];
          }
        } catch (const SolverError& err) {
          std::ostringstream msg;
          msg << "Newton update left the exponential chart at continuation stage " << s << ": "
              << err.what();
          throw MonitorError("newton_divergence", s, msg.str());
        }
      }

      ++iterations;
      ev = evaluate_state(U, omega_t, p);
    }

    st.newton_iterations = iterations;
    st.eps0 = ev.eps0;
    st.eps1 = ev.eps1;
    st.lemma_ratio = ev.skew_norm > 1e-300 ? ev.eps1 / ev.skew_norm : 0.0;
    out.trace.total_newton_iterations += iterations;
    out.trace.stages.push_back(std::move(st));

    prev2 = std::move(prev1);
    prev1 = U;
    final_P = std::move(ev.P);
  }

  out.U = std::move(U);
  out.P = std::move(final_P);
  return out;
}

FrameCoefficients frame_coefficients(const MatrixField& P) {
  const GridDomain& dom = *P.dom;
  const int n = P.rows;
  const std::vector<GridField> dP = domain::gradient(P);
  FrameCoefficients fc;
  fc.grad_sq = make_field(dom, n, n);
  MatN pm(n, n), dm(n, n);
  for (int d = 0; d < dom.m(); ++d) {
    MatrixField a = make_field(dom, n, n);
    for (int k = 0; k < dom.n_interior(); ++k) {
      std::memcpy(pm.data(), P.at(k), sizeof(double) * static_cast<std::size_t>(n) * n);
      std::memcpy(dm.data(), dP[d].at(k), sizeof(double) * static_cast<std::size_t>(n) * n);
      const MatN ad = liealg::antisymmetrize(dm * pm.transpose());
      mat_into_block(ad, a.at(k), n);
      const MatN g = liealg::gram(ad);
      double* acc = fc.grad_sq.at(k);
      for (int c = 0; c < n * n; ++c) acc[c] += g.data()[c];
    }
    fc.a.push_back(std::move(a));
  }
  return fc;
}

QResult construct_Q(const MatrixField& P, double tol) {
  const GridDomain& dom = *P.dom;
  const int n = P.rows;
  if (n != P.cols) throw ConfigError("frame field must be square");

  FrameCoefficients fc = frame_coefficients(P);
  LinearOperatorSpec spec;
  spec.dom = &dom;
  spec.rows = n;
  spec.cols = n;
  for (int d = 0; d < dom.m(); ++d) {
    MatrixField two_a = fc.a[d];
    domain::scale(two_a, 2.0);
    spec.first_order_right.push_back(std::move(two_a));
  }
  MatrixField neg_g = fc.grad_sq;
  domain::scale(neg_g, -1.0);
  spec.zero_order_right = std::move(neg_g);

  const GridField rhs = make_field(dom, n, n);
  std::vector<double> g_bv(static_cast<std::size_t>(dom.boundary().size()) * n * n, 0.0);
  for (std::size_t b = 0; b < dom.boundary().size(); ++b) {
    for (int i = 0; i < n; ++i) g_bv[b * n * n + i * n + i] = 1.0;
  }

  QResult out;
  try {
    auto solved = elliptic::solve_perturbed(spec, rhs, g_bv, tol);
    out.Q = std::move(solved.first);
    out.report = solved.second;
  } catch (const SolverError& err) {
    std::ostringstream msg;
    msg << "row-frame solve diverged (frame energy too large): " << err.what();
    throw MonitorError("eps0", 0, msg.str());
  }
  out.neg_grad_sq = std::move(fc.grad_sq);
  return out;
}

namespace {

// || Delta_h A + A omega ||_{L^{m/2}}, the defect of A as a matrix solution.
double a_residual_norm(const MatrixField& A, const AntisymmetricPotential& omega) {
  const GridDomain& dom = *A.dom;
  const int n = A.rows;
  const MatrixField LA = laplacian(A);
  MatrixField T = make_field(dom, n, n);
  for (int k = 0; k < dom.n_interior(); ++k) {
    std::memcpy(T.at(k), LA.at(k), sizeof(double) * static_cast<std::size_t>(n) * n);
    mat_mul_add(A.at(k), omega.omega.at(k), T.at(k), n, n, n, 1.0);
  }
  return lp_norm(T, dom.m() / 2.0);
}

double sobolev_proxy_minus_id(const MatrixField& F, double p) {
  MatrixField D = F;
  const int n = D.rows;
  for (int k = 0; k < D.dom->n_interior(); ++k) {
    double* a = D.at(k);
    for (int i = 0; i < n; ++i) a[i * n + i] -= 1.0;
  }
  for (std::size_t b = 0; b < D.dom->boundary().size(); ++b) {
    double* a = D.bat(static_cast<int>(b));
    for (int i = 0; i < n; ++i) a[i * n + i] -= 1.0;
  }
  return domain::sobolev2_norm(D, p);
}

BallSpec half_ball(const GridDomain& dom) {
  BallSpec half = dom.ball();
  half.radius *= 0.5;
  return half;
}

bool in_ball(const GridDomain& dom, int k, const BallSpec& ball) {
  double x[domain::kMaxDim];
  dom.coords(k, x);
  double r2 = 0.0;
  for (int d = 0; d < dom.m(); ++d) {
    const double dx = x[d] - ball.center[d];
    r2 += dx * dx;
  }
  return r2 < ball.radius * ball.radius;
}

}  // namespace

GaugeTriple assemble_A(const PResult& p, const QResult& q, const AntisymmetricPotential& omega) {
  const GridDomain& dom = *p.P.dom;
  const int n = p.P.rows;
  const double pn = dom.m() / 2.0;

  GaugeTriple triple;
  triple.U = p.U;
  triple.P = p.P;
  triple.Q = q.Q;
  triple.trace = p.trace;

  MatrixField A = make_field(dom, n, n);
  for (int k = 0; k < dom.n_interior(); ++k) {
    mat_mul(triple.Q.at(k), triple.P.at(k), A.at(k), n, n, n);
  }
  const int nb = static_cast<int>(dom.boundary().size());
  for (int b = 0; b < nb; ++b) {
    mat_mul(triple.Q.bat(b), triple.P.bat(b), A.bat(b), n, n, n);
  }
  triple.A = std::move(A);

  GaugeDiagnostics& diag = triple.diagnostics;
  diag.residual_P = lp_norm(residual_F(triple.U, omega), pn);
  diag.residual_A = a_residual_norm(triple.A, omega);

  const BallSpec half = half_ball(dom);
  double worst = 0.0;
  MatN block(n, n);
  for (int k = 0; k < dom.n_interior(); ++k) {
    if (!in_ball(dom, k, half)) continue;
    std::memcpy(block.data(), triple.A.at(k), sizeof(double) * static_cast<std::size_t>(n) * n);
    worst = std::max(worst, liealg::project_orthogonal(block).dist);
  }
  diag.dist_A_On = worst;

  diag.w2_proxy_norms["P_minus_id"] = sobolev_proxy_minus_id(triple.P, pn);
  diag.w2_proxy_norms["Q_minus_id"] = sobolev_proxy_minus_id(triple.Q, pn);
  diag.w2_proxy_norms["A_minus_id"] = sobolev_proxy_minus_id(triple.A, pn);
  diag.continuation_steps = static_cast<int>(triple.trace.stages.size());
  return triple;
}

VerificationReport verify_gauge(const GaugeTriple& triple, const AntisymmetricPotential& omega) {
  const GridDomain& dom = *triple.P.dom;
  const int n = triple.P.rows;
  const double p = dom.m() / 2.0;
  const BallSpec half = half_ball(dom);

  VerificationReport rep;
  rep.residual_A = a_residual_norm(triple.A, omega);
  rep.grad_energy_23 = std::pow(gradient_energy(triple.P), 2.0 / dom.m());

  MatN block(n, n);
  double qdist = 0.0;
  double sdefect = 0.0;
  for (int k = 0; k < dom.n_interior(); ++k) {
    if (!in_ball(dom, k, half)) continue;
    std::memcpy(block.data(), triple.Q.at(k), sizeof(double) * static_cast<std::size_t>(n) * n);
    const liealg::ProjectionResult pr = liealg::project_orthogonal(block);
    qdist = std::max(qdist, pr.dist);
    sdefect = std::max(sdefect, (pr.S - pr.S.transpose()).norm());
  }
  rep.q_dist_half = qdist;
  rep.s_symmetry_defect = sdefect;
  const double denom = std::max(rep.grad_energy_23, 1e-14);
  rep.q_dist_ratio = rep.q_dist_half / denom;
  rep.q_minus_id_proxy = sobolev_proxy_minus_id(triple.Q, p);
  rep.q_minus_id_ratio = rep.q_minus_id_proxy / denom;

  // Defect functions u_X = |X|^2 - |Q^T X|^2 for sampled directions: compare
  // the supremum over the half ball with the integral over the whole ball.
  const double cell = std::pow(dom.h(), dom.m());
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  double worst_ratio = 0.0;
  std::vector<double> x(n), qx(n);
  for (int trial = 0; trial < 10; ++trial) {
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = 2.0 * liealg::uniform01(rng) - 1.0;
      nrm += x[i] * x[i];
    }
    nrm = std::sqrt(nrm);
    for (int i = 0; i < n; ++i) x[i] /= nrm;

    double sup_half = 0.0;
    double integral = 0.0;
    for (int k = 0; k < dom.n_interior(); ++k) {
      const double* q = triple.Q.at(k);
      double qx2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += q[i * n + j] * x[i];  // (Q^T x)_j
        qx2 += s * s;
      }
      const double u = 1.0 - qx2;
      integral += cell * u;
      if (in_ball(dom, k, half)) sup_half = std::max(sup_half, u);
    }
    if (integral > 1e-14) {
      worst_ratio = std::max(worst_ratio, sup_half / integral);
    }
  }
  rep.harnack_ratio = worst_ratio;

  rep.all_finite = std::isfinite(rep.residual_A) && std::isfinite(rep.q_dist_half) &&
                   std::isfinite(rep.grad_energy_23) && std::isfinite(rep.q_dist_ratio) &&
                   std::isfinite(rep.q_minus_id_proxy) && std::isfinite(rep.q_minus_id_ratio) &&
                   std::isfinite(rep.harnack_ratio) && std::isfinite(rep.s_symmetry_defect);
  return rep;
}

}  // namespace gaugeforge::gauge
