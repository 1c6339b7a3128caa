#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gaugeforge/domain.hpp"
#include "gaugeforge/elliptic.hpp"

namespace gaugeforge::gauge {

using domain::GridDomain;
using domain::GridField;
using domain::MatrixField;
using elliptic::SolveReport;

// Antisymmetric matrix potential on a grid, together with its natural norm.
struct AntisymmetricPotential {
  MatrixField omega;        // n x n antisymmetric blocks, zero boundary data
  double l_half_m_norm = 0.0;  // || omega ||_{L^{m/2}}
  int smoothness_passes = 0;   // averaging passes applied at generation

  int n() const { return omega.rows; }
};

// Builds the struct and checks pointwise antisymmetry; the stored norm is
// recomputed so it is consistent by construction.
AntisymmetricPotential make_potential(MatrixField omega, int smoothness_passes);

// Homotopy/Newton knobs. The thresholds are empirical monitors standing in
// for the existence constants of the underlying estimates.
struct ContinuationConfig {
  int steps = 8;
  double newton_tol = 1e-9;  // relative to max(1, ||omega||)
  int newton_max = 20;
  double eps0_monitor = 0.1;  // bound on the gradient-energy integral of P
  double eps1_monitor = 0.5;  // bound on the second-order proxy of P - Id
};

// Per-continuation-stage record for reporting.
struct StageTrace {
  double t = 0.0;                  // homotopy parameter of the stage
  std::vector<double> residuals;   // Newton residual norms, entry 0 = initial
  int newton_iterations = 0;
  bool predictor_used = false;
  double eps0 = 0.0;               // gradient-energy integral of P after the stage
  double eps1 = 0.0;               // second-order proxy of P - Id after the stage
  double lemma_ratio = 0.0;        // eps1 / ||P^{-1} dP - dP^{-1} P||_{L^{m/2}}
};

struct ContinuationTrace {
  std::vector<StageTrace> stages;
  int total_newton_iterations = 0;
};

struct PResult {
  MatrixField U;  // antisymmetric logarithm field, zero boundary
  MatrixField P;  // rotation field exp(U), identity boundary
  ContinuationTrace trace;
};

struct QResult {
  MatrixField Q;          // identity boundary
  MatrixField neg_grad_sq;  // the symmetric PSD coefficient recorded at build
  SolveReport report;
};

struct GaugeDiagnostics {
  double residual_P = 0.0;  // || skew residual of P against omega ||_{L^{m/2}}
  double residual_A = 0.0;  // || Delta_h A + A omega ||_{L^{m/2}}
  double dist_A_On = 0.0;   // max over B_{1/2} nodes of dist(A, O(n))
  std::map<std::string, double> w2_proxy_norms;
  int continuation_steps = 0;
};

struct GaugeTriple {
  MatrixField U, P, Q, A;
  GaugeDiagnostics diagnostics;
  ContinuationTrace trace;
};

// skew(P^T Delta_h P) + omega with P = exp(U); exactly antisymmetric.
MatrixField residual_F(const MatrixField& U, const AntisymmetricPotential& omega);

// Exact derivative of the skew residual at frame P0 in the right-translated
// increment zeta: skew(P0^T Delta_h(P0 zeta) - zeta W), W = P0^T Delta_h P0.
// omega0 is fixed by P0 (2 omega0 = W - W^T) and is recomputed internally.
MatrixField linearized_apply(const MatrixField& P0, const MatrixField& omega0,
                             const MatrixField& zeta);

// Newton continuation along omega_t = t omega. Throws MonitorError naming the
// violated monitor and stage on divergence or threshold breach.
PResult construct_P(const AntisymmetricPotential& omega, const ContinuationConfig& cfg);

// Solves the companion row-frame equation
//   Delta_h Q + sum_d dQ/dx_d (2 a_d) - Q G = 0,  Q = Id on the sphere,
// with a_d the antisymmetrized (dP/dx_d) P^T and G = sum_d a_d^T a_d the
// recorded symmetric PSD coefficient.
QResult construct_Q(const MatrixField& P, double tol);

// Per-axis a_d fields and the PSD coefficient G for a rotation field P.
struct FrameCoefficients {
  std::vector<MatrixField> a;  // one antisymmetric field per axis
  MatrixField grad_sq;         // G = sum_d a_d^T a_d, symmetric PSD
};
FrameCoefficients frame_coefficients(const MatrixField& P);

// Scalar field |grad P|(x) and its m-energy integral (the eps0 quantity).
domain::ScalarField gradient_magnitude(const MatrixField& P);
double gradient_energy(const MatrixField& P);

// A = Q P node-wise, plus all diagnostics against the given potential.
GaugeTriple assemble_A(const PResult& p, const QResult& q,
                       const AntisymmetricPotential& omega);

struct VerificationReport {
  double residual_A = 0.0;
  double q_dist_half = 0.0;      // max dist(Q, O(n)) over B_{1/2}
  double grad_energy_23 = 0.0;   // (gradient energy of P)^{2/m}
  double q_dist_ratio = 0.0;     // q_dist_half / grad_energy_23 (0 if degenerate)
  double q_minus_id_proxy = 0.0;
  double q_minus_id_ratio = 0.0;
  double harnack_ratio = 0.0;    // worst sup/integral ratio over sampled X
  double s_symmetry_defect = 0.0;
  bool all_finite = false;
};

VerificationReport verify_gauge(const GaugeTriple& triple, const AntisymmetricPotential& omega);

}  // namespace gaugeforge::gauge
