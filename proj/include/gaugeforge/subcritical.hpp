#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gaugeforge/domain.hpp"
#include "gaugeforge/elliptic.hpp"
#include "gaugeforge/gauge.hpp"

namespace gaugeforge::subcritical {

using domain::GridDomain;
using domain::GridField;
using domain::MatrixField;
using domain::VectorField;
using gauge::AntisymmetricPotential;

// A solved state: vector-valued samples with the boundary data in v.bv and
// the producing solve's report attached.
struct StateField {
  VectorField v;
  std::string source;  // "direct" | "conservation" | "manufactured"
  elliptic::SolveReport report;
};

// Solves the coupled system (second difference of v) + omega v = 0 with
// v = g at the sphere crossings. Throws SolverError on divergence.
StateField solve_direct(const AntisymmetricPotential& omega, const std::vector<double>& g_bv,
                        double tol);

// w = A v node-wise (boundary blocks included).
VectorField gauge_transform(const MatrixField& A, const VectorField& v);

// L1 norm, over nodes at distance > 2h from the sphere, of
// div_h( A grad_h v - (grad_h A) v ).
double conservation_residual(const MatrixField& A, const VectorField& v);

// Solves the divergence-form system with antisymmetric face fluxes
//   sum_d [ phi_d(x, x+) - phi_d(x-, x) ] / s_d = 0,
//   phi_d(x, y) = (A(x) v(y) - A(y) v(x)) / dist(x, y),
// which reduces exactly to the shortened-arm Laplacian when A = Id.
StateField solve_conservation(const MatrixField& A, const std::vector<double>& g_bv, double tol);

// Zero-Dirichlet / harmonic splitting of w = A v on the sub-ball B_r(x0):
// phi solves the second-difference problem with the commutator source of w,
// xi = w - phi is discrete-harmonic up to truncation. The sub-domain owns the
// grid the three fields live on.
struct LocalDecomposition {
  std::unique_ptr<GridDomain> sub;
  VectorField w;    // restriction of A v, boundary filled by arm extrapolation
  VectorField phi;  // zero boundary
  VectorField xi;   // w - phi
  elliptic::SolveReport report;
};

LocalDecomposition local_decomposition(const MatrixField& A, const VectorField& v,
                                       const double* x0, double r, double tol);

// Morrey-decay experiment: per (center, radius), the p-mass contraction ratio
// of w and of its harmonic part under shrinking by lambda, the measured
// source-term constant, and the fitted mass-growth exponent of v.
struct DecayReport {
  std::vector<std::vector<double>> centers;
  std::vector<double> radii;
  double lambda = 0.5;
  std::vector<double> ratios;            // combined w ratios, center-major
  std::vector<double> harmonic_ratios;   // xi ratios, center-major
  std::vector<double> phi_bound_consts;  // measured source constants, center-major
  double gamma_hat = 0.0;                // min fitted exponent over centers
  int gamma_points = 0;                  // ladder size behind the fit (0 = no fit)
};

DecayReport decay_experiment(const MatrixField& A, const VectorField& v,
                             const std::vector<std::vector<double>>& centers,
                             const std::vector<double>& radii, double lambda);

// Interior integrability table: L^p norms of v over B_{1/2} and the
// second-difference mass profile over shrinking balls with its fitted slope.
struct IntegrabilityReport {
  std::vector<double> exponents;
  std::vector<double> norms;
  std::vector<double> radii;
  std::vector<double> laplace_mass;  // integral of |second difference of v|
  double gamma_fit = 0.0;
  int gamma_points = 0;
};

IntegrabilityReport integrability_report(const VectorField& v, std::vector<double> exponents = {});

// Analytic planar family v = e^{k.x} (cos(l.x), sin(l.x)) with |k| = |l|,
// which solves the system for the constant potential 2 (k.l) J exactly.
VectorField manufactured_field(const GridDomain& dom, const double* kvec, const double* lvec);
AntisymmetricPotential manufactured_potential(const GridDomain& dom, const double* kvec,
                                              const double* lvec);

}  // namespace gaugeforge::subcritical
