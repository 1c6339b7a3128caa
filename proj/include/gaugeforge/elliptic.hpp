#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gaugeforge/domain.hpp"

namespace gaugeforge::elliptic {

using domain::GridDomain;
using domain::GridField;

// Outcome of one linear solve.
struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  double wall_time = 0.0;  // seconds
  std::string method;
};

// A perturbed Laplacian acting on matrix-valued grid fields. Two realizations:
//
//  * Coefficient form (default):
//      op(u) = Delta_h u
//            + sum_d ( FL_d * d_d u  +  d_d u * FR_d )
//            + ZL * u + u * ZR
//    with per-node matrix coefficients; any term may be absent. Left factors
//    are rows x rows, right factors cols x cols.
//
//  * Conjugated form (conj_frame set): the exact derivative of the
//    skew-part residual of a frame P,
//      op(u) = skew( P^T * Delta_h(P u) - u * W ),   W = P^T Delta_h P,
//    which reduces to Delta on skew fields when P = Id. This form replaces
//    the coefficient terms entirely.
struct LinearOperatorSpec {
  const GridDomain* dom = nullptr;
  int rows = 1;
  int cols = 1;
  std::vector<GridField> first_order_left;    // empty or one field per axis
  std::vector<GridField> first_order_right;   // empty or one field per axis
  std::optional<GridField> zero_order_left;   // rows x rows
  std::optional<GridField> zero_order_right;  // cols x cols
  std::optional<GridField> conj_frame;        // P, square blocks
  std::optional<GridField> conj_w;            // W = P^T Delta_h P

  bool conjugated() const { return conj_frame.has_value(); }
};

// Applies the operator to a field, honoring u's stored boundary values.
GridField apply_operator(const LinearOperatorSpec& spec, const GridField& u);

// Approximate zero-Dirichlet inverse of the negative Laplacian, used as the
// preconditioner for every Krylov solve. A fixed linear operator: either a
// diagonal (Jacobi) scaling or one symmetric over-relaxed Gauss-Seidel sweep.
class LaplacePrecond {
 public:
  enum class Kind { jacobi, ssor };

  LaplacePrecond(const GridDomain& dom, Kind kind, double omega);
  // Picks SSOR with a radius-aware relaxation factor; Jacobi on tiny domains.
  explicit LaplacePrecond(const GridDomain& dom);

  // z ~= (-Delta_0)^{-1} r for stacked interior data with C values per node.
  void apply(int C, const double* r, double* z) const;

  Kind kind() const { return kind_; }
  double omega() const { return omega_; }

 private:
  const GridDomain* dom_;
  Kind kind_;
  double omega_;
  std::vector<double> diag_;     // diagonal of -Delta_h, per node
  std::vector<double> weights_;  // off-diagonal magnitudes, per node x axis x side
};

// Solves Delta_h u = rhs with u = g on the sphere crossings. g_bv is stacked
// per boundary point (comps values each); empty means zero data. Conjugate
// gradients on the negative Laplacian, with a stabilized fallback if the
// mildly nonsymmetric cut-cell rows stall it. Non-convergence is reported,
// not thrown.
std::pair<GridField, SolveReport> solve_dirichlet(const GridField& rhs,
                                                  const std::vector<double>& g_bv, double tol);

// Solves spec(u) = rhs with u = g at the crossings via preconditioned
// BiCGStab. Throws SolverError on divergence.
std::pair<GridField, SolveReport> solve_perturbed(const LinearOperatorSpec& spec,
                                                  const GridField& rhs,
                                                  const std::vector<double>& g_bv, double tol);

namespace krylov {

using Apply = std::function<void(const double*, double*)>;

struct Outcome {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  bool stalled = false;
};

// Preconditioned conjugate gradients for SPD operators; M applies the
// preconditioner (approximate inverse). x holds the start value and result.
Outcome pcg(std::size_t len, const Apply& A, const Apply& M, const double* b, double* x,
            double tol, int max_iter);

// Right-preconditioned BiCGStab for nonsymmetric operators.
Outcome bicgstab(std::size_t len, const Apply& A, const Apply& M, const double* b, double* x,
                 double tol, int max_iter);

}  // namespace krylov

}  // namespace gaugeforge::elliptic
