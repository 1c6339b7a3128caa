#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace gaugeforge::liealg {

// Dense n x n kernel type, heap-free up to n = 8.
using MatN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 8, 8>;
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;

// Storage-canonical antisymmetric matrix: construction rebuilds the lower
// triangle as the exact negation of the upper one, so M^T = -M holds exactly.
struct AntisymMatrix {
  MatN m;
  explicit AntisymMatrix(int n) : m(MatN::Zero(n, n)) {}
  explicit AntisymMatrix(const MatN& raw);  // canonicalizes 0.5 (raw - raw^T)
};

struct RotationMatrix {
  MatN m;
  double orthogonality_defect() const;  // ||m^T m - I||_F
  double det_defect() const;            // |det m - 1|
};

struct ProjectionResult {
  MatN R;       // nearest matrix with R^T R = I (Frobenius metric)
  MatN S;       // R^T (Q - R)
  double dist;  // ||S||_F = ||Q - R||_F
};

// Exact antisymmetrization: out(i,j) = 0.5*(M(i,j) - M(j,i)), zero diagonal,
// lower triangle the exact negation of the upper.
MatN antisymmetrize(const MatN& M);

// [A, B] with pairing that keeps the result exactly antisymmetric when both
// arguments are exactly antisymmetric.
MatN commutator(const MatN& A, const MatN& B);

// a^T a computed as an exactly symmetric Gram matrix; PSD up to rounding.
MatN gram(const MatN& a);

// Matrix exponential by scaling-and-squaring with a truncated series.
MatN exp_so(const MatN& U);
RotationMatrix exp_so(const AntisymMatrix& U);

// D(U) W = sum_k (-ad_U)^k W / (k+1)!  (derivative of exp pulled back to the
// identity). Output is exactly antisymmetric for antisymmetric inputs.
MatN dexp_conj(const MatN& U, const MatN& W);

// Solves D(U) W = Z for W in the antisymmetric basis (K = n(n-1)/2 system).
// Requires ||U||_F <= 1; throws SolverError otherwise.
MatN dexp_conj_inverse(const MatN& U, const MatN& Z);

// Nearest orthogonal factor by the averaging iteration R <- (R + R^-T)/2,
// tolerance 1e-14. Throws SolverError when the input is near-singular.
ProjectionResult project_orthogonal(const MatN& Q);

// Deterministic antisymmetric matrix with upper-triangle entries uniform in
// [-1, 1].
MatN antisym_random(int n, std::uint64_t seed);

// Uniform double in [0, 1) from the top 53 bits of a raw 64-bit draw;
// identical across platforms unlike std::uniform_real_distribution.
template <typename Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace gaugeforge::liealg
