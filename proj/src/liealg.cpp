#include "gaugeforge/liealg.hpp"

#include <cmath>
#include <random>

#include "gaugeforge/errors.hpp"

namespace gaugeforge::liealg {

AntisymMatrix::AntisymMatrix(const MatN& raw) : m(antisymmetrize(raw)) {}

double RotationMatrix::orthogonality_defect() const {
  const int n = static_cast<int>(m.rows());
  return (m.transpose() * m - MatN::Identity(n, n)).norm();
}

double RotationMatrix::det_defect() const { return std::abs(m.determinant() - 1.0); }

MatN antisymmetrize(const MatN& M) {
  const int n = static_cast<int>(M.rows());
  MatN out(n, n);
  for (int i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (M(i, j) - M(j, i));
      out(i, j) = v;
      out(j, i) = -v;
    }
  }
  return out;
}

MatN commutator(const MatN& A, const MatN& B) {
  const int n = static_cast<int>(A.rows());
  MatN out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += A(i, k) * B(k, j) - B(i, k) * A(k, j);
      out(i, j) = s;
    }
  return out;
}

MatN gram(const MatN& a) {
  const int n = static_cast<int>(a.cols());
  MatN out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < static_cast<int>(a.rows()); ++k) s += a(k, i) * a(k, j);
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

MatN exp_so(const MatN& U) {
  const int n = static_cast<int>(U.rows());
  const double norm = U.norm();
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const double scale = std::ldexp(1.0, -squarings);
  MatN V = U * scale;
  MatN acc = MatN::Identity(n, n);
  MatN term = MatN::Identity(n, n);
  for (int k = 1; k <= 30; ++k) {
    term = (term * V / static_cast<double>(k)).eval();
    acc += term;
    if (term.norm() <= 1e-17 * acc.norm()) break;
  }
  for (int s = 0; s < squarings; ++s) acc = (acc * acc).eval();
  return acc;
}

RotationMatrix exp_so(const AntisymMatrix& U) { return RotationMatrix{exp_so(U.m)}; }

MatN dexp_conj(const MatN& U, const MatN& W) {
  MatN acc = W;
  MatN term = W;
  double factor = 1.0;
  for (int k = 1; k <= 80; ++k) {
    term = commutator(term, U);  // (-ad_U)^k W accumulated with exact sign
    factor /= static_cast<double>(k + 1);
    acc += term * factor;
    if (term.norm() * factor <= 1e-17 * acc.norm()) break;
  }
  return antisymmetrize(acc);
}

MatN dexp_conj_inverse(const MatN& U, const MatN& Z) {
  const int n = static_cast<int>(U.rows());
  if (n == 2) return antisymmetrize(Z);  // so(2) is abelian: D(U) is the identity
  if (U.norm() > 1.0 + 1e-12)
    throw SolverError("dexp inverse guard: ||U||_F > 1; use smaller continuation steps");
  const int K = n * (n - 1) / 2;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 28, 28> A(K, K);
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 28, 1> z(K);
  MatN E = MatN::Zero(n, n);
  int col = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++col) {
      E.setZero();
      E(i, j) = 1.0;
      E(j, i) = -1.0;
      const MatN D = dexp_conj(U, E);
      int row = 0;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b, ++row) A(row, col) = D(a, b);
    }
  int row = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b, ++row) z(row) = Z(a, b);
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 28, 1> w = A.partialPivLu().solve(z);
  MatN W = MatN::Zero(n, n);
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++idx) {
      W(i, j) = w(idx);
      W(j, i) = -w(idx);
    }
  return W;
}

ProjectionResult project_orthogonal(const MatN& Q) {
  const int n = static_cast<int>(Q.rows());
  (void)n;
  MatN R = Q;
  Eigen::PartialPivLU<MatN> lu;
  // Averaging iteration; quadratically convergent for well-conditioned input.
  for (int it = 0; it < 100; ++it) {
    lu.compute(R);
    const double absdet = std::abs(lu.determinant());
    if (!(absdet > 1e-12))
      throw SolverError("orthogonal projection: input is near-singular");
    MatN Rinv_t = lu.inverse().transpose();
    MatN next = 0.5 * (R + Rinv_t);
    const double step = (next - R).norm();
    R = next;
    if (step <= 1e-14 * std::max(1.0, R.norm())) break;
  }
  ProjectionResult out;
  out.R = R;
  out.S = R.transpose() * (Q - R);
  out.dist = (Q - R).norm();
  return out;
}

MatN antisym_random(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MatN out = MatN::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double u = 2.0 * uniform01(rng) - 1.0;
      out(i, j) = u;
      out(j, i) = -u;
    }
  return out;
}

}  // namespace gaugeforge::liealg
