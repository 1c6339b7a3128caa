#pragma once

// Tiny row-major matrix kernels used on per-node blocks of a GridField.
// Dimensions are small (at most kMaxMatrixDim per side), so plain loops beat
// any library dispatch and keep operation order deterministic.

namespace gaugeforge {

// c (p x r) = a (p x q) * b (q x r)
inline void mat_mul(const double* a, const double* b, double* c, int p, int q, int r) {
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < r; ++j) {
      double s = 0.0;
      for (int k = 0; k < q; ++k) s += a[i * q + k] * b[k * r + j];
      c[i * r + j] = s;
    }
  }
}

// c (p x r) += w * a (p x q) * b (q x r)
inline void mat_mul_add(const double* a, const double* b, double* c, int p, int q, int r,
                        double w) {
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < r; ++j) {
      double s = 0.0;
      for (int k = 0; k < q; ++k) s += a[i * q + k] * b[k * r + j];
      c[i * r + j] += w * s;
    }
  }
}

// c (p x r) = a^T * b where a is stored as (q x p) and b as (q x r)
inline void mat_tmul(const double* a, const double* b, double* c, int p, int q, int r) {
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < r; ++j) {
      double s = 0.0;
      for (int k = 0; k < q; ++k) s += a[k * p + i] * b[k * r + j];
      c[i * r + j] = s;
    }
  }
}

// out (n x n) = (y - y^T) / 2, exact skew-symmetry in floating point.
inline void mat_skew_part(const double* y, int n, double* out) {
  for (int i = 0; i < n; ++i) {
    out[i * n + i] = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (y[i * n + j] - y[j * n + i]);
      out[i * n + j] = v;
      out[j * n + i] = -v;
    }
  }
}

}  // namespace gaugeforge
