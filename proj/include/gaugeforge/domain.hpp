#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace gaugeforge::domain {

inline constexpr int kMaxDim = 5;

// Ball region on the lattice; nodes belong iff |x - center| < radius.
struct BallSpec {
  std::array<double, kMaxDim> center{};
  double radius = 1.0;
};

// Point where a shortened stencil arm meets the sphere. Dirichlet data is
// imposed at these points.
struct BoundaryPoint {
  int node = -1;   // compact index of the interior node owning the arm
  int dir = 0;     // axis
  int side = 1;    // +1 or -1
  double theta = 1.0;  // arm length as a fraction of h, in (0, 1]
  std::array<double, kMaxDim> x{};
};

// Masked Cartesian grid over [-1,1]^m restricted to a ball. Neighbor arms
// toward the sphere are shortened (unequal arm lengths), which keeps all
// off-center second-difference weights positive.
class GridDomain {
 public:
  // Unit ball domain. Requires 3 <= m <= 5 and odd N >= 9.
  static GridDomain build(int m, int N);
  // Sub-ball on the same lattice. The sub-ball must lie strictly inside the
  // parent ball with at least a 2h margin (needed for arm extrapolation).
  static GridDomain sub(const GridDomain& parent, const std::array<double, kMaxDim>& center,
                        double radius);

  int m() const { return m_; }
  int N() const { return N_; }
  double h() const { return h_; }
  const BallSpec& ball() const { return ball_; }
  int n_interior() const { return static_cast<int>(interior_flat_.size()); }
  const std::vector<BoundaryPoint>& boundary() const { return boundary_; }

  // Compact index -> flat lattice index and coordinates.
  std::int64_t flat_of(int k) const { return interior_flat_[k]; }
  void coords(int k, double* x) const;
  std::array<double, kMaxDim> coords(int k) const;
  // Flat lattice index -> compact interior index, or -1.
  int interior_index(std::int64_t flat) const { return interior_of_flat_[flat]; }

  // Neighbor of interior node k in direction d, side s (0 = minus, 1 = plus):
  // value >= 0 is a compact interior index; value < 0 encodes boundary point
  // index -(value+1).
  int neighbor(int k, int d, int s) const { return neigh_[(2 * k + s) * m_ + d]; }
  // Arm length fraction toward that neighbor (1.0 for full arms).
  double arm(int k, int d, int s) const { return theta_[(2 * k + s) * m_ + d]; }
  // True if any arm of node k is shortened.
  bool is_cut(int k) const { return cut_[k] != 0; }

  double cell_weight() const;  // h^m, the per-node quadrature weight

  std::int64_t lattice_size() const { return lattice_size_; }
  std::int64_t axis_stride(int d) const { return stride_[d]; }

 private:
  GridDomain() = default;
  void init(int m, int N, const BallSpec& ball);

  int m_ = 0, N_ = 0;
  double h_ = 0.0;
  BallSpec ball_;
  std::int64_t lattice_size_ = 0;
  std::array<std::int64_t, kMaxDim> stride_{};
  std::vector<std::int64_t> interior_flat_;
  std::vector<int> interior_of_flat_;
  std::vector<int> neigh_;
  std::vector<double> theta_;
  std::vector<std::uint8_t> cut_;
  std::vector<BoundaryPoint> boundary_;
};

// Grid function with a rows x cols value per node (1x1 scalar, nx1 vector,
// nxn matrix). Values are node-major; each node block is row-major.
// `bv` holds one block per boundary point of the domain.
struct GridField {
  const GridDomain* dom = nullptr;
  int rows = 1, cols = 1;
  std::vector<double> v;
  std::vector<double> bv;

  int comps() const { return rows * cols; }
  double* at(int k) { return v.data() + static_cast<std::size_t>(k) * comps(); }
  const double* at(int k) const { return v.data() + static_cast<std::size_t>(k) * comps(); }
  double* bat(int b) { return bv.data() + static_cast<std::size_t>(b) * comps(); }
  const double* bat(int b) const { return bv.data() + static_cast<std::size_t>(b) * comps(); }
};

using ScalarField = GridField;  // rows = cols = 1
using VectorField = GridField;  // rows = n, cols = 1
using MatrixField = GridField;  // rows = cols = n

GridField make_field(const GridDomain& dom, int rows, int cols);

// Sample fn at interior nodes and boundary points. fn writes rows*cols values.
GridField sample(const GridDomain& dom, int rows, int cols,
                 const std::function<void(const double* x, double* out)>& fn);
void set_boundary(GridField& f, const std::function<void(const double* x, double* out)>& fn);
void set_boundary_constant(GridField& f, const double* block);
void set_boundary_identity(GridField& f);  // rows == cols

// Low-level stencil kernels on interior-stacked arrays (C values per node).
// bv may be null, meaning zero Dirichlet data at the sphere.
void raw_laplacian(const GridDomain& dom, int C, const double* x, const double* bv, double* y);
void raw_derivative(const GridDomain& dom, int axis, int C, const double* x, const double* bv,
                    double* y);

// Second-difference operator with shortened arms near the sphere; exact on
// quadratics at nodes whose full stencil is interior. Uses f.bv for arms that
// end on the sphere. Result has zero bv.
GridField laplacian(const GridField& f);

// First derivative along each axis, second-order via unequal-arm weights;
// uses f.bv. Component d of the result is d f / d x_d.
std::vector<GridField> gradient(const GridField& f);

// Central differences of F[d] along axis d, one-sided where a neighbor value
// is unavailable (F has no boundary values). Matches laplacian(gradient(f))
// to O(h^2) away from the sphere and O(h) near it.
GridField divergence(const std::vector<GridField>& F);

// (sum_i h^m |f_i|_F^p)^(1/p) over interior nodes inside `region`.
// Throws ConfigError if the region contains no node.
double lp_norm(const GridField& f, double p, const BallSpec& region);
double lp_norm(const GridField& f, double p);  // whole domain

// || laplacian(f) ||_{L^q}: second-order zero-boundary Sobolev proxy.
double sobolev2_norm(const GridField& f, double q);

// One pass: new = old/2 + (mean over interior lattice neighbors)/2.
// Preserves constants, antisymmetry, and boundary values.
GridField mollify(const GridField& f, int passes);

// Restrict a parent-domain field to a sub-domain built on the same lattice.
// Boundary values of the result are zero.
GridField restrict_to(const GridField& parent_field, const GridDomain& sub);

// Fill bv of `f` (living on a sub-domain) by quadratic extrapolation of the
// parent field along each shortened arm. Needs two lattice nodes behind each
// owning node inside the parent interior.
void extrapolate_boundary(GridField& f, const GridField& parent_field);

// Element-wise helpers.
void axpy(GridField& y, double a, const GridField& x);  // y += a x
GridField diff(const GridField& a, const GridField& b);
void scale(GridField& f, double a);

}  // namespace gaugeforge::domain
