#pragma once

#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "sll/errors.hpp"
#include "sll/vec3.hpp"

namespace sll {

enum class SurfaceKind { Sphere, Torus };

// Sphere: unit vector in R^3. Torus: (u, v, 0) with u in [0,a), v in [0,b).
struct SurfacePoint {
  Vec3 p;
  bool operator==(const SurfacePoint&) const = default;
};

struct TangentFrame {
  Vec3 e1, e2;
};

struct QuadNode {
  SurfacePoint x;
  double w = 0;
  long grid_index = -1;  // -1 for nodes that are not on the tensor grid
};

// Tensor-product sample grid. Sphere: rows are Gauss-Legendre colatitudes
// (north to south), columns uniform longitudes. Torus: rows along u, columns along v.
struct TensorGrid {
  int n1 = 0, n2 = 0;
  std::vector<double> c1, c2;  // chart coordinates per row / column
  std::vector<double> row_weight;  // per-row quadrature weight (column weight folded in)
  std::vector<SurfacePoint> points;  // row-major n1*n2
  long index(int i, int j) const { return static_cast<long>(i) * n2 + j; }
};

// Spherical-harmonic or Fourier coefficients.
// Sphere: real orthonormal Y_lm, index l*l + l + m for m in [-l, l] (m < 0 is the sine part).
// Torus: complex c_{n,m}, f = sum c e^{i(2 pi n u / a + 2 pi m v / b)}, index (n+K)*(2K+1) + (m+K).
struct Spectrum {
  int degree = 0;
  std::vector<double> real;
  std::vector<std::complex<double>> cplx;
};

struct PatchSpec {
  SurfacePoint center;
  double radius = 0.3;
  double core_scale = 1e-6;  // smallest radial panel; resolve features of this size at the center
};

class SurfaceModel;
using SurfaceRef = std::shared_ptr<const SurfaceModel>;

// Samples on the model's quadrature grid.
struct ScalarField {
  SurfaceRef surface;
  std::vector<double> values;
};

class SurfaceModel : public std::enable_shared_from_this<SurfaceModel> {
 public:
  static SurfaceRef sphere(int nlat = 128, int nlon = 256, int degree = -1);
  static SurfaceRef torus(double a = 1.0, double b = 1.0, int nu = 256, int nv = 256, int degree = -1);
  ~SurfaceModel();

  SurfaceKind kind() const { return kind_; }
  double area() const { return area_; }
  double euler_characteristic() const { return kind_ == SurfaceKind::Sphere ? 2.0 : 0.0; }
  double injectivity_radius() const { return inj_; }
  double period_a() const { return a_; }
  double period_b() const { return b_; }
  int spectral_degree() const { return degree_; }

  SurfacePoint point(const Vec3& raw) const;
  SurfacePoint from_chart(double c1, double c2) const;
  std::array<double, 2> to_chart(const SurfacePoint& x) const;

  double distance(const SurfacePoint& x, const SurfacePoint& y) const;
  TangentFrame frame(const SurfacePoint& x) const;
  Vec3 project_tangent(const SurfacePoint& x, const Vec3& v) const;
  SurfacePoint exp(const SurfacePoint& x, const Vec3& v) const;
  Vec3 log(const SurfacePoint& x, const SurfacePoint& y) const;
  // Parallel transport of w along t -> exp_x(t v), t in [0,1].
  Vec3 transport(const SurfacePoint& x, const Vec3& v, const Vec3& w) const;

  double green(const SurfacePoint& x, const SurfacePoint& p) const;
  double green_regular(const SurfacePoint& x, const SurfacePoint& p) const;
  double robin() const { return robin_; }  // h(p,p); constant on both homogeneous surfaces
  Vec3 grad_green(const SurfacePoint& x, const SurfacePoint& p) const;  // gradient in x

  const TensorGrid& grid() const { return grid_; }
  TensorGrid tensor_grid(int n1, int n2) const;
  std::vector<QuadNode> quadrature() const;
  std::vector<QuadNode> composite_quadrature(const std::vector<PatchSpec>& patches,
                                             int angular = 64, int radial_per_panel = 12) const;

  ScalarField sample(const std::function<double(const SurfacePoint&)>& f) const;
  double integrate(const ScalarField& f) const;

  Spectrum analyze(const ScalarField& f) const;
  ScalarField synthesize(const Spectrum& s) const;
  double evaluate(const Spectrum& s, const SurfacePoint& x) const;
  // Multiplies each mode by -lambda (lambda the eigenvalue of -Delta).
  Spectrum apply_laplacian(const Spectrum& s) const;
  ScalarField solve_poisson(const ScalarField& rhs) const;
  ScalarField laplacian(const ScalarField& f) const;

 private:
  SurfaceModel() = default;
  struct Impl;
  std::unique_ptr<Impl> impl_;

  SurfaceKind kind_ = SurfaceKind::Sphere;
  double a_ = 0, b_ = 0, area_ = 0, inj_ = 0, robin_ = 0;
  int degree_ = 0;
  TensorGrid grid_;

  double torus_kernel(const Vec3& r, bool regular) const;
};

// Laplacian of f(d(., q)) at distance d given f'(d), f''(d).
double laplacian_radial(const SurfaceModel& s, double d, double f1, double f2);
// Laplacian of a sampled field at an arbitrary point (spectral).
double laplacian_at(const ScalarField& f, const SurfacePoint& x);
// Five-point stencil in normal coordinates; O(h^2).
double laplacian_fd(const SurfaceModel& s, const std::function<double(const SurfacePoint&)>& f,
                    const SurfacePoint& x, double h = 1e-4);

// Smooth surrogate for squared distance: chordal on the sphere, sin^2-periodic on the torus.
// Agrees with d^2 to fourth order and is C-infinity everywhere.
double smooth_sq_dist(const SurfaceModel& s, const SurfacePoint& x, const SurfacePoint& q);
Vec3 grad_smooth_sq_dist(const SurfaceModel& s, const SurfacePoint& x, const SurfacePoint& q);
double lap_smooth_sq_dist(const SurfaceModel& s, const SurfacePoint& x, const SurfacePoint& q);

// C-infinity step: 1 on [0, 1/2], 0 on [1, inf).
double smooth_bump(double t);
double smooth_bump_d1(double t);
double smooth_bump_d2(double t);

std::vector<std::pair<double, double>> gauss_legendre(int n, double lo = -1.0, double hi = 1.0);

}  // namespace sll
