#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sll/surface.hpp"

namespace sll {

// Value, Riemannian gradient (ambient tangent vector) and Laplace-Beltrami.
struct Jet {
  double v = 0;
  Vec3 g;
  double lap = 0;
};

class CurvatureField {
 public:
  virtual ~CurvatureField() = default;
  virtual Jet eval(const SurfacePoint& x) const = 0;
  double value(const SurfacePoint& x) const { return eval(x).v; }
};

using FieldRef = std::shared_ptr<const CurvatureField>;

struct GaussTerm {
  SurfacePoint center;
  double amplitude = 1.0;
  double c = 1.0;  // term = amplitude * exp(c * s(x, center)), s the smooth squared distance
};

struct QuadTerm {
  SurfacePoint center;
  double c = 1.0;  // term = c * s(x, center)
};

struct FourierTerm {
  int n = 0, m = 0;
  double amplitude = 1.0, phase = 0.0;  // amplitude * cos(2 pi (n u / a + m v / b) + phase)
};

FieldRef constant_field(double c);
// scale * <x, axis>: cosine of the polar angle measured from `axis` (sphere only).
FieldRef cos_polar_field(SurfaceRef s, SurfacePoint axis, double scale = 1.0);
FieldRef gaussian_sum_field(SurfaceRef s, double offset, std::vector<GaussTerm> terms);
FieldRef quadratic_sum_field(SurfaceRef s, std::vector<QuadTerm> terms);
FieldRef fourier_field(SurfaceRef s, double offset, std::vector<FourierTerm> terms);
// Sphere variables: x y z lon colat; torus variables: x y (aliases u v) and periods a b.
FieldRef expression_field(SurfaceRef s, const std::string& expr);

FieldRef exp_field(FieldRef f);
FieldRef product_field(FieldRef a, FieldRef b);
FieldRef sum_field(FieldRef a, FieldRef b);

// Gradient and Laplacian of log K from a jet of K (K > 0).
struct LogJet {
  double v;
  Vec3 g;
  double lap;
};
LogJet log_jet(const Jet& k);

}  // namespace sll
