// Reference computations that do not go through the library's own numerics.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <gsl/gsl_integration.h>

#include "sll/critical.hpp"

namespace oracle {

using sll::SurfaceModel;
using sll::SurfacePoint;
using sll::Vec3;
constexpr double pi = std::numbers::pi;

inline SurfacePoint random_sphere_point(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v{g(rng), g(rng), g(rng)};
  return {sll::normalized(v)};
}

inline SurfacePoint random_point(const SurfaceModel& s, std::mt19937_64& rng) {
  if (s.kind() == sll::SurfaceKind::Sphere) return random_sphere_point(rng);
  std::uniform_real_distribution<double> u;
  return s.point({u(rng) * s.period_a(), u(rng) * s.period_b(), 0});
}

// Torus distance as the minimum over the 3x3 block of lattice translates.
inline double torus_distance(double a, double b, double u1, double v1, double u2, double v2) {
  double best = INFINITY;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) best = std::min(best, std::hypot(u1 - u2 + i * a, v1 - v2 + j * b));
  return best;
}

// Zero-mean Green's function of the a x b flat torus as a sum over 2*rows+1 lattice rows, each row
// of logarithms summed in closed form (log|2 sin|). The constant follows from Jensen's formula.
inline double torus_green_rows(double a, double b, double du, double dv, int rows = 50) {
  du = du - a * std::floor(du / a);
  dv = dv - b * std::floor(dv / b + 0.5);  // [-b/2, b/2)
  double sum = 0;
  for (int m = -rows; m <= rows; ++m) {
    const double y = dv - m * b;
    std::complex<double> w(du / a, std::abs(y) / a);
    // log|2 sin(pi w)| = pi Im w + log|1 - exp(2 pi i w)| for Im w >= 0
    double lg = std::log(std::abs(1.0 - std::exp(std::complex<double>(0, 2 * pi) * w)));
    sum += pi * std::abs(y) / a - pi * std::abs(m) * b / a + lg;
  }
  return -sum / (2 * pi) + dv * dv / (2 * a * b) + b / (12 * a);
}

// Adaptive 1D integral with an integrable endpoint singularity allowed.
inline double integrate(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-13) {
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(2000);
  gsl_function F;
  F.function = [](double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); };
  F.params = const_cast<std::function<double(double)>*>(&f);
  double r = 0, err = 0;
  gsl_integration_qags(&F, lo, hi, tol, tol, 2000, w, &r, &err);
  gsl_integration_workspace_free(w);
  return r;
}

// Zero-mean constant of the sphere Green's function: (1/2pi) times the mean of log(2 sin(theta/2)).
inline double sphere_c0() {
  double mean = integrate([](double t) { return std::log(2 * std::sin(t / 2)) * std::sin(t) / 2; }, 0, pi);
  return mean / (2 * pi);
}

// Integral over the unit sphere of f, in polar coordinates about p; f may be log-singular at p.
// Angular rule is the periodic trapezoid with `na` nodes.
inline double sphere_polar_integral(const Vec3& p, const std::function<double(const Vec3&)>& f, int na = 64) {
  Vec3 e1 = std::abs(p.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  e1 = sll::normalized(e1 - p * sll::dot(e1, p));
  Vec3 e2 = sll::cross(p, e1);
  return integrate(
      [&](double t) {
        double acc = 0;
        for (int k = 0; k < na; ++k) {
          double ph = 2 * pi * k / na;
          Vec3 x = p * std::cos(t) + (e1 * std::cos(ph) + e2 * std::sin(ph)) * std::sin(t);
          acc += f(x);
        }
        return acc * (2 * pi / na) * std::sin(t);
      },
      0, pi, 1e-12);
}

// Legendre polynomial P_l by recurrence.
inline double legendre(int l, double x) {
  double p0 = 1, p1 = x;
  if (l == 0) return 1;
  for (int k = 2; k <= l; ++k) {
    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Central difference of f along the geodesic through x with initial velocity e.
inline double directional_fd(const SurfaceModel& s, const std::function<double(const SurfacePoint&)>& f,
                             const SurfacePoint& x, const Vec3& e, double h = 1e-5) {
  return (f(s.exp(x, e * h)) - f(s.exp(x, e * -h))) / (2 * h);
}

// Exhaustive search for N = N_1 + ... + N_l with 0 <= N_i <= cap_i.
inline bool split_exists(int N, const std::vector<int>& cap, size_t i = 0) {
  if (i == cap.size()) return N == 0;
  for (int k = 0; k <= std::min(N, cap[i]); ++k)
    if (split_exists(N - k, cap, i + 1)) return true;
  return false;
}

inline int floor_minus(double a) { return static_cast<int>(std::ceil(a)) - 1; }

// Naive Gamma enumeration: 8 pi n + 8 pi sum_{i in I}(1 + alpha_i) over all subsets I.
inline std::vector<double> gamma_enumerate(const std::vector<double>& alpha, double cap) {
  std::vector<double> out;
  const size_t m = alpha.size();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    double base = 0;
    for (size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) base += 8 * pi * (1 + alpha[i]);
    for (int n = 0; base + 8 * pi * n <= cap + 1e-12; ++n) out.push_back(base + 8 * pi * n);
  }
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double v : out)
    if (uniq.empty() || v - uniq.back() > 1e-12) uniq.push_back(v);
  return uniq;
}

}  // namespace oracle
