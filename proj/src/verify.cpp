#include "sll/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sll {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Radius {
  double r, r1, r2;  // rho(d) and its first two derivatives in d
};

Radius radius_of(const SurfaceModel& s, double d) {
  if (s.kind() == SurfaceKind::Sphere) return {2 * std::sin(0.5 * d), std::cos(0.5 * d), -0.5 * std::sin(0.5 * d)};
  return {d, 1.0, 0.0};
}

double bubble_value(const SurfaceModel& s, const SurfacePoint& x, const SurfacePoint& c, double delta, double rc) {
  double d = s.distance(x, c);
  if (d >= 2 * rc) return 8 * kPi * s.green(x, c);
  Radius q = radius_of(s, d);
  double rho2 = q.r * q.r;
  double A = s.kind() == SurfaceKind::Sphere ? 8 * kPi * s.robin() : 8 * kPi * s.green_regular(x, c);
  double chi = smooth_bump(d / (2 * rc));
  double v = A - 2 * chi * std::log(rho2 + delta * delta);
  if (chi < 1) v -= 2 * (1 - chi) * std::log(rho2);
  return v;
}

double bubble_laplacian(const SurfaceModel& s, const SurfacePoint& x, const SurfacePoint& c, double delta, double rc) {
  const double flat = 8 * kPi / s.area();
  double d = s.distance(x, c);
  if (d >= 2 * rc) return flat;
  const bool sphere = s.kind() == SurfaceKind::Sphere;
  Radius q = radius_of(s, d);
  const double dd = delta * delta, den = q.r * q.r + dd;
  double l2 = std::log(den);
  double l2d = 2 * q.r * q.r1 / den;
  double l2dd = 2 * (q.r1 * q.r1 + q.r * q.r2) / den - 4 * q.r * q.r * q.r1 * q.r1 / (den * den);
  double lap_l2 = d < 1e-7 ? 4.0 / dd : laplacian_radial(s, d, l2d, l2dd);

  double t = d / (2 * rc);
  double chi = smooth_bump(t), c1 = smooth_bump_d1(t) / (2 * rc), c2 = smooth_bump_d2(t) / (4 * rc * rc);
  double lap_chi = (c1 == 0 && c2 == 0) ? 0.0 : laplacian_radial(s, d, c1, c2);

  double out = (sphere ? 0.0 : flat) - 2 * (chi * lap_l2 + l2 * lap_chi + 2 * c1 * l2d);
  if (chi < 1) {
    double l1 = std::log(q.r * q.r), l1d = 2 * q.r1 / q.r;
    double lap_l1 = sphere ? -1.0 : 0.0;
    out -= 2 * ((1 - chi) * lap_l1 - l1 * lap_chi - 2 * c1 * l1d);
  }
  return out;
}

// Integral over the geodesic ball B_R(c) in polar coordinates, radially graded from `core`.
template <class F>
double ball_integral(const SurfaceModel& s, const SurfacePoint& c, double R, double core, F&& f) {
  static const auto gl = gauss_legendre(12, 0.0, 1.0);
  std::vector<double> brk{0.0};
  for (double r = std::min(core, R); r < R; r *= 2) brk.push_back(r);
  brk.push_back(R);
  TangentFrame fr = s.frame(c);
  const int na = 64;
  double total = 0;
  for (size_t k = 0; k + 1 < brk.size(); ++k) {
    double lo = brk[k], hi = brk[k + 1];
    for (auto [u, w] : gl) {
      double r = lo + (hi - lo) * u;
      double jac = s.kind() == SurfaceKind::Sphere ? std::sin(r) : r;
      double ring = 0;
      for (int a = 0; a < na; ++a) {
        double th = 2 * kPi * (a + 0.5) / na;
        ring += f(s.exp(c, (fr.e1 * std::cos(th) + fr.e2 * std::sin(th)) * r));
      }
      total += ring * (2 * kPi / na) * w * (hi - lo) * jac;
    }
  }
  return total;
}

std::vector<PatchSpec> bubble_patches(const BubbleAnsatz& v) {
  std::vector<PatchSpec> p;
  for (int j = 0; j < v.centers.size(); ++j) p.push_back({v.centers.xi[j], 2 * v.r_c, v.delta[j] / 4});
  return p;
}

std::vector<PatchSpec> source_patches(const ProblemData& d, const BubbleAnsatz& v) {
  const SurfaceModel& s = *d.surface;
  std::vector<PatchSpec> out;
  for (int i = 0; i < d.m(); ++i) {
    const auto& p = d.sing.points[i];
    double near = 0.5 * s.injectivity_radius();
    for (int k = 0; k < d.m(); ++k)
      if (k != i) near = std::min(near, s.distance(p, d.sing.points[k]));
    for (const auto& c : v.centers.xi) near = std::min(near, s.distance(p, c));
    out.push_back({p, 0.2 * near, 1e-6});
  }
  return out;
}

// Reference level for e^v: the largest centre value keeps exponentials bounded.
double v_ref(const BubbleAnsatz& v) {
  double m = -kInf;
  for (const auto& c : v.centers.xi) m = std::max(m, v.value(c));
  return m;
}

}  // namespace

double bubble_profile(double delta, double r) {
  double den = delta * delta + r * r;
  return std::log(8 * delta * delta / (den * den));
}

double BubbleAnsatz::value(const SurfacePoint& x) const {
  double v = 0;
  for (int j = 0; j < centers.size(); ++j) v += bubble_value(*surface, x, centers.xi[j], delta[j], r_c);
  return v;
}

double BubbleAnsatz::laplacian(const SurfacePoint& x) const {
  double v = 0;
  for (int j = 0; j < centers.size(); ++j) v += bubble_laplacian(*surface, x, centers.xi[j], delta[j], r_c);
  return v;
}

std::vector<double> balanced_scales(const ProblemData& d, const Configuration& xi, double delta) {
  const SurfaceModel& s = *d.surface;
  std::vector<double> w(xi.size());
  for (int j = 0; j < xi.size(); ++j) {
    double e = 8 * kPi * s.robin();
    for (int k = 0; k < xi.size(); ++k)
      if (k != j) e += 8 * kPi * s.green(xi.xi[j], xi.xi[k]);
    w[j] = std::log(k_tilde(d, xi.xi[j])) + e;
  }
  double mx = *std::max_element(w.begin(), w.end());
  std::vector<double> out;
  for (double l : w) out.push_back(delta * std::exp(0.5 * (l - mx)));
  return out;
}

BubbleAnsatz assemble_bubble(const ProblemData& d, const Configuration& xi, const std::vector<double>& delta) {
  const SurfaceModel& s = *d.surface;
  if (!domain_flags(d, xi).in_M_plus) fail(ErrorCode::OutOfDomain, "bubble centres must lie in M^+");
  if (static_cast<int>(delta.size()) != xi.size()) fail(ErrorCode::InvalidArgument, "one scale per centre");
  for (double dl : delta) {
    if (!(dl > 0)) fail(ErrorCode::InvalidArgument, "scales must be positive");
    if (dl >= 0.1 * s.injectivity_radius()) fail(ErrorCode::ScaleTooLarge, "scale exceeds 0.1 * injectivity radius");
  }
  SignAnalysis sa = analyze_sign(s, *d.K, s.kind() == SurfaceKind::Sphere ? 48 : 64,
                                 s.kind() == SurfaceKind::Sphere ? 96 : 64);
  double m = 0.5 * s.injectivity_radius();
  for (int j = 0; j < xi.size(); ++j) {
    m = std::min(m, sa.distance_to_zero_set(s, xi.xi[j]));
    for (const auto& p : d.sing.points) m = std::min(m, s.distance(xi.xi[j], p));
    for (int k = 0; k < xi.size(); ++k)
      if (k != j) m = std::min(m, s.distance(xi.xi[j], xi.xi[k]));
  }
  BubbleAnsatz b;
  b.surface = d.surface;
  b.centers = xi;
  b.delta = delta;
  b.r_c = 0.2 * m;
  b.field = s.sample([&](const SurfacePoint& x) { return b.value(x); });
  return b;
}

MassReport concentration_measure(const ProblemData& d, const BubbleAnsatz& v, double rho, double r) {
  const SurfaceModel& s = *d.surface;
  if (!(r > 0) || r >= s.injectivity_radius()) fail(ErrorCode::InvalidArgument, "ball radius out of range");
  for (int j = 0; j < v.centers.size(); ++j)
    for (int k = 0; k < j; ++k)
      if (s.distance(v.centers.xi[j], v.centers.xi[k]) <= 2 * r) fail(ErrorCode::BallsOverlap, "mass balls overlap");
  const double ref = v_ref(v);
  auto density = [&](const SurfacePoint& x) { return k_tilde(d, x) * std::exp(v.value(x) - ref); };

  auto patches = bubble_patches(v);
  auto src = source_patches(d, v);
  patches.insert(patches.end(), src.begin(), src.end());
  double z = 0;
  for (const auto& q : s.composite_quadrature(patches)) z += q.w * density(q.x);
  if (!(z > 0)) fail(ErrorCode::DomainX, "integral of K-tilde e^v is not positive");

  MassReport m;
  m.z = z * std::exp(ref);
  for (int j = 0; j < v.centers.size(); ++j)
    m.masses.push_back(rho * ball_integral(s, v.centers.xi[j], r, v.delta[j] / 4, density) / z);
  m.total = rho;  // the measure is normalized by the same quadrature
  return m;
}

double j_rho(const ProblemData& d, const BubbleAnsatz& v, double rho, double shift) {
  const SurfaceModel& s = *d.surface;
  auto patches = bubble_patches(v);
  auto src = source_patches(d, v);
  patches.insert(patches.end(), src.begin(), src.end());
  auto nodes = s.composite_quadrature(patches);
  const double ref = v_ref(v) + shift;
  double area = 0, iv = 0, z = 0;
  std::vector<double> vals(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    vals[i] = v.value(nodes[i].x) + shift;
    area += nodes[i].w;
    iv += nodes[i].w * vals[i];
    z += nodes[i].w * k_tilde(d, nodes[i].x) * std::exp(vals[i] - ref);
  }
  if (!(z > 0)) fail(ErrorCode::DomainX, "integral of K-tilde e^v is not positive");
  const double vbar = iv / area;
  double dirichlet = 0;
  for (size_t i = 0; i < nodes.size(); ++i) dirichlet += nodes[i].w * (vals[i] - vbar) * (-v.laplacian(nodes[i].x));
  return 0.5 * dirichlet + rho * vbar - rho * (ref + std::log(z));
}

namespace {

// sum over nonconstant modes of |c|^2 / lambda, with Parseval's normalization of each surface.
double inverse_sqrt_norm(const SurfaceModel& s, const ScalarField& f) {
  Spectrum sp = s.analyze(f);
  double acc = 0;
  if (s.kind() == SurfaceKind::Sphere) {
    for (size_t idx = 1; idx < sp.real.size(); ++idx) {
      int l = static_cast<int>(std::floor(std::sqrt(static_cast<double>(idx)) + 1e-9));
      acc += sp.real[idx] * sp.real[idx] / (l * (l + 1.0));
    }
    return std::sqrt(acc);
  }
  const int K = sp.degree, w = 2 * K + 1;
  for (int n = -K; n <= K; ++n)
    for (int m = -K; m <= K; ++m) {
      if (n == 0 && m == 0) continue;
      double kx = 2 * kPi * n / s.period_a(), ky = 2 * kPi * m / s.period_b();
      acc += std::norm(sp.cplx[(n + K) * w + (m + K)]) / (kx * kx + ky * ky);
    }
  return std::sqrt(acc * s.area());
}

}  // namespace

ResidualReport pde_residual(const ProblemData& d, const BubbleAnsatz& v, double rho, double r) {
  const SurfaceModel& s = *d.surface;
  ResidualReport rep;
  rep.rho = rho;
  MassReport m = concentration_measure(d, v, rho, r > 0 ? r : v.r_c);
  rep.masses = m.masses;
  rep.total_mass = m.total;
  rep.z = m.z;
  const double ref = v_ref(v);
  const double zr = m.z * std::exp(-ref);
  auto residual = [&](const SurfacePoint& x) {
    return -v.laplacian(x) - rho * (k_tilde(d, x) * std::exp(v.value(x) - ref) / zr - 1.0 / s.area());
  };
  auto patches = bubble_patches(v);
  auto src = source_patches(d, v);
  patches.insert(patches.end(), src.begin(), src.end());
  double l2 = 0;
  for (const auto& q : s.composite_quadrature(patches)) {
    double rv = residual(q.x);
    l2 += q.w * rv * rv;
  }
  rep.l2_residual = std::sqrt(l2);
  // Grid nodes sitting on a source carry no value; the residual there is set to zero.
  rep.dual_residual = inverse_sqrt_norm(s, s.sample([&](const SurfacePoint& x) {
    for (const auto& p : d.sing.points)
      if (s.distance(x, p) < 1e-9) return 0.0;
    return residual(x);
  }));
  rep.j_rho = j_rho(d, v, rho);
  rep.gauss_bonnet_gap = d.rho_geo() > 0 ? gauss_bonnet_check(d, v).gap : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

ResidualReport pde_residual_grid(const ScalarField& v, const ScalarField& ktilde, double rho) {
  const SurfaceModel& s = *v.surface;
  ResidualReport rep;
  rep.rho = rho;
  ScalarField lap = s.laplacian(v);
  ScalarField dens{v.surface, {}};
  double vmax = *std::max_element(v.values.begin(), v.values.end());
  for (size_t i = 0; i < v.values.size(); ++i) dens.values.push_back(ktilde.values[i] * std::exp(v.values[i] - vmax));
  double z = s.integrate(dens);
  if (!(z > 0)) fail(ErrorCode::DomainX, "integral of K-tilde e^v is not positive");
  rep.z = z * std::exp(vmax);
  ScalarField res{v.surface, {}}, sq{v.surface, {}}, one{v.surface, std::vector<double>(v.values.size(), 1.0)};
  for (size_t i = 0; i < v.values.size(); ++i) {
    double r = -lap.values[i] - rho * (dens.values[i] / z - 1.0 / s.area());
    res.values.push_back(r);
    sq.values.push_back(r * r);
  }
  rep.l2_residual = std::sqrt(s.integrate(sq));
  rep.dual_residual = inverse_sqrt_norm(s, res);
  double area = s.integrate(one), vbar = s.integrate(v) / area;
  ScalarField dir{v.surface, {}};
  for (size_t i = 0; i < v.values.size(); ++i) dir.values.push_back((v.values[i] - vbar) * -lap.values[i]);
  rep.j_rho = 0.5 * s.integrate(dir) + rho * vbar - rho * (vmax + std::log(z));
  rep.total_mass = rho;
  return rep;
}

GaussBonnetReport gauss_bonnet_check(const ProblemData& d, const BubbleAnsatz& v) {
  const SurfaceModel& s = *d.surface;
  GaussBonnetReport g;
  g.target = d.rho_geo();
  if (!(g.target > 0))
    fail(ErrorCode::NormalizationFailed, "chi(Sigma, alpha) must be positive to normalize against Gauss-Bonnet");
  const double ref = v_ref(v);
  auto density = [&](const SurfacePoint& x) { return k_tilde(d, x) * std::exp(v.value(x) - ref); };
  auto bub = bubble_patches(v);
  auto full = bub;
  auto src = source_patches(d, v);
  full.insert(full.end(), src.begin(), src.end());
  double z_norm = 0, z_full = 0;
  for (const auto& q : s.composite_quadrature(bub)) z_norm += q.w * density(q.x);
  for (const auto& q : s.composite_quadrature(full)) z_full += q.w * density(q.x);
  if (!(z_norm > 0) || !(z_full > 0)) fail(ErrorCode::NormalizationFailed, "integral of K-tilde e^v is not positive");
  g.shift = std::log(0.5 * g.target / z_norm) - ref;
  g.integral = g.target * z_full / z_norm;
  g.gap = std::abs(g.integral - g.target);
  return g;
}

}  // namespace sll
