#include "sll/surface.hpp"

#include <fftw3.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace sll {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGamma = std::numbers::egamma;
constexpr double kCoincide = 1e-13;

double e1(double z) { return -std::expint(-z); }

// E1(z) + log z + gamma, entire; series avoids the cancellation near 0.
double ein(double z) {
  if (z < 1.0) {
    double term = z, sum = z;
    for (int n = 2; n < 40; ++n) {
      term *= -z / n;
      double add = term / n;
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return e1(z) + std::log(z) + kGamma;
}

double wrap(double u, double period) {
  double r = u - period * std::floor(u / period);
  if (r >= period) r -= period;
  return r;
}

double min_image(double d, double period) { return d - period * std::nearbyint(d / period); }

// Fully normalized associated Legendre values, Y_l0 = P(l,0), Y_lm = sqrt2 P(l,m) trig(m lon).
void legendre_row(double t, int L, double* out) {
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  auto off = [L](int m) { return m * (L + 1) - m * (m - 1) / 2; };
  double pmm = std::sqrt(1.0 / (4.0 * kPi));
  for (int m = 0; m <= L; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    double* col = out + off(m);
    col[0] = pmm;
    if (m == L) break;
    col[1] = std::sqrt(2.0 * m + 3.0) * t * pmm;
    for (int l = m + 2; l <= L; ++l) {
      double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
      col[l - m] = a * (t * col[l - m - 1] - b * col[l - m - 2]);
    }
  }
}

int sh_index(int l, int m) { return l * l + l + m; }

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::vector<std::pair<double, double>> gauss_legendre(int n, double lo, double hi) {
  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(static_cast<size_t>(n));
  std::vector<std::pair<double, double>> r(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(lo, hi, i, &r[i].first, &r[i].second, tab);
  gsl_integration_glfixed_table_free(tab);
  std::sort(r.begin(), r.end());
  return r;
}

double smooth_bump(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  double u = 2.0 * (1.0 - t);
  double A = std::exp(-1.0 / u), B = std::exp(-1.0 / (1.0 - u));
  return A / (A + B);
}

namespace {
struct StepDerivs {
  double s1, s2;
};
StepDerivs step_derivs(double u) {
  auto f = [](double x) { return std::exp(-1.0 / x); };
  auto f1 = [&](double x) { return f(x) / (x * x); };
  auto f2 = [&](double x) { return f(x) * (1.0 / (x * x * x * x) - 2.0 / (x * x * x)); };
  double A = f(u), B = f(1 - u), A1 = f1(u), B1 = -f1(1 - u), A2 = f2(u), B2 = f2(1 - u);
  double S = A + B, N = A1 * B - A * B1, N1 = A2 * B - A * B2;
  return {N / (S * S), N1 / (S * S) - 2.0 * N * (A1 + B1) / (S * S * S)};
}
}  // namespace

double smooth_bump_d1(double t) {
  if (t <= 0.5 || t >= 1.0) return 0.0;
  return -2.0 * step_derivs(2.0 * (1.0 - t)).s1;
}

double smooth_bump_d2(double t) {
  if (t <= 0.5 || t >= 1.0) return 0.0;
  return 4.0 * step_derivs(2.0 * (1.0 - t)).s2;
}

struct SurfaceModel::Impl {
  // sphere
  std::vector<double> legendre;  // per row, m-major triangular
  int nlm = 0;
  fftw_plan r2c = nullptr, c2r = nullptr;
  // torus
  fftw_plan fwd = nullptr, bwd = nullptr;
  double eta = 0;
  struct Mode {
    double kx, ky, coef;
  };
  std::vector<Mode> modes;
  std::vector<std::pair<double, double>> images;

  ~Impl() {
    std::lock_guard lk(fftw_planner_mutex());
    for (fftw_plan p : {r2c, c2r, fwd, bwd})
      if (p) fftw_destroy_plan(p);
  }
};

SurfaceModel::~SurfaceModel() = default;

SurfaceRef SurfaceModel::sphere(int nlat, int nlon, int degree) {
  if (nlat < 4 || nlon < 8 || nlon % 2) fail(ErrorCode::InvalidArgument, "sphere grid too small or odd longitude count");
  std::shared_ptr<SurfaceModel> s(new SurfaceModel());
  s->kind_ = SurfaceKind::Sphere;
  s->area_ = 4.0 * kPi;
  s->inj_ = kPi;
  s->robin_ = (2.0 * std::log(2.0) - 1.0) / (4.0 * kPi);
  int maxdeg = std::min(nlat - 1, nlon / 2 - 1);
  s->degree_ = degree < 0 ? maxdeg : std::min(degree, maxdeg);
  s->grid_ = s->tensor_grid(nlat, nlon);
  s->impl_ = std::make_unique<Impl>();
  auto& im = *s->impl_;
  const int L = s->degree_;
  im.nlm = (L + 1) * (L + 2) / 2;
  im.legendre.resize(static_cast<size_t>(nlat) * im.nlm);
  for (int i = 0; i < nlat; ++i) legendre_row(std::cos(s->grid_.c1[i]), L, &im.legendre[size_t(i) * im.nlm]);
  std::vector<double> in(nlon);
  std::vector<fftw_complex> out(nlon / 2 + 1);
  std::lock_guard lk(fftw_planner_mutex());
  im.r2c = fftw_plan_dft_r2c_1d(nlon, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  im.c2r = fftw_plan_dft_c2r_1d(nlon, out.data(), in.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  return s;
}

SurfaceRef SurfaceModel::torus(double a, double b, int nu, int nv, int degree) {
  if (!(a > 0) || !(b > 0)) fail(ErrorCode::InvalidArgument, "torus periods must be positive");
  if (nu < 8 || nv < 8) fail(ErrorCode::InvalidArgument, "torus grid too small");
  std::shared_ptr<SurfaceModel> s(new SurfaceModel());
  s->kind_ = SurfaceKind::Torus;
  s->a_ = a;
  s->b_ = b;
  s->area_ = a * b;
  s->inj_ = 0.5 * std::min(a, b);
  int maxdeg = std::min(nu, nv) / 2 - 1;
  s->degree_ = degree < 0 ? maxdeg : std::min(degree, maxdeg);
  s->grid_ = s->tensor_grid(nu, nv);
  s->impl_ = std::make_unique<Impl>();
  auto& im = *s->impl_;

  // Ewald split; both tails below e^-40.
  const double A = a * b, eta = kPi / A, cut = 40.0;
  im.eta = eta;
  const double rc = std::sqrt(cut / eta);
  const int I = int(std::ceil((rc + 0.5 * a) / a)), J = int(std::ceil((rc + 0.5 * b) / b));
  for (int i = -I; i <= I; ++i)
    for (int j = -J; j <= J; ++j) im.images.emplace_back(i * a, j * b);
  const double kmax = std::sqrt(4.0 * eta * cut);
  const int NX = int(std::ceil(kmax * a / (2 * kPi))), NY = int(std::ceil(kmax * b / (2 * kPi)));
  for (int n = 0; n <= NX; ++n)
    for (int m = -NY; m <= NY; ++m) {
      if (n == 0 && m <= 0) continue;
      double kx = 2 * kPi * n / a, ky = 2 * kPi * m / b, k2 = kx * kx + ky * ky;
      if (k2 / (4 * eta) > cut) continue;
      im.modes.push_back({kx, ky, 2.0 * std::exp(-k2 / (4 * eta)) / (k2 * A)});
    }
  s->robin_ = s->torus_kernel(Vec3{}, true);

  std::vector<fftw_complex> buf(size_t(nu) * nv);
  std::lock_guard lk(fftw_planner_mutex());
  im.fwd = fftw_plan_dft_2d(nu, nv, buf.data(), buf.data(), FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  im.bwd = fftw_plan_dft_2d(nu, nv, buf.data(), buf.data(), FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  return s;
}

TensorGrid SurfaceModel::tensor_grid(int n1, int n2) const {
  TensorGrid g;
  g.n1 = n1;
  g.n2 = n2;
  if (kind_ == SurfaceKind::Sphere) {
    auto gl = gauss_legendre(n1);
    std::reverse(gl.begin(), gl.end());  // north first
    for (auto& [t, w] : gl) {
      g.c1.push_back(std::acos(t));
      g.row_weight.push_back(w * 2 * kPi / n2);
    }
    for (int j = 0; j < n2; ++j) g.c2.push_back(2 * kPi * j / n2);
    g.points.reserve(size_t(n1) * n2);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) g.points.push_back(from_chart(g.c2[j], g.c1[i]));
  } else {
    for (int i = 0; i < n1; ++i) {
      g.c1.push_back(a_ * i / n1);
      g.row_weight.push_back(a_ * b_ / (double(n1) * n2));
    }
    for (int j = 0; j < n2; ++j) g.c2.push_back(b_ * j / n2);
    g.points.reserve(size_t(n1) * n2);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) g.points.push_back(SurfacePoint{{g.c1[i], g.c2[j], 0}});
  }
  return g;
}

SurfacePoint SurfaceModel::point(const Vec3& raw) const {
  if (kind_ == SurfaceKind::Sphere) {
    double n = norm(raw);
    if (!(n > 1e-300) || !std::isfinite(n)) fail(ErrorCode::InvalidArgument, "cannot project vector onto the sphere");
    return {raw / n};
  }
  if (!std::isfinite(raw.x) || !std::isfinite(raw.y)) fail(ErrorCode::InvalidArgument, "non-finite torus coordinate");
  return {{wrap(raw.x, a_), wrap(raw.y, b_), 0.0}};
}

SurfacePoint SurfaceModel::from_chart(double c1, double c2) const {
  if (kind_ == SurfaceKind::Sphere) {
    double st = std::sin(c2);
    return {{st * std::cos(c1), st * std::sin(c1), std::cos(c2)}};
  }
  return point({c1, c2, 0});
}

std::array<double, 2> SurfaceModel::to_chart(const SurfacePoint& x) const {
  if (kind_ == SurfaceKind::Sphere) {
    double lon = std::atan2(x.p.y, x.p.x);
    if (lon < 0) lon += 2 * kPi;
    return {lon, std::atan2(std::hypot(x.p.x, x.p.y), x.p.z)};
  }
  return {x.p.x, x.p.y};
}

double SurfaceModel::distance(const SurfacePoint& x, const SurfacePoint& y) const {
  if (kind_ == SurfaceKind::Sphere) return std::atan2(norm(cross(x.p, y.p)), dot(x.p, y.p));
  return std::hypot(min_image(y.p.x - x.p.x, a_), min_image(y.p.y - x.p.y, b_));
}

TangentFrame SurfaceModel::frame(const SurfacePoint& x) const {
  if (kind_ == SurfaceKind::Torus) return {{1, 0, 0}, {0, 1, 0}};
  // Two charts: east/north away from the poles, swapped axis near them.
  Vec3 axis = std::abs(x.p.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  Vec3 e1 = normalized(cross(axis, x.p));
  return {e1, cross(x.p, e1)};
}

Vec3 SurfaceModel::project_tangent(const SurfacePoint& x, const Vec3& v) const {
  if (kind_ == SurfaceKind::Torus) return {v.x, v.y, 0};
  return v - x.p * dot(x.p, v);
}

SurfacePoint SurfaceModel::exp(const SurfacePoint& x, const Vec3& v) const {
  double t = norm(v);
  if (t >= inj_) fail(ErrorCode::StepTooLarge, "tangent step exceeds injectivity radius");
  if (kind_ == SurfaceKind::Torus) return point(x.p + Vec3{v.x, v.y, 0});
  if (t == 0) return x;
  Vec3 u = v / t;
  return point(x.p * std::cos(t) + u * std::sin(t));
}

Vec3 SurfaceModel::log(const SurfacePoint& x, const SurfacePoint& y) const {
  if (kind_ == SurfaceKind::Torus) return {min_image(y.p.x - x.p.x, a_), min_image(y.p.y - x.p.y, b_), 0};
  Vec3 w = y.p - x.p * dot(x.p, y.p);
  double nw = norm(w);
  double th = std::atan2(nw, dot(x.p, y.p));
  if (th == 0) return {};
  if (nw < 1e-15) fail(ErrorCode::OutOfDomain, "logarithm at the cut locus");
  return w * (th / nw);
}

Vec3 SurfaceModel::transport(const SurfacePoint& x, const Vec3& v, const Vec3& w) const {
  if (kind_ == SurfaceKind::Torus) return w;
  double t = norm(v);
  if (t == 0) return w;
  Vec3 u = v / t;
  double c = dot(u, w);
  return w + (u * (std::cos(t) - 1.0) - x.p * std::sin(t)) * c;
}

double SurfaceModel::torus_kernel(const Vec3& r, bool regular) const {
  const auto& im = *impl_;
  const double A = a_ * b_, eta = im.eta;
  double four = 0;
  for (const auto& md : im.modes) four += md.coef * std::cos(md.kx * r.x + md.ky * r.y);
  double real = 0;
  for (const auto& [lx, ly] : im.images) {
    double dx = r.x + lx, dy = r.y + ly, z = eta * (dx * dx + dy * dy);
    if (z > 45.0) continue;
    if (lx == 0 && ly == 0) {
      real += regular ? ein(z) - kGamma - std::log(eta) : e1(z);
    } else {
      real += e1(z);
    }
  }
  return four + real / (4 * kPi) - 1.0 / (4 * eta * A);
}

double SurfaceModel::green(const SurfacePoint& x, const SurfacePoint& p) const {
  if (kind_ == SurfaceKind::Sphere) {
    double s = norm(x.p - p.p);
    if (s < kCoincide) fail(ErrorCode::CoincidentPoints, "Green's function at coincident points");
    return -std::log(s) / (2 * kPi) + robin_;
  }
  Vec3 r{min_image(x.p.x - p.p.x, a_), min_image(x.p.y - p.p.y, b_), 0};
  if (std::hypot(r.x, r.y) < kCoincide) fail(ErrorCode::CoincidentPoints, "Green's function at coincident points");
  return torus_kernel(r, false);
}

double SurfaceModel::green_regular(const SurfacePoint& x, const SurfacePoint& p) const {
  if (kind_ == SurfaceKind::Sphere) {
    double d = distance(x, p);
    if (d < 1e-8) return robin_ + d * d / (48 * kPi);
    double half = 0.5 * d;
    return -std::log(std::sin(half) / half) / (2 * kPi) + robin_;
  }
  Vec3 r{min_image(x.p.x - p.p.x, a_), min_image(x.p.y - p.p.y, b_), 0};
  return torus_kernel(r, true);
}

Vec3 SurfaceModel::grad_green(const SurfacePoint& x, const SurfacePoint& p) const {
  if (kind_ == SurfaceKind::Sphere) {
    Vec3 diff = x.p - p.p;
    double s2 = dot(diff, diff);
    if (s2 < kCoincide * kCoincide) fail(ErrorCode::CoincidentPoints, "Green's gradient at coincident points");
    return (p.p - x.p * dot(x.p, p.p)) / (2 * kPi * s2);
  }
  Vec3 r{min_image(x.p.x - p.p.x, a_), min_image(x.p.y - p.p.y, b_), 0};
  if (std::hypot(r.x, r.y) < kCoincide) fail(ErrorCode::CoincidentPoints, "Green's gradient at coincident points");
  const auto& im = *impl_;
  double gx = 0, gy = 0;
  for (const auto& md : im.modes) {
    double sn = std::sin(md.kx * r.x + md.ky * r.y);
    gx -= md.coef * md.kx * sn;
    gy -= md.coef * md.ky * sn;
  }
  for (const auto& [lx, ly] : im.images) {
    double dx = r.x + lx, dy = r.y + ly, s2 = dx * dx + dy * dy;
    if (im.eta * s2 > 45.0) continue;
    double f = std::exp(-im.eta * s2) / s2 / (2 * kPi);
    gx -= f * dx;
    gy -= f * dy;
  }
  return {gx, gy, 0};
}

std::vector<QuadNode> SurfaceModel::quadrature() const {
  std::vector<QuadNode> q;
  q.reserve(grid_.points.size());
  for (int i = 0; i < grid_.n1; ++i)
    for (int j = 0; j < grid_.n2; ++j) {
      long k = grid_.index(i, j);
      q.push_back({grid_.points[k], grid_.row_weight[i], k});
    }
  return q;
}

namespace {
// Partition of unity for patch quadrature: the transition spans the whole radius so the
// base-grid share (1 - blend) stays resolvable; it is flat to all orders at both ends.
double patch_blend(double t) {
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  double A = std::exp(-1.0 / (1.0 - t)), B = std::exp(-1.0 / t);
  return A / (A + B);
}
}  // namespace

std::vector<QuadNode> SurfaceModel::composite_quadrature(const std::vector<PatchSpec>& patches, int angular,
                                                         int radial_per_panel) const {
  for (size_t i = 0; i < patches.size(); ++i) {
    if (!(patches[i].radius > 0) || patches[i].radius >= inj_)
      fail(ErrorCode::InvalidArgument, "patch radius must lie in (0, injectivity radius)");
    for (size_t j = 0; j < i; ++j)
      if (distance(patches[i].center, patches[j].center) < patches[i].radius + patches[j].radius)
        fail(ErrorCode::InvalidArgument, "quadrature patches overlap");
  }
  std::vector<QuadNode> q;
  for (int i = 0; i < grid_.n1; ++i)
    for (int j = 0; j < grid_.n2; ++j) {
      long k = grid_.index(i, j);
      double keep = 1.0;
      for (const auto& pt : patches) keep -= patch_blend(distance(grid_.points[k], pt.center) / pt.radius);
      if (keep > 0) q.push_back({grid_.points[k], grid_.row_weight[i] * keep, k});
    }
  auto gl = gauss_legendre(radial_per_panel, 0.0, 1.0);
  for (const auto& pt : patches) {
    std::vector<double> brk{0.0};
    double r = std::min(pt.core_scale, pt.radius);
    while (r < pt.radius) {
      brk.push_back(r);
      r *= 2.0;
    }
    brk.push_back(pt.radius);
    TangentFrame fr = frame(pt.center);
    const double wt = 2 * kPi / angular;
    for (size_t k = 0; k + 1 < brk.size(); ++k) {
      double lo = brk[k], hi = brk[k + 1];
      for (auto [u, w] : gl) {
        double rr = lo + (hi - lo) * u;
        double jac = kind_ == SurfaceKind::Sphere ? std::sin(rr) : rr;
        double wr = w * (hi - lo) * jac * patch_blend(rr / pt.radius);
        if (wr == 0) continue;
        for (int j = 0; j < angular; ++j) {
          double th = wt * (j + 0.5);
          Vec3 v = (fr.e1 * std::cos(th) + fr.e2 * std::sin(th)) * rr;
          q.push_back({exp(pt.center, v), wr * wt, -1});
        }
      }
    }
  }
  return q;
}

ScalarField SurfaceModel::sample(const std::function<double(const SurfacePoint&)>& f) const {
  ScalarField out{shared_from_this(), {}};
  out.values.reserve(grid_.points.size());
  for (const auto& x : grid_.points) out.values.push_back(f(x));
  return out;
}

double SurfaceModel::integrate(const ScalarField& f) const {
  if (f.values.size() != grid_.points.size()) fail(ErrorCode::InvalidArgument, "field does not match grid");
  double s = 0;
  for (int i = 0; i < grid_.n1; ++i) {
    double row = 0;
    for (int j = 0; j < grid_.n2; ++j) row += f.values[grid_.index(i, j)];
    s += row * grid_.row_weight[i];
  }
  return s;
}

Spectrum SurfaceModel::analyze(const ScalarField& f) const {
  if (f.values.size() != grid_.points.size()) fail(ErrorCode::InvalidArgument, "field does not match grid");
  Spectrum sp;
  sp.degree = degree_;
  const int L = degree_, n1 = grid_.n1, n2 = grid_.n2;
  if (kind_ == SurfaceKind::Sphere) {
    sp.real.assign(size_t(L + 1) * (L + 1), 0.0);
    std::vector<double> row(n2);
    std::vector<fftw_complex> F(n2 / 2 + 1);
    const double r2 = std::sqrt(2.0);
    for (int i = 0; i < n1; ++i) {
      std::copy_n(&f.values[grid_.index(i, 0)], n2, row.begin());
      fftw_execute_dft_r2c(impl_->r2c, row.data(), F.data());
      const double W = grid_.row_weight[i];
      const double* P = &impl_->legendre[size_t(i) * impl_->nlm];
      for (int m = 0, off = 0; m <= L; off += L + 1 - m, ++m) {
        double C = F[m][0] * W, S = -F[m][1] * W;
        for (int l = m; l <= L; ++l) {
          double p = P[off + l - m];
          if (m == 0) {
            sp.real[sh_index(l, 0)] += p * C;
          } else {
            sp.real[sh_index(l, m)] += r2 * p * C;
            sp.real[sh_index(l, -m)] += r2 * p * S;
          }
        }
      }
    }
    return sp;
  }
  std::vector<std::complex<double>> buf(f.values.begin(), f.values.end());
  fftw_execute_dft(impl_->fwd, reinterpret_cast<fftw_complex*>(buf.data()), reinterpret_cast<fftw_complex*>(buf.data()));
  const int K = L, w = 2 * K + 1;
  sp.cplx.assign(size_t(w) * w, 0.0);
  const double scale = 1.0 / (double(n1) * n2);
  for (int n = -K; n <= K; ++n)
    for (int m = -K; m <= K; ++m) {
      int i = (n + n1) % n1, j = (m + n2) % n2;
      sp.cplx[size_t(n + K) * w + (m + K)] = buf[size_t(i) * n2 + j] * scale;
    }
  return sp;
}

ScalarField SurfaceModel::synthesize(const Spectrum& sp) const {
  ScalarField out{shared_from_this(), std::vector<double>(grid_.points.size())};
  const int L = sp.degree, n1 = grid_.n1, n2 = grid_.n2;
  if (kind_ == SurfaceKind::Sphere) {
    if (L > degree_) fail(ErrorCode::InvalidArgument, "spectrum degree exceeds model degree");
    std::vector<fftw_complex> X(n2 / 2 + 1);
    std::vector<double> row(n2);
    const double r2 = std::sqrt(2.0);
    const int LM = degree_;
    for (int i = 0; i < n1; ++i) {
      for (auto& x : X) x[0] = x[1] = 0;
      const double* P = &impl_->legendre[size_t(i) * impl_->nlm];
      for (int m = 0, off = 0; m <= L; off += LM + 1 - m, ++m) {
        double gc = 0, gs = 0;
        for (int l = m; l <= L; ++l) {
          double p = P[off + l - m];
          gc += p * sp.real[sh_index(l, m)];
          if (m > 0) gs += p * sp.real[sh_index(l, -m)];
        }
        if (m == 0) {
          X[0][0] = gc;
        } else {
          X[m][0] = 0.5 * r2 * gc;
          X[m][1] = -0.5 * r2 * gs;
        }
      }
      fftw_execute_dft_c2r(impl_->c2r, X.data(), row.data());
      std::copy(row.begin(), row.end(), out.values.begin() + grid_.index(i, 0));
    }
    return out;
  }
  const int K = L, w = 2 * K + 1;
  std::vector<std::complex<double>> buf(size_t(n1) * n2, 0.0);
  for (int n = -K; n <= K; ++n)
    for (int m = -K; m <= K; ++m) {
      int i = (n + n1) % n1, j = (m + n2) % n2;
      buf[size_t(i) * n2 + j] = sp.cplx[size_t(n + K) * w + (m + K)];
    }
  fftw_execute_dft(impl_->bwd, reinterpret_cast<fftw_complex*>(buf.data()), reinterpret_cast<fftw_complex*>(buf.data()));
  for (size_t k = 0; k < buf.size(); ++k) out.values[k] = buf[k].real();
  return out;
}

double SurfaceModel::evaluate(const Spectrum& sp, const SurfacePoint& x) const {
  const int L = sp.degree;
  if (kind_ == SurfaceKind::Sphere) {
    std::vector<double> P(size_t(L + 1) * (L + 2) / 2);
    auto ch = to_chart(x);
    legendre_row(x.p.z, L, P.data());
    double sum = 0;
    const double r2 = std::sqrt(2.0);
    for (int m = 0, off = 0; m <= L; off += L + 1 - m, ++m) {
      double cm = std::cos(m * ch[0]), sm = std::sin(m * ch[0]);
      for (int l = m; l <= L; ++l) {
        double p = P[off + l - m];
        if (m == 0)
          sum += p * sp.real[sh_index(l, 0)];
        else
          sum += r2 * p * (cm * sp.real[sh_index(l, m)] + sm * sp.real[sh_index(l, -m)]);
      }
    }
    return sum;
  }
  const int K = L, w = 2 * K + 1;
  std::complex<double> sum = 0;
  for (int n = -K; n <= K; ++n)
    for (int m = -K; m <= K; ++m) {
      double ph = 2 * kPi * (n * x.p.x / a_ + m * x.p.y / b_);
      sum += sp.cplx[size_t(n + K) * w + (m + K)] * std::complex<double>(std::cos(ph), std::sin(ph));
    }
  return sum.real();
}

Spectrum SurfaceModel::apply_laplacian(const Spectrum& s) const {
  Spectrum out = s;
  if (kind_ == SurfaceKind::Sphere) {
    for (int l = 0; l <= s.degree; ++l)
      for (int m = -l; m <= l; ++m) out.real[sh_index(l, m)] *= -double(l) * (l + 1);
    return out;
  }
  const int K = s.degree, w = 2 * K + 1;
  for (int n = -K; n <= K; ++n)
    for (int m = -K; m <= K; ++m) {
      double kx = 2 * kPi * n / a_, ky = 2 * kPi * m / b_;
      out.cplx[size_t(n + K) * w + (m + K)] *= -(kx * kx + ky * ky);
    }
  return out;
}

ScalarField SurfaceModel::laplacian(const ScalarField& f) const { return synthesize(apply_laplacian(analyze(f))); }

ScalarField SurfaceModel::solve_poisson(const ScalarField& rhs) const {
  double mx = 0;
  for (double v : rhs.values) mx = std::max(mx, std::abs(v));
  double mean = integrate(rhs) / area_;
  if (std::abs(mean) > 1e-10 * (1.0 + mx)) fail(ErrorCode::NonZeroMean, "Poisson right-hand side has nonzero mean");
  Spectrum s = analyze(rhs);
  if (kind_ == SurfaceKind::Sphere) {
    s.real[0] = 0;
    for (int l = 1; l <= s.degree; ++l)
      for (int m = -l; m <= l; ++m) s.real[sh_index(l, m)] /= double(l) * (l + 1);
  } else {
    const int K = s.degree, w = 2 * K + 1;
    for (int n = -K; n <= K; ++n)
      for (int m = -K; m <= K; ++m) {
        auto& c = s.cplx[size_t(n + K) * w + (m + K)];
        if (n == 0 && m == 0) {
          c = 0;
          continue;
        }
        double kx = 2 * kPi * n / a_, ky = 2 * kPi * m / b_;
        c /= (kx * kx + ky * ky);
      }
  }
  return synthesize(s);
}

double laplacian_radial(const SurfaceModel& s, double d, double f1, double f2) {
  if (s.kind() == SurfaceKind::Sphere) return f2 + f1 * std::cos(d) / std::sin(d);
  return f2 + f1 / d;
}

double laplacian_at(const ScalarField& f, const SurfacePoint& x) {
  const auto& s = *f.surface;
  return s.evaluate(s.apply_laplacian(s.analyze(f)), x);
}

double laplacian_fd(const SurfaceModel& s, const std::function<double(const SurfacePoint&)>& f, const SurfacePoint& x,
                    double h) {
  TangentFrame fr = s.frame(x);
  double c = f(x), acc = 0;
  for (const Vec3& e : {fr.e1, fr.e2}) acc += f(s.exp(x, e * h)) + f(s.exp(x, e * -h)) - 2 * c;
  return acc / (h * h);
}

double smooth_sq_dist(const SurfaceModel& s, const SurfacePoint& x, const SurfacePoint& q) {
  if (s.kind() == SurfaceKind::Sphere) {
    Vec3 d = x.p - q.p;
    return dot(d, d);
  }
  double a = s.period_a(), b = s.period_b();
  double su = std::sin(kPi * (x.p.x - q.p.x) / a), sv = std::sin(kPi * (x.p.y - q.p.y) / b);
  return a * a / (kPi * kPi) * su * su + b * b / (kPi * kPi) * sv * sv;
}

Vec3 grad_smooth_sq_dist(const SurfaceModel& s, const SurfacePoint& x, const SurfacePoint& q) {
  if (s.kind() == SurfaceKind::Sphere) return (q.p - x.p * dot(x.p, q.p)) * -2.0;
  double a = s.period_a(), b = s.period_b();
  return {a / kPi * std::sin(2 * kPi * (x.p.x - q.p.x) / a), b / kPi * std::sin(2 * kPi * (x.p.y - q.p.y) / b), 0};
}

double lap_smooth_sq_dist(const SurfaceModel& s, const SurfacePoint& x, const SurfacePoint& q) {
  if (s.kind() == SurfaceKind::Sphere) return 4.0 * dot(x.p, q.p);
  double a = s.period_a(), b = s.period_b();
  return 2 * std::cos(2 * kPi * (x.p.x - q.p.x) / a) + 2 * std::cos(2 * kPi * (x.p.y - q.p.y) / b);
}

}  // namespace sll
