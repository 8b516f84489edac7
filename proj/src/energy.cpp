#include "sll/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace sll {

namespace {
constexpr double kPi = std::numbers::pi;
}

DomainFlags domain_flags(const ProblemData& d, const Configuration& xi) {
  const SurfaceModel& s = *d.surface;
  DomainFlags f;
  f.min_pair = f.min_source = f.min_K = std::numeric_limits<double>::infinity();
  for (int j = 0; j < xi.size(); ++j) {
    for (int k = 0; k < j; ++k) f.min_pair = std::min(f.min_pair, s.distance(xi.xi[j], xi.xi[k]));
    for (const auto& p : d.sing.points) f.min_source = std::min(f.min_source, s.distance(xi.xi[j], p));
    f.min_K = std::min(f.min_K, d.K->value(xi.xi[j]));
  }
  f.in_M = f.min_pair > 1e-13 && f.min_source > 1e-13;
  f.in_M_plus = f.in_M && f.min_K > 0;
  return f;
}

EnergyTerms energy_terms(const ProblemData& d, const Configuration& xi, bool need_log_k) {
  DomainFlags fl = domain_flags(d, xi);
  if (!fl.in_M) fail(ErrorCode::OutOfDomain, "configuration has a collision or sits on a source");
  if (need_log_k && !fl.in_M_plus) fail(ErrorCode::OutOfDomain, "configuration leaves {K > 0}");
  const SurfaceModel& s = *d.surface;
  EnergyTerms t;
  const int n = xi.size();
  for (int j = 0; j < n; ++j) {
    const auto& x = xi.xi[j];
    t.h_sum += s.green_regular(x, x);
    if (need_log_k) t.log_k_sum += std::log(d.K->value(x));
    t.f_sum += f_g(s, x);
    for (int i = 0; i < d.m(); ++i) {
      double g = d.sing.alpha[i] * s.green(x, d.sing.points[i]);
      (i < d.ell ? t.inner_sources : t.outer_sources) += g;
    }
    for (int k = j + 1; k < n; ++k) t.pair += 2.0 * s.green(x, xi.xi[k]);
  }
  return t;
}

double psi(const ProblemData& d, const Configuration& xi) {
  EnergyTerms t = energy_terms(d, xi);
  double calH = t.h_sum - t.outer_sources;
  return calH + (t.log_k_sum + t.f_sum) / (4 * kPi) - t.inner_sources + t.pair;
}

double phi(const ProblemData& d, const Configuration& xi) {
  EnergyTerms t = energy_terms(d, xi);
  double calH = t.h_sum - t.outer_sources;
  return calH + (t.log_k_sum + t.f_sum) / (4 * kPi) - t.inner_sources - t.pair;
}

double d_s(const ProblemData& d, const Configuration& xi, const std::vector<double>& s, double lo, double hi) {
  if (static_cast<int>(s.size()) != d.m()) fail(ErrorCode::InvalidArgument, "one weight per singular point");
  for (double v : s)
    if (v < lo || v > hi) fail(ErrorCode::SOutOfBox, "weight outside the admissible box");
  return evaluate(d, Functional::d_s(s), xi);
}

double evaluate(const ProblemData& d, const Functional& f, const Configuration& xi) {
  DomainFlags fl = domain_flags(d, xi);
  if (!fl.in_M || (f.w_log != 0 && !fl.in_M_plus)) fail(ErrorCode::OutOfDomain, "configuration outside the domain");
  const SurfaceModel& s = *d.surface;
  const int n = xi.size();
  double val = 0;
  for (int j = 0; j < n; ++j) {
    const auto& x = xi.xi[j];
    val += s.green_regular(x, x) + f_g(s, x) / (4 * kPi);
    if (f.w_log != 0) val += f.w_log * std::log(d.K->value(x)) / (4 * kPi);
    for (int i = 0; i < d.m(); ++i) val -= f.s[i] * s.green(x, d.sing.points[i]);
    for (int k = j + 1; k < n; ++k) val += 2.0 * f.sigma * s.green(x, xi.xi[k]);
  }
  return val;
}

std::vector<Vec3> gradient(const ProblemData& d, const Functional& f, const Configuration& xi) {
  const SurfaceModel& s = *d.surface;
  const int n = xi.size();
  std::vector<Vec3> g(n);
  for (int j = 0; j < n; ++j) {
    const auto& x = xi.xi[j];
    // The diagonal of h and f_g are constant on both model surfaces.
    Vec3 acc;
    if (f.w_log != 0) {
      Jet k = d.K->eval(x);
      acc += k.g * (f.w_log / (4 * kPi * k.v));
    }
    for (int i = 0; i < d.m(); ++i) acc -= s.grad_green(x, d.sing.points[i]) * f.s[i];
    for (int k = 0; k < n; ++k)
      if (k != j) acc += s.grad_green(x, xi.xi[k]) * (2.0 * f.sigma);
    g[j] = s.project_tangent(x, acc);
  }
  return g;
}

std::vector<Vec3> grad_psi(const ProblemData& d, const Configuration& xi) {
  DomainFlags fl = domain_flags(d, xi);
  if (!fl.in_M_plus) fail(ErrorCode::OutOfDomain, "configuration outside the domain");
  return gradient(d, Functional::psi(d), xi);
}

double a_fun(const ProblemData& d, const Configuration& xi) {
  DomainFlags fl = domain_flags(d, xi);
  if (!fl.in_M_plus) fail(ErrorCode::OutOfDomain, "configuration outside the domain");
  const SurfaceModel& s = *d.surface;
  const int n = xi.size();
  const double shift = (8 * kPi * d.N - 4 * kPi * d.chi_alpha()) / s.area();
  double total = 0;
  for (int j = 0; j < n; ++j) {
    const auto& x = xi.xi[j];
    double ex = 8 * kPi * s.green_regular(x, x);
    for (int k = 0; k < n; ++k)
      if (k != j) ex += 8 * kPi * s.green(x, xi.xi[k]);
    double lap = log_jet(d.K->eval(x)).lap;
    total += k_tilde(d, x) * std::exp(ex) * (lap + shift);
  }
  return 4 * kPi * total;
}

std::vector<TangentFrame> frames(const SurfaceModel& s, const Configuration& xi, const std::vector<double>& angles) {
  std::vector<TangentFrame> fr;
  fr.reserve(xi.xi.size());
  for (size_t j = 0; j < xi.xi.size(); ++j) {
    TangentFrame f = s.frame(xi.xi[j]);
    if (j < angles.size()) {
      double c = std::cos(angles[j]), sn = std::sin(angles[j]);
      f = {f.e1 * c + f.e2 * sn, f.e2 * c - f.e1 * sn};
    }
    fr.push_back(f);
  }
  return fr;
}

Eigen::VectorXd to_coords(const std::vector<Vec3>& g, const std::vector<TangentFrame>& fr) {
  Eigen::VectorXd v(2 * g.size());
  for (size_t j = 0; j < g.size(); ++j) {
    v[2 * j] = dot(g[j], fr[j].e1);
    v[2 * j + 1] = dot(g[j], fr[j].e2);
  }
  return v;
}

Configuration step(const SurfaceModel& s, const Configuration& xi, const std::vector<TangentFrame>& fr,
                   const Eigen::VectorXd& v) {
  Configuration out = xi;
  for (size_t j = 0; j < xi.xi.size(); ++j)
    out.xi[j] = s.exp(xi.xi[j], fr[j].e1 * v[2 * j] + fr[j].e2 * v[2 * j + 1]);
  return out;
}

Eigen::MatrixXd hessian(const ProblemData& d, const Functional& f, const Configuration& xi,
                        const std::vector<TangentFrame>& fr, double h) {
  const SurfaceModel& s = *d.surface;
  const int n = xi.size(), dim = 2 * n;
  Eigen::MatrixXd H(dim, dim);
  auto moved_grad = [&](int j, const Vec3& dir, double t) {
    Configuration y = xi;
    y.xi[j] = s.exp(xi.xi[j], dir * t);
    std::vector<Vec3> g = gradient(d, f, y);
    // Bring the moved point's gradient back to xi_j along the same geodesic.
    g[j] = s.transport(y.xi[j], s.log(y.xi[j], xi.xi[j]), g[j]);
    return to_coords(g, fr);
  };
  for (int j = 0; j < n; ++j)
    for (int b = 0; b < 2; ++b) {
      const Vec3& dir = b == 0 ? fr[j].e1 : fr[j].e2;
      // Richardson on the central difference: fourth order, so the spectrum does not depend on the frame
      Eigen::VectorXd c1 = (moved_grad(j, dir, h) - moved_grad(j, dir, -h)) / (2 * h);
      Eigen::VectorXd c2 = (moved_grad(j, dir, h / 2) - moved_grad(j, dir, -h / 2)) / h;
      H.col(2 * j + b) = (4 * c2 - c1) / 3;
    }
  return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd hessian_psi(const ProblemData& d, const Configuration& xi, const std::vector<double>& angles) {
  return hessian(d, Functional::psi(d), xi, frames(*d.surface, xi, angles));
}

namespace {

// Extremum of fn over the closed ball (or sphere) of radius R in product normal coordinates.
class BallOptimizer {
 public:
  BallOptimizer(const ProblemData& d, const Configuration& center, std::uint64_t seed, int starts)
      : d_(d), c_(center), fr_(frames(*d.surface, center)), seed_(seed), starts_(starts) {}

  template <class Fn>
  double run(Fn&& fn, double R, bool sphere_only, bool maximize) {
    const int dim = 2 * c_.size();
    const double sgn = maximize ? 1.0 : -1.0;
    auto val = [&](const Eigen::VectorXd& v) { return sgn * fn(step(*d_.surface, c_, fr_, v)); };
    auto project = [&](Eigen::VectorXd v) {
      double nv = v.norm();
      if (sphere_only || nv > R) v *= R / std::max(nv, 1e-300);
      return v;
    };
    std::mt19937_64 rng(seed_);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    auto random_dir = [&] {
      Eigen::VectorXd v(dim);
      for (int k = 0; k < dim; ++k) v[k] = gauss(rng);
      return Eigen::VectorXd(v / v.norm());
    };

    std::vector<Eigen::VectorXd> cands;
    if (!sphere_only) cands.push_back(Eigen::VectorXd::Zero(dim));
    while (static_cast<int>(cands.size()) < starts_) {
      double rad = sphere_only ? R : R * std::pow(unif(rng), 1.0 / dim);
      cands.push_back(random_dir() * rad);
    }
    // Boundary grid: axis and diagonal directions.
    std::vector<Eigen::VectorXd> grid;
    for (int a = 0; a < dim; ++a)
      for (double sa : {-1.0, 1.0}) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
        v[a] = sa * R;
        grid.push_back(v);
        for (int b = a + 1; b < dim; ++b)
          for (double sb : {-1.0, 1.0}) {
            Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
            w[a] = sa;
            w[b] = sb;
            grid.push_back(w * (R / std::sqrt(2.0)));
          }
      }
    double best = -std::numeric_limits<double>::infinity();
    std::pair<double, Eigen::VectorXd> best_grid{-std::numeric_limits<double>::infinity(), Eigen::VectorXd()};
    for (const auto& v : grid) {
      double f = val(v);
      best = std::max(best, f);
      if (f > best_grid.first) best_grid = {f, v};
    }
    cands.push_back(best_grid.second);
    for (auto v : cands) best = std::max(best, climb(val, project, v, R));
    return sgn * best;
  }

 private:
  const ProblemData& d_;
  Configuration c_;
  std::vector<TangentFrame> fr_;
  std::uint64_t seed_;
  int starts_;

  template <class V, class P>
  double climb(V& val, P& project, Eigen::VectorXd v, double R) {
    const int dim = static_cast<int>(v.size());
    v = project(v);
    double f = val(v);
    double t = 0.25 * R;
    for (int it = 0; it < 200 && t > 1e-12 * R; ++it) {
      Eigen::VectorXd g(dim);
      const double h = 1e-7 * std::max(R, 1e-3);
      for (int k = 0; k < dim; ++k) {
        Eigen::VectorXd vp = v, vm = v;
        vp[k] += h;
        vm[k] -= h;
        g[k] = (val(vp) - val(vm)) / (2 * h);
      }
      double gn = g.norm();
      if (gn < 1e-13) break;
      bool moved = false;
      while (t > 1e-12 * R) {
        Eigen::VectorXd w = project(v + g * (t / gn));
        double fw = val(w);
        if (fw > f) {
          moved = (w - v).norm() > 1e-14 * R;
          v = w;
          f = fw;
          t *= 2.0;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    return f;
  }
};

}  // namespace

ClassCertificate class_membership(const ProblemData& d, const Configuration& xibar, double r, double alpha_lo,
                                  double alpha_hi, char sign, std::uint64_t seed, int starts) {
  if (sign != '+' && sign != '-') fail(ErrorCode::InvalidArgument, "class sign must be + or -");
  if (!(r > 0) || alpha_lo > alpha_hi) fail(ErrorCode::InvalidArgument, "need r > 0 and a non-empty order box");
  const SurfaceModel& s = *d.surface;
  const int n = xibar.size();
  for (int j = 0; j < n; ++j) {
    for (const auto& p : d.sing.points)
      if (s.distance(xibar.xi[j], p) <= 2 * r) fail(ErrorCode::BallNotInDomain, "B_2r meets a singular point");
    for (int k = 0; k < j; ++k)
      if (s.distance(xibar.xi[j], xibar.xi[k]) <= 2 * std::sqrt(2.0) * r)
        fail(ErrorCode::BallNotInDomain, "B_2r meets the collision set");
  }

  ClassCertificate c;
  c.sign = sign;
  c.r = r;

  // Surface balls B_r(xibar_j) sampled in polar coordinates for the pointwise conditions.
  c.positivity_min = std::numeric_limits<double>::infinity();
  double lap_min = std::numeric_limits<double>::infinity(), lap_max = -lap_min;
  for (const auto& center : xibar.xi) {
    TangentFrame fr = s.frame(center);
    for (int a = 0; a <= 24; ++a) {
      double rr = r * a / 24.0;
      int nt = a == 0 ? 1 : 64;
      for (int b = 0; b < nt; ++b) {
        double th = 2 * kPi * b / nt;
        SurfacePoint x = s.exp(center, (fr.e1 * std::cos(th) + fr.e2 * std::sin(th)) * rr);
        Jet k = d.K->eval(x);
        c.positivity_min = std::min(c.positivity_min, k.v);
        if (k.v > 0) {
          double l = log_jet(k).lap;
          lap_min = std::min(lap_min, l);
          lap_max = std::max(lap_max, l);
        }
      }
    }
  }
  c.positivity_ok = c.positivity_min > 0;
  const double inv_area = 1.0 / s.area();
  if (sign == '+') {
    c.laplacian_extreme = lap_min;
    c.laplacian_margin = lap_min - inv_area;
  } else {
    c.laplacian_extreme = lap_max;
    c.laplacian_margin = -inv_area - lap_max;
  }
  c.laplacian_ok = c.positivity_ok && c.laplacian_margin >= 0;

  if (!c.positivity_ok) {
    c.gap_status = "not_evaluated";
    c.verdict = "not_member";
    return c;
  }

  auto source_sums = [&](const Configuration& x) {
    std::vector<double> g(d.m(), 0.0);
    for (int i = 0; i < d.m(); ++i)
      for (const auto& p : x.xi) g[i] += s.green(p, d.sing.points[i]);
    return g;
  };
  Functional base = Functional::d_s(std::vector<double>(d.m(), 0.0));
  // D_s is affine in s, so its extremum over the box sits at a vertex; per coordinate the vertex is explicit.
  auto d_max = [&](const Configuration& x) {
    double v = evaluate(d, base, x);
    for (double g : source_sums(x)) v += std::max(-alpha_lo * g, -alpha_hi * g);
    return v;
  };
  auto d_min = [&](const Configuration& x) {
    double v = evaluate(d, base, x);
    for (double g : source_sums(x)) v += std::min(-alpha_lo * g, -alpha_hi * g);
    return v;
  };
  auto log_sum = [&](const Configuration& x) {
    double v = 0;
    for (const auto& p : x.xi) v += std::log(d.K->value(p));
    return v / (4 * kPi);
  };

  BallOptimizer opt(d, xibar, seed, starts);
  if (sign == '+') {
    c.M = opt.run(d_max, 0.5 * r, false, true);
    c.m = opt.run(d_min, r, true, false);
    c.log_lhs = opt.run(log_sum, 0.5 * r, false, true);
    c.log_rhs = opt.run(log_sum, r, true, false) + c.m - c.M;
  } else {
    c.M = opt.run(d_max, r, true, true);
    c.m = opt.run(d_min, 0.5 * r, false, false);
    c.log_lhs = opt.run(log_sum, r, true, true);
    c.log_rhs = opt.run(log_sum, 0.5 * r, false, false) + c.m - c.M;
  }
  c.gap_margin = c.log_rhs - c.log_lhs;
  c.gap_status = c.gap_margin > 1e-4 ? "pass" : (c.gap_margin < -1e-4 ? "fail" : "inconclusive");

  bool lap_close = std::abs(c.laplacian_margin) < 1e-4;
  if (c.gap_status == "fail" || !c.laplacian_ok)
    c.verdict = "not_member";
  else if (c.gap_status == "inconclusive" || lap_close)
    c.verdict = "inconclusive";
  else
    c.verdict = "member";
  return c;
}

}  // namespace sll
