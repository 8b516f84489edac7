#include "sll/critical.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

namespace sll {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double coords_norm(const std::vector<Vec3>& g) {
  double s = 0;
  for (const auto& v : g) s += dot(v, v);
  return std::sqrt(s);
}

bool in_domain(const ProblemData& d, const Configuration& xi, double M) {
  DomainFlags f = domain_flags(d, xi);
  return f.in_M_plus && phi(d, xi) > -M;
}

// Trust-region subproblem min g.p + p.Hp/2, |p| <= radius, via the eigen-decomposition of H.
Eigen::VectorXd trust_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& H, double radius) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXd& Q = es.eigenvectors();
  Eigen::VectorXd qg = Q.transpose() * g;
  auto p_of = [&](double shift) {
    Eigen::VectorXd c(lam.size());
    for (int i = 0; i < lam.size(); ++i) c[i] = -qg[i] / (lam[i] + shift);
    return Eigen::VectorXd(Q * c);
  };
  if (lam[0] > 0) {
    Eigen::VectorXd p = p_of(0.0);
    if (p.norm() <= radius) return p;
  }
  double lo = std::max(0.0, -lam[0]) + 1e-14 * (1 + std::abs(lam[0]));
  Eigen::VectorXd plo = p_of(lo);
  if (plo.norm() < radius) {
    // Hard case: move along the lowest eigenvector to the boundary.
    double a = plo.norm();
    return plo + Q.col(0) * std::sqrt(std::max(0.0, radius * radius - a * a));
  }
  double hi = g.norm() / radius + lam.cwiseAbs().maxCoeff() + 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (p_of(mid).norm() > radius) lo = mid;
    else hi = mid;
    if (hi - lo < 1e-15 * (1 + hi)) break;
  }
  return p_of(hi);
}

struct Outcome {
  Configuration xi;
  bool converged = false;
  bool escaped = false;
};

Outcome run_trust_region(const ProblemData& d, Configuration xi, const SearchConfig& cfg, SearchMode mode) {
  const SurfaceModel& s = *d.surface;
  const double cap = std::min(cfg.trust_max, 0.45 * s.injectivity_radius());
  double radius = std::min(cfg.trust_radius, cap);
  const Functional F = Functional::psi(d);
  Outcome out;
  if (!in_domain(d, xi, cfg.M)) {
    out.escaped = true;
    out.xi = xi;
    return out;
  }
  int domain_rejects = 0;
  double mu = 1e-3;
  for (int it = 0; it < cfg.max_iters; ++it) {
    auto fr = frames(s, xi);
    Eigen::VectorXd g = to_coords(gradient(d, F, xi), fr);
    double gn = g.norm();
    if (gn < cfg.grad_tol) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd H = hessian(d, F, xi, fr);
    double f0 = evaluate(d, F, xi);
    Eigen::VectorXd p;
    if (mode == SearchMode::Any) {
      Eigen::MatrixXd A = H.transpose() * H;
      A.diagonal().array() += mu;
      p = -A.ldlt().solve(H.transpose() * g);
      if (p.norm() > cap) p *= cap / p.norm();
    } else {
      double sgn = mode == SearchMode::Min ? 1.0 : -1.0;
      p = trust_step(sgn * g, sgn * H, radius);
    }
    Configuration trial = step(s, xi, fr, p);
    if (!in_domain(d, trial, cfg.M)) {
      ++domain_rejects;
      radius *= 0.25;
      mu *= 4;
      if (radius < 1e-14 || mu > 1e14) break;
      continue;
    }
    domain_rejects = 0;
    double gn_new = to_coords(gradient(d, F, trial), frames(s, trial)).norm();
    bool accept;
    if (mode == SearchMode::Any) {
      accept = gn_new < gn;
      mu = accept ? std::max(mu / 3, 1e-12) : mu * 4;
      if (mu > 1e14) break;
    } else {
      double sgn = mode == SearchMode::Min ? 1.0 : -1.0;
      double pred = -sgn * (g.dot(p) + 0.5 * p.dot(H * p));
      double ared = sgn * (f0 - evaluate(d, F, trial));
      double rho = pred > 0 ? ared / pred : -1.0;
      // Near convergence the model decrease drops below round-off; fall back on the gradient.
      bool tiny = std::abs(pred) < 1e-12 * (1 + std::abs(f0));
      accept = rho > 0.1 || (tiny && gn_new < gn);
      if (rho > 0.75 && p.norm() > 0.8 * radius) radius = std::min(2 * radius, cap);
      else if (rho < 0.25 && !(tiny && accept)) radius *= 0.25;
      if (radius < 1e-14) break;
    }
    if (accept) xi = trial;
  }
  out.xi = xi;
  out.escaped = !out.converged && domain_rejects > 0;
  return out;
}

SurfacePoint random_point(const SurfaceModel& s, std::mt19937_64& rng) {
  if (s.kind() == SurfaceKind::Sphere) {
    std::normal_distribution<double> n;
    Vec3 v{n(rng), n(rng), n(rng)};
    return s.point(v);
  }
  std::uniform_real_distribution<double> u;
  return s.point({u(rng) * s.period_a(), u(rng) * s.period_b(), 0});
}

// Moves start points off the sources and apart from each other.
Configuration separate(const ProblemData& d, Configuration xi) {
  const SurfaceModel& s = *d.surface;
  for (int j = 0; j < xi.size(); ++j) {
    for (int tries = 0; tries < 16; ++tries) {
      bool close = false;
      for (const auto& p : d.sing.points) close = close || s.distance(xi.xi[j], p) < 0.05;
      for (int k = 0; k < j; ++k) close = close || s.distance(xi.xi[j], xi.xi[k]) < 0.05;
      if (!close) break;
      xi.xi[j] = s.exp(xi.xi[j], s.frame(xi.xi[j]).e1 * 0.1);
    }
  }
  return xi;
}

std::vector<std::vector<int>> combinations(int n, int k, size_t limit) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(k);
  std::iota(c.begin(), c.end(), 0);
  while (out.size() < limit) {
    out.push_back(c);
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

bool lex_less(const SurfacePoint& a, const SurfacePoint& b) {
  if (a.p.x != b.p.x) return a.p.x < b.p.x;
  if (a.p.y != b.p.y) return a.p.y < b.p.y;
  return a.p.z < b.p.z;
}

Configuration canonical(Configuration xi) {
  std::sort(xi.xi.begin(), xi.xi.end(), lex_less);
  return xi;
}

std::array<int, 2> default_sign_grid(const SurfaceModel& s) {
  return s.kind() == SurfaceKind::Sphere ? std::array<int, 2>{48, 96} : std::array<int, 2>{64, 64};
}

}  // namespace

bool same_up_to_permutation(const SurfaceModel& s, const Configuration& a, const Configuration& b, double tol) {
  if (a.size() != b.size()) return false;
  const int n = a.size();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (n <= 8) {
    do {
      bool ok = true;
      for (int j = 0; j < n && ok; ++j) ok = s.distance(a.xi[j], b.xi[perm[j]]) < tol;
      if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
  }
  std::vector<bool> used(n, false);
  for (int j = 0; j < n; ++j) {
    bool hit = false;
    for (int k = 0; k < n && !hit; ++k)
      if (!used[k] && s.distance(a.xi[j], b.xi[k]) < tol) used[k] = hit = true;
    if (!hit) return false;
  }
  return true;
}

CriticalPointReport classify(const ProblemData& d, const Configuration& xi, double grad_tol, double tau) {
  const SurfaceModel& s = *d.surface;
  CriticalPointReport r;
  r.config = xi;
  r.grad_norm = coords_norm(grad_psi(d, xi));
  if (!(r.grad_norm < grad_tol))
    fail(ErrorCode::NotCritical, "gradient norm " + std::to_string(r.grad_norm) + " exceeds tolerance");
  r.value = psi(d, xi);
  auto fr = frames(s, xi);
  Eigen::MatrixXd H = hessian(d, Functional::psi(d), xi, fr);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const int n = static_cast<int>(lam.size());
  r.hessian_spectrum.assign(lam.data(), lam.data() + n);
  int neg = 0, pos = 0;
  for (double l : r.hessian_spectrum) {
    if (l < -tau) ++neg;
    else if (l > tau) ++pos;
  }
  r.index = neg;
  const int zero = n - neg - pos;
  if (zero == 0) {
    r.stable = true;
    if (neg == n) {
      r.classification = "max";
      r.reason = "nondegenerate local maximum";
    } else if (pos == n) {
      r.classification = "min";
      r.reason = "nondegenerate local minimum";
    } else {
      r.classification = "saddle";
      r.reason = "nondegenerate saddle of index " + std::to_string(neg);
    }
  } else if (pos == 0 || neg == 0) {
    // Semidefinite with a kernel: probe Psi along the kernel directions.
    const bool want_max = pos == 0;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (std::abs(lam[i]) > tau) continue;
      for (double t : {1e-3, 1e-2, 3e-2})
        for (double sg : {-1.0, 1.0}) {
          Eigen::VectorXd v = es.eigenvectors().col(i) * (sg * t);
          double dv = psi(d, step(s, xi, fr, v)) - r.value;
          if (want_max ? dv > 1e-13 : dv < -1e-13) ok = false;
        }
    }
    if (ok) {
      r.classification = want_max ? "max" : "min";
      r.stable = true;
      r.reason = std::string("degenerate local ") + (want_max ? "maximum" : "minimum") + " (kernel probe)";
    } else {
      r.classification = "degenerate";
      r.stable = false;
      r.reason = "undetermined by implemented criteria";
    }
  } else {
    r.classification = "degenerate";
    r.stable = false;
    r.reason = "undetermined by implemented criteria";
  }
  r.a_value = a_fun(d, xi);
  r.a_sign = std::abs(r.a_value) <= 1e-10 ? "inconclusive" : (r.a_value > 0 ? "+" : "-");
  return r;
}

Configuration newton_polish(const ProblemData& d, const Configuration& xi) {
  auto fr = frames(*d.surface, xi);
  const Functional F = Functional::psi(d);
  Eigen::VectorXd g = to_coords(gradient(d, F, xi), fr);
  Eigen::MatrixXd H = hessian(d, F, xi, fr);
  Eigen::VectorXd p = -H.fullPivLu().solve(g);
  return step(*d.surface, xi, fr, p);
}

std::vector<CriticalPointReport> find_critical_points(const ProblemData& d, const SearchConfig& cfg, SearchMode mode,
                                                      const std::vector<Configuration>& extra_starts) {
  if (!(cfg.grad_tol > 0) || !(cfg.M > 0)) fail(ErrorCode::InvalidArgument, "need grad_tol > 0 and M > 0");
  const SurfaceModel& s = *d.surface;
  auto [n1, n2] = default_sign_grid(s);
  SignAnalysis sa = analyze_sign(s, *d.K, n1, n2);
  if (sa.positive.empty()) fail(ErrorCode::InvalidArgument, "K has no sampled positive region");

  std::vector<Configuration> starts = extra_starts;
  const int npos = static_cast<int>(sa.positive.size());
  if (npos >= d.N) {
    for (const auto& c : combinations(npos, d.N, 64)) {
      Configuration xi;
      for (int k : c) xi.xi.push_back(sa.positive[k].peak);
      starts.push_back(separate(d, xi));
    }
  } else {
    Configuration xi;
    const SurfacePoint& pk = sa.positive[0].peak;
    TangentFrame fr = s.frame(pk);
    for (int j = 0; j < d.N; ++j) {
      double th = 2 * kPi * j / d.N;
      xi.xi.push_back(d.N == 1 ? pk : s.exp(pk, (fr.e1 * std::cos(th) + fr.e2 * std::sin(th)) * 0.1));
    }
    starts.push_back(separate(d, xi));
  }
  std::mt19937_64 rng(cfg.seed);
  for (int k = 0; k < cfg.multistarts; ++k) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Configuration xi;
      for (int j = 0; j < d.N; ++j) {
        SurfacePoint x;
        for (int t = 0; t < 1000; ++t) {
          x = random_point(s, rng);
          if (d.K->value(x) > 0) break;
        }
        xi.xi.push_back(x);
      }
      if (in_domain(d, xi, cfg.M) && domain_flags(d, xi).min_pair > 0.05 && domain_flags(d, xi).min_source > 0.05) {
        starts.push_back(xi);
        break;
      }
    }
  }

  std::vector<CriticalPointReport> found;
  int escaped = 0;
  for (const auto& st : starts) {
    Outcome o = run_trust_region(d, st, cfg, mode);
    if (o.escaped) ++escaped;
    if (!o.converged) continue;
    Configuration c = canonical(o.xi);
    bool dup = false;
    for (const auto& f : found) dup = dup || same_up_to_permutation(s, f.config, c, 1e-6);
    if (dup) continue;
    CriticalPointReport r = classify(d, c, cfg.grad_tol, cfg.tau);
    if (mode == SearchMode::Max && r.classification != "max") continue;
    if (mode == SearchMode::Min && r.classification != "min") continue;
    found.push_back(std::move(r));
  }
  if (found.empty() && !starts.empty() && escaped == static_cast<int>(starts.size()))
    fail(ErrorCode::DomainEscape, "every start left the domain {Phi > -M}");
  std::sort(found.begin(), found.end(), [&](const CriticalPointReport& a, const CriticalPointReport& b) {
    if (a.value != b.value) return mode == SearchMode::Min ? a.value < b.value : a.value > b.value;
    return std::lexicographical_compare(a.config.xi.begin(), a.config.xi.end(), b.config.xi.begin(),
                                        b.config.xi.end(), lex_less);
  });
  return found;
}

std::optional<std::vector<int>> feasible_split(int N, const std::vector<double>& alpha) {
  std::vector<int> out(alpha.size(), 0);
  int left = N;
  for (size_t i = 0; i < alpha.size(); ++i) {
    int cap = std::max(0, 1 + bracket_minus(alpha[i]));
    out[i] = std::min(left, cap);
    left -= out[i];
  }
  if (left > 0) return std::nullopt;
  return out;
}

const char* case_name(RetractionCase c) {
  switch (c) {
    case RetractionCase::RayGenus0: return "ray_genus0";
    case RetractionCase::TorusCurve: return "torus_curve";
    case RetractionCase::ContractibleCircles: return "contractible_circles";
  }
  return "?";
}

RetractionCase parse_case(const std::string& s) {
  if (s == "ray_genus0") return RetractionCase::RayGenus0;
  if (s == "torus_curve") return RetractionCase::TorusCurve;
  if (s == "contractible_circles") return RetractionCase::ContractibleCircles;
  fail(ErrorCode::InvalidArgument, "unknown retraction case '" + s + "'");
}

Configuration MinMaxSetup::at(const std::vector<double>& t) const {
  Configuration xi;
  for (size_t j = 0; j < curves.size(); ++j) xi.xi.push_back(curves[j].at(t[j]));
  return xi;
}

bool MinMaxSetup::in_open_set(const SurfaceModel& s, const Configuration& xi) const {
  for (int j = 0; j < xi.size(); ++j)
    for (int k = 0; k < j; ++k)
      if (s.distance(xi.xi[j], xi.xi[k]) <= 1.0 / M) return false;
  return true;
}

bool MinMaxSetup::in_D(const ProblemData& d, const Configuration& xi) const { return in_domain(d, xi, M); }

namespace {

double wrap01(double t) {
  t -= std::floor(t);
  return t >= 1.0 ? 0.0 : t;
}

MinMaxSetup contractible_circles(const ProblemData& d, const SearchConfig& cfg) {
  const SurfaceModel& s = *d.surface;
  std::vector<double> inner(d.sing.alpha.begin(), d.sing.alpha.begin() + d.ell);
  auto split = feasible_split(d.N, inner);
  if (!split) {
    double cap = 0;
    for (double a : inner) cap += std::max(0, 1 + bracket_minus(a));
    fail(ErrorCode::NoFeasibleSplit, "N = " + std::to_string(d.N) + " exceeds the admissible total " +
                                         std::to_string(static_cast<int>(cap)) + " over sources inside {K > 0}");
  }
  auto [n1, n2] = default_sign_grid(s);
  SignAnalysis sa = analyze_sign(s, *d.K, n1, n2);

  MinMaxSetup st;
  st.kind = RetractionCase::ContractibleCircles;
  st.M = cfg.M;
  st.curve_samples = cfg.curve_samples;
  st.split = *split;
  std::vector<int> active;
  std::vector<double> D(d.ell, 0.0);
  st.cone_angle.assign(d.ell, 0.0);
  for (int i = 0; i < d.ell; ++i) {
    const SurfacePoint& p = d.sing.points[i];
    D[i] = std::min(sa.distance_to_zero_set(s, p), 0.5 * s.injectivity_radius());
    TangentFrame fr = s.frame(p);
    Vec3 w;
    for (int k = 0; k < d.m(); ++k) {
      if (k == i) continue;
      D[i] = std::min(D[i], s.distance(p, d.sing.points[k]));
      Vec3 l = s.log(p, d.sing.points[k]);
      w -= l / std::max(dot(l, l), 1e-300);
    }
    st.cone_angle[i] = norm(w) > 1e-12 ? std::atan2(dot(w, fr.e2), dot(w, fr.e1)) : 0.0;
    if (st.split[i] > 0) active.push_back(i);
  }

  // Sampled cone {exp_p(rho e^{i(theta + t)}) : |t| <= half}, truncated where K stops being positive.
  auto cone = [&](int i, double half) {
    std::vector<SurfacePoint> pts;
    const SurfacePoint& p = d.sing.points[i];
    TangentFrame fr = s.frame(p);
    for (int a = 0; a <= 6; ++a) {
      double th = st.cone_angle[i] - half + 2 * half * a / 6.0;
      Vec3 dir = fr.e1 * std::cos(th) + fr.e2 * std::sin(th);
      for (double rho = 0.02; rho < 0.95 * s.injectivity_radius(); rho += 0.02) {
        SurfacePoint x = s.exp(p, dir * rho);
        if (d.K->value(x) <= 0) break;
        pts.push_back(x);
      }
    }
    return pts;
  };

  std::vector<double> delta(d.ell, 0.0);
  bool ok = false;
  for (double f = 0.2; f > 0.2 / 1024 && !ok; f *= 0.5) {
    for (int i : active) delta[i] = f * D[i];
    ok = true;
    for (size_t a = 0; a < active.size() && ok; ++a)
      for (size_t b = a + 1; b < active.size() && ok; ++b) {
        auto ca = cone(active[a], delta[active[a]]), cb = cone(active[b], delta[active[b]]);
        for (const auto& x : ca)
          for (const auto& y : cb)
            if (s.distance(x, y) < 0.01) ok = false;
      }
    if (ok) st.notes.push_back("circle factor " + std::to_string(f));
  }
  if (!ok) fail(ErrorCode::SetupInfeasible, "no radius keeps the source cones disjoint");

  int j = 0;
  for (int i : active) {
    const SurfacePoint p = d.sing.points[i];
    const TangentFrame fr = s.frame(p);
    const double r = delta[i];
    SurfaceRef sp = d.surface;
    for (int q = 0; q < st.split[i]; ++q) {
      ++j;
      Curve c;
      c.source = i;
      c.radius = r;
      c.at = [sp, p, fr, r](double t) {
        double th = 2 * kPi * t;
        return sp->exp(p, (fr.e1 * std::cos(th) + fr.e2 * std::sin(th)) * r);
      };
      c.retract = [sp, p, fr](const SurfacePoint& x) {
        Vec3 l = sp->log(p, x);
        return wrap01(std::atan2(dot(l, fr.e2), dot(l, fr.e1)) / (2 * kPi));
      };
      st.curves.push_back(c);
      st.base_params.push_back(wrap01((st.cone_angle[i] + j * r / d.N) / (2 * kPi)));
    }
  }
  st.base = st.at(st.base_params);
  if (!st.in_open_set(s, st.base))
    fail(ErrorCode::SetupInfeasible, "base configuration is closer than 1/M; increase M");
  return st;
}

MinMaxSetup ray_genus0(const ProblemData& d, const SearchConfig& cfg) {
  const SurfaceModel& s = *d.surface;
  if (s.kind() != SurfaceKind::Sphere) fail(ErrorCode::TopologyMismatch, "ray retraction needs the sphere");
  auto [n1, n2] = default_sign_grid(s);
  SignAnalysis sa = analyze_sign(s, *d.K, n1, n2);
  bool annulus = false;
  for (const auto& c : sa.positive) annulus = annulus || !c.contractible;
  if (!annulus || sa.negative.empty())
    fail(ErrorCode::TopologyMismatch, "{K > 0} has no non-contractible component");
  const Component* hole = &sa.negative[0];
  for (const auto& c : sa.negative)
    if (c.peak_value < hole->peak_value) hole = &c;
  const Vec3 h = hole->peak.p;
  const TangentFrame fr = s.frame(hole->peak);
  SurfaceRef sp = d.surface;
  // Stereographic chart with the hole centre at the origin.
  auto inv = [sp, h, fr](double a, double b) {
    double r2 = a * a + b * b;
    return sp->point((fr.e1 * (2 * a) + fr.e2 * (2 * b) + h * (1 - r2)) / (1 + r2));
  };
  double bestR = 0, best = -kInf;
  for (int k = 1; k < 400; ++k) {
    double R = std::tan(0.5 * kPi * k / 400.0);
    double mn = kInf;
    for (int q = 0; q < 256 && mn > best; ++q) {
      double th = 2 * kPi * q / 256;
      SurfacePoint x = inv(R * std::cos(th), R * std::sin(th));
      mn = std::min(mn, d.K->value(x));
      for (const auto& p : d.sing.points)
        if (s.distance(x, p) < 0.05) mn = -kInf;
    }
    if (mn > best) {
      best = mn;
      bestR = R;
    }
  }
  if (!(best > 0)) fail(ErrorCode::TopologyMismatch, "no chart circle lies inside {K > 0}");
  MinMaxSetup st;
  st.kind = RetractionCase::RayGenus0;
  st.M = cfg.M;
  st.curve_samples = cfg.curve_samples;
  const double R = bestR;
  Curve c;
  c.radius = R;
  c.at = [inv, R](double t) { return inv(R * std::cos(2 * kPi * t), R * std::sin(2 * kPi * t)); };
  c.retract = [h, fr](const SurfacePoint& x) {
    double den = 1 + dot(x.p, h);
    return wrap01(std::atan2(dot(x.p, fr.e2) / den, dot(x.p, fr.e1) / den) / (2 * kPi));
  };
  for (int j = 0; j < d.N; ++j) {
    st.curves.push_back(c);
    st.base_params.push_back(static_cast<double>(j) / d.N);
  }
  st.base = st.at(st.base_params);
  st.notes.push_back("chart radius " + std::to_string(R) + ", min K on curve " + std::to_string(best));
  return st;
}

MinMaxSetup torus_curve(const ProblemData& d, const SearchConfig& cfg) {
  const SurfaceModel& s = *d.surface;
  if (s.kind() != SurfaceKind::Torus) fail(ErrorCode::TopologyMismatch, "torus curve needs the flat torus");
  const double a = s.period_a(), b = s.period_b();
  double best = -kInf, pos = 0;
  bool horizontal = true;
  for (int dir = 0; dir < 2; ++dir)
    for (int k = 0; k < 256; ++k) {
      double c0 = (dir == 0 ? b : a) * k / 256.0;
      double mn = kInf;
      for (int q = 0; q < 256 && mn > best; ++q) {
        double t = (dir == 0 ? a : b) * q / 256.0;
        SurfacePoint x = dir == 0 ? s.point({t, c0, 0}) : s.point({c0, t, 0});
        mn = std::min(mn, d.K->value(x));
        for (const auto& p : d.sing.points)
          if (s.distance(x, p) < 0.02) mn = -kInf;
      }
      if (mn > best) {
        best = mn;
        pos = c0;
        horizontal = dir == 0;
      }
    }
  if (!(best > 0)) fail(ErrorCode::TopologyMismatch, "no closed coordinate loop lies inside {K > 0}");
  MinMaxSetup st;
  st.kind = RetractionCase::TorusCurve;
  st.M = cfg.M;
  st.curve_samples = cfg.curve_samples;
  SurfaceRef sp = d.surface;
  Curve c;
  if (horizontal) {
    c.at = [sp, a, pos](double t) { return sp->point({t * a, pos, 0}); };
    c.retract = [a](const SurfacePoint& x) { return wrap01(x.p.x / a); };
  } else {
    c.at = [sp, b, pos](double t) { return sp->point({pos, t * b, 0}); };
    c.retract = [b](const SurfacePoint& x) { return wrap01(x.p.y / b); };
  }
  for (int j = 0; j < d.N; ++j) {
    st.curves.push_back(c);
    st.base_params.push_back(static_cast<double>(j) / d.N);
  }
  st.base = st.at(st.base_params);
  st.notes.push_back(std::string(horizontal ? "loop v = " : "loop u = ") + std::to_string(pos) +
                     ", min K on curve " + std::to_string(best));
  return st;
}

}  // namespace

MinMaxSetup build_retraction(const ProblemData& d, RetractionCase c, const SearchConfig& cfg) {
  if (!(cfg.M > 0) || cfg.curve_samples < 4) fail(ErrorCode::InvalidArgument, "need M > 0 and curve_samples >= 4");
  switch (c) {
    case RetractionCase::ContractibleCircles: return contractible_circles(d, cfg);
    case RetractionCase::RayGenus0: return ray_genus0(d, cfg);
    case RetractionCase::TorusCurve: return torus_curve(d, cfg);
  }
  fail(ErrorCode::InvalidArgument, "unknown retraction case");
}

MinMaxResult approx_minmax(const ProblemData& d, const MinMaxSetup& st, const SearchConfig& cfg) {
  const SurfaceModel& s = *d.surface;
  const int N = static_cast<int>(st.curves.size());
  const int S = st.curve_samples;
  if (N != d.N) fail(ErrorCode::SetupInfeasible, "setup does not match N");
  double total = std::pow(static_cast<double>(S), N);
  if (total > 2e6) fail(ErrorCode::SetupInfeasible, "curve_samples^N exceeds the sample budget");
  const long nt = static_cast<long>(total);

  auto params_of = [&](long idx) {
    std::vector<double> t(N);
    for (int j = 0; j < N; ++j) {
      t[j] = static_cast<double>(idx % S) / S;
      idx /= S;
    }
    return t;
  };
  auto index_of = [&](const std::vector<int>& k) {
    long idx = 0;
    for (int j = N - 1; j >= 0; --j) idx = idx * S + ((k[j] % S) + S) % S;
    return idx;
  };
  std::vector<char> valid(nt);
  for (long i = 0; i < nt; ++i) valid[i] = st.in_open_set(s, st.at(params_of(i)));

  // Seed: a valid corner of the grid cell holding xi^0.
  long seed = -1;
  double seed_dist = kInf;
  for (int mask = 0; mask < (1 << N); ++mask) {
    std::vector<int> k(N);
    double dist = 0;
    for (int j = 0; j < N; ++j) {
      k[j] = static_cast<int>(std::floor(st.base_params[j] * S)) + ((mask >> j) & 1);
      dist = std::max(dist, std::abs(static_cast<double>(k[j]) / S - st.base_params[j]));
    }
    long idx = index_of(k);
    if (valid[idx] && dist < seed_dist) {
      seed = idx;
      seed_dist = dist;
    }
  }
  if (seed < 0) fail(ErrorCode::SetupInfeasible, "xi^0 has no admissible neighbour on the sample grid");

  std::vector<char> inW(nt, 0);
  std::deque<long> queue{seed};
  inW[seed] = 1;
  struct Crossing {
    long from;
    int dim;
    int dir;
  };
  std::vector<Crossing> crossings;
  std::vector<long> interior;
  while (!queue.empty()) {
    long cur = queue.front();
    queue.pop_front();
    interior.push_back(cur);
    std::vector<int> k(N);
    long tmp = cur;
    for (int j = 0; j < N; ++j) {
      k[j] = static_cast<int>(tmp % S);
      tmp /= S;
    }
    for (int j = 0; j < N; ++j)
      for (int dir : {-1, 1}) {
        auto kn = k;
        kn[j] += dir;
        long nb = index_of(kn);
        if (!valid[nb]) crossings.push_back({cur, j, dir});
        else if (!inW[nb]) {
          inW[nb] = 1;
          queue.push_back(nb);
        }
      }
  }
  std::sort(interior.begin(), interior.end());

  // B_0 points: bisection on min pairwise distance = 1/M along grid edges leaving W.
  std::vector<Configuration> boundary;
  for (const auto& c : crossings) {
    std::vector<double> t0 = params_of(c.from);
    double lo = 0, hi = 1;
    auto at_s = [&](double sv) {
      auto t = t0;
      t[c.dim] = wrap01(t[c.dim] + c.dir * sv / S);
      return st.at(t);
    };
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      if (st.in_open_set(s, at_s(mid))) lo = mid;
      else hi = mid;
    }
    boundary.push_back(at_s(0.5 * (lo + hi)));
  }

  MinMaxResult res;
  std::vector<Configuration> samples;
  for (long i : interior) samples.push_back(st.at(params_of(i)));
  samples.push_back(st.base);
  const size_t n_free = samples.size();
  for (auto& b : boundary) samples.push_back(b);
  res.samples = static_cast<long>(samples.size());
  res.boundary_samples = static_cast<long>(boundary.size());

  std::vector<double> val(samples.size());
  res.b_in_D = true;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!domain_flags(d, samples[i]).in_M_plus)
      fail(ErrorCode::SetupInfeasible, "a sample of B leaves {K > 0} or hits a source");
    val[i] = psi(d, samples[i]);
    res.b_in_D = res.b_in_D && phi(d, samples[i]) > -st.M;
  }
  res.min_identity = *std::min_element(val.begin(), val.end());
  res.min_boundary = kInf;
  for (size_t i = n_free; i < samples.size(); ++i) res.min_boundary = std::min(res.min_boundary, val[i]);

  // Discrete deformation: Armijo ascent of each free sample inside D.
  const Functional F = Functional::psi(d);
  std::vector<double> tstep(n_free, -1.0);
  std::vector<char> done(n_free, 0);
  res.psi_star_history.push_back(res.min_identity);
  for (int sweep = 0; sweep < cfg.minmax_steps; ++sweep) {
    for (size_t i = 0; i < n_free; ++i) {
      if (done[i]) continue;
      auto g = gradient(d, F, samples[i]);
      double gn = coords_norm(g);
      if (gn < cfg.grad_tol) {
        done[i] = 1;
        continue;
      }
      double gmax = 0;
      for (const auto& v : g) gmax = std::max(gmax, norm(v));
      double t = tstep[i] > 0 ? tstep[i] : 0.05 / gn;
      t = std::min(t, 0.2 * s.injectivity_radius() / gmax);
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        Configuration trial = samples[i];
        for (int j = 0; j < N; ++j) trial.xi[j] = s.exp(samples[i].xi[j], g[j] * t);
        if (st.in_D(d, trial)) {
          double v = psi(d, trial);
          if (v >= val[i] + 1e-4 * t * gn * gn) {
            samples[i] = trial;
            val[i] = v;
            moved = true;
            break;
          }
        }
        t *= 0.5;
      }
      if (!moved) done[i] = 1;
      tstep[i] = 1.5 * t;
    }
    res.psi_star_history.push_back(*std::min_element(val.begin(), val.end()));
  }

  size_t arg = std::min_element(val.begin(), val.end()) - val.begin();
  res.psi_star = val[arg];
  res.witness = samples[arg];
  res.boundary_gap = res.min_boundary - res.psi_star;

  res.intersection_distance = kInf;
  for (size_t i = 0; i < n_free; ++i) {
    double dist = 0;
    for (int j = 0; j < N; ++j) {
      double dt = std::abs(st.curves[j].retract(samples[i].xi[j]) - st.base_params[j]);
      dist = std::max(dist, std::min(dt, 1.0 - dt));
    }
    res.intersection_distance = std::min(res.intersection_distance, dist);
  }
  res.intersection_found = res.intersection_distance <= 1.0 / S;
  return res;
}

}  // namespace sll
