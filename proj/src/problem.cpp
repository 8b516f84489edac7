#include "sll/problem.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>

namespace sll {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kCoincide = 1e-13;

struct UnionFind {
  std::vector<long> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0L); }
  long find(long x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(long a, long b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Triangulated tensor grid; sphere adds two pole vertices (north = n1*n2, south = n1*n2+1).
struct Mesh {
  int n1, n2;
  bool sphere;
  long nv;

  long id(int i, int j) const { return long(i) * n2 + ((j % n2) + n2) % n2; }

  template <class F>
  void edges(F&& f) const {
    const int rows = sphere ? n1 - 1 : n1;
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) f(id(i, j), id(i, j + 1));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < n2; ++j) {
        int i2 = (i + 1) % n1;
        f(id(i, j), id(i2, j));
        f(id(i, j), id(i2, j + 1));
      }
    if (sphere)
      for (int j = 0; j < n2; ++j) {
        f(nv - 2, id(0, j));
        f(nv - 1, id(n1 - 1, j));
      }
  }

  template <class F>
  void triangles(F&& f) const {
    const int rows = sphere ? n1 - 1 : n1;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < n2; ++j) {
        int i2 = (i + 1) % n1;
        f(id(i, j), id(i, j + 1), id(i2, j + 1));
        f(id(i, j), id(i2, j + 1), id(i2, j));
      }
    if (sphere)
      for (int j = 0; j < n2; ++j) {
        f(nv - 2, id(0, j), id(0, j + 1));
        f(nv - 1, id(n1 - 1, j + 1), id(n1 - 1, j));
      }
  }
};

SurfacePoint lerp_point(const SurfaceModel& s, const SurfacePoint& a, const SurfacePoint& b, double t) {
  if (s.kind() == SurfaceKind::Sphere) return s.point(a.p * (1 - t) + b.p * t);
  return s.exp(a, s.log(a, b) * t);
}

}  // namespace

double ProblemData::alpha_sum() const { return std::accumulate(sing.alpha.begin(), sing.alpha.end(), 0.0); }
double ProblemData::chi_alpha() const { return surface->euler_characteristic() + alpha_sum(); }
double ProblemData::rho_geo() const { return 4 * kPi * chi_alpha(); }

double chi_alpha(const SurfaceModel& s, const SingularData& d) {
  return s.euler_characteristic() + std::accumulate(d.alpha.begin(), d.alpha.end(), 0.0);
}

ProblemData split_ell(const ProblemData& d) {
  const int m = d.m();
  std::vector<int> inside, outside;
  for (int i = 0; i < m; ++i) {
    double k = d.K->value(d.sing.points[i]);
    if (std::abs(k) < 1e-14) fail(ErrorCode::OnNodalLine, "source " + std::to_string(i) + " lies on {K = 0}");
    (k > 0 ? inside : outside).push_back(i);
  }
  ProblemData out = d;
  out.sing.points.clear();
  out.sing.alpha.clear();
  for (auto* v : {&inside, &outside})
    for (int i : *v) {
      out.sing.points.push_back(d.sing.points[i]);
      out.sing.alpha.push_back(d.sing.alpha[i]);
    }
  out.ell = static_cast<int>(inside.size());
  return out;
}

ProblemData make_problem(SurfaceRef s, FieldRef K, SingularData sing, int N) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "N must be at least 1");
  if (sing.points.size() != sing.alpha.size()) fail(ErrorCode::InvalidArgument, "one order per singular point");
  for (size_t i = 0; i < sing.alpha.size(); ++i) {
    double a = sing.alpha[i];
    if (!(a > -1.0) || a == 0.0 || !std::isfinite(a))
      fail(ErrorCode::InvalidArgument, "orders must lie in (-1, inf) minus {0}");
    for (size_t j = 0; j < i; ++j)
      if (s->distance(sing.points[i], sing.points[j]) < kCoincide)
        fail(ErrorCode::InvalidArgument, "singular points must be distinct");
  }
  ProblemData d{std::move(s), std::move(K), std::move(sing), N, 0};
  return split_ell(d);
}

std::vector<double> gamma_set(const std::vector<double>& alpha, double cap) {
  const size_t m = alpha.size();
  if (m > 24) fail(ErrorCode::InvalidArgument, "too many orders for subset enumeration");
  std::vector<double> out;
  for (unsigned long mask = 0; mask < (1UL << m); ++mask) {
    double base = 0;
    for (size_t i = 0; i < m; ++i)
      if (mask >> i & 1UL) base += 8 * kPi * (1 + alpha[i]);
    for (double v = base; v <= cap * (1 + 1e-15); v += 8 * kPi) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double v : out)
    if (uniq.empty() || std::abs(v - uniq.back()) > 1e-12 * std::max(1.0, std::abs(v))) uniq.push_back(v);
  return uniq;
}

bool in_gamma(double rho, const std::vector<double>& alpha, double tol) {
  for (double g : gamma_set(alpha, rho + 1.0))
    if (std::abs(g - rho) <= tol) return true;
  return false;
}

int bracket_minus(double a) { return static_cast<int>(std::ceil(a)) - 1; }

double f_g(const SurfaceModel&, const SurfacePoint&) { return 0.0; }

double k_tilde(const ProblemData& d, const SurfacePoint& x) {
  double e = f_g(*d.surface, x);
  for (int i = 0; i < d.m(); ++i) {
    if (d.surface->distance(x, d.sing.points[i]) < kCoincide)
      fail(ErrorCode::AtSingularPoint, "K-tilde evaluated at a singular point");
    e -= 4 * kPi * d.sing.alpha[i] * d.surface->green(x, d.sing.points[i]);
  }
  return d.K->value(x) * std::exp(e);
}

LogKTilde log_k_tilde(const ProblemData& d, const SurfacePoint& x) {
  LogJet lk = log_jet(d.K->eval(x));
  LogKTilde r{lk.v + f_g(*d.surface, x), lk.g};
  for (int i = 0; i < d.m(); ++i) {
    const auto& p = d.sing.points[i];
    r.v -= 4 * kPi * d.sing.alpha[i] * d.surface->green(x, p);
    r.g -= d.surface->grad_green(x, p) * (4 * kPi * d.sing.alpha[i]);
  }
  return r;
}

double SignAnalysis::distance_to_zero_set(const SurfaceModel& s, const SurfacePoint& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& z : zeros) best = std::min(best, s.distance(x, z.x));
  return best;
}

int SignAnalysis::component_of(const SurfaceModel& s, const SurfacePoint& x) const {
  double best = std::numeric_limits<double>::infinity();
  long arg = -1;
  for (size_t k = 0; k < vertices.size(); ++k) {
    double d = s.distance(x, vertices[k]);
    if (d < best) {
      best = d;
      arg = static_cast<long>(k);
    }
  }
  return arg >= 0 && label[arg] >= 0 ? label[arg] : -1;
}

SignAnalysis analyze_sign(const SurfaceModel& s, const CurvatureField& K, int n1, int n2) {
  SignAnalysis out;
  out.n1 = n1;
  out.n2 = n2;
  TensorGrid g = s.tensor_grid(n1, n2);
  const bool sph = s.kind() == SurfaceKind::Sphere;
  Mesh mesh{n1, n2, sph, long(n1) * n2 + (sph ? 2 : 0)};
  out.vertices = g.points;
  std::vector<double> weight(g.points.size());
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) weight[g.index(i, j)] = g.row_weight[i];
  if (sph) {
    out.vertices.push_back(s.from_chart(0, 0));
    out.vertices.push_back(s.from_chart(0, kPi));
    weight.push_back(0);
    weight.push_back(0);
  }
  const long nv = mesh.nv;
  out.value.resize(nv);
  for (long k = 0; k < nv; ++k) {
    Jet j = K.eval(out.vertices[k]);
    out.value[k] = j.v;
    out.max_grad = std::max(out.max_grad, norm(j.g));
    if (j.v > 0) out.max_lap_log_k_positive = std::max(out.max_lap_log_k_positive, log_jet(j).lap);
  }

  auto sgn = [&](long k) { return out.value[k] > 0 ? 1 : (out.value[k] < 0 ? -1 : 0); };
  UnionFind uf(nv);
  mesh.edges([&](long a, long b) {
    out.spacing = std::max(out.spacing, s.distance(out.vertices[a], out.vertices[b]));
    int sa = sgn(a), sb = sgn(b);
    if (sa != 0 && sa == sb) uf.join(a, b);
    if ((sa > 0) != (sb > 0)) {
      double t = out.value[a] / (out.value[a] - out.value[b]);
      SurfacePoint z = lerp_point(s, out.vertices[a], out.vertices[b], t);
      out.zeros.push_back({z, norm(K.eval(z).g)});
    }
  });

  // Group vertices into components; ids in order of first appearance keep the output deterministic.
  std::vector<long> root_to_comp(nv, -1);
  out.label.assign(nv, -1);
  for (long k = 0; k < nv; ++k) {
    int sk = sgn(k);
    if (sk == 0) continue;
    long r = uf.find(k);
    auto& list = sk > 0 ? out.positive : out.negative;
    if (root_to_comp[r] < 0) {
      root_to_comp[r] = static_cast<long>(list.size());
      list.emplace_back();
      list.back().peak_value = 0;
    }
    Component& c = list[root_to_comp[r]];
    c.vertices.push_back(k);
    c.area += weight[k];
    if (std::abs(out.value[k]) > std::abs(c.peak_value)) {
      c.peak_value = out.value[k];
      c.peak = out.vertices[k];
    }
    out.label[k] = sk > 0 ? static_cast<int>(root_to_comp[r]) : -2 - static_cast<int>(root_to_comp[r]);
  }

  std::vector<long> ecount_pos(out.positive.size()), fcount_pos(out.positive.size());
  std::vector<long> ecount_neg(out.negative.size()), fcount_neg(out.negative.size());
  auto same = [&](long a, long b) { return out.label[a] != -1 && out.label[a] == out.label[b]; };
  auto bump = [&](long a, std::vector<long>& pos, std::vector<long>& neg) {
    int l = out.label[a];
    if (l >= 0) ++pos[l];
    else ++neg[-2 - l];
  };
  mesh.edges([&](long a, long b) {
    if (same(a, b)) bump(a, ecount_pos, ecount_neg);
  });
  mesh.triangles([&](long a, long b, long c) {
    if (same(a, b) && same(b, c)) bump(a, fcount_pos, fcount_neg);
  });
  for (size_t c = 0; c < out.positive.size(); ++c) {
    auto& comp = out.positive[c];
    comp.euler = static_cast<int>(long(comp.vertices.size()) - ecount_pos[c] + fcount_pos[c]);
    comp.contractible = comp.euler == 1;
  }
  for (size_t c = 0; c < out.negative.size(); ++c) {
    auto& comp = out.negative[c];
    comp.euler = static_cast<int>(long(comp.vertices.size()) - ecount_neg[c] + fcount_neg[c]);
    comp.contractible = comp.euler == 1;
  }
  return out;
}

namespace {

std::vector<int> topology_signature(const SignAnalysis& a) {
  std::vector<int> sig;
  for (const auto& c : a.positive) sig.push_back(c.euler);
  std::sort(sig.begin(), sig.end());
  return sig;
}

Verdict make_verdict(std::string name, double eps, double lo, double hi,
                            std::vector<std::pair<bool, std::string>> flags, bool needs_certificate) {
  Verdict v;
  v.name = std::move(name);
  v.epsilon = eps;
  v.window_lo = lo;
  v.window_hi = hi;
  for (auto& [ok, why] : flags)
    if (!ok) v.reasons.push_back(why);
  if (!(eps > lo && eps < hi)) v.reasons.push_back("epsilon outside admissible window");
  if (!v.reasons.empty()) {
    v.status = "fails";
  } else if (needs_certificate) {
    v.status = "needs_certificate";
    v.reasons.push_back("requires a class certificate for K");
  } else {
    v.status = "applies";
    v.applies = true;
  }
  return v;
}

}  // namespace

HypothesisReport hypotheses(const ProblemData& d, int n1, int n2) {
  const SurfaceModel& s = *d.surface;
  if (n1 <= 0 || n2 <= 0) {
    n1 = s.grid().n1;
    n2 = s.grid().n2;
  }
  SignAnalysis a = analyze_sign(s, *d.K, n1, n2);
  SignAnalysis fine = analyze_sign(s, *d.K, 2 * n1, 2 * n2);
  if (topology_signature(a) != topology_signature(fine))
    fail(ErrorCode::GridTooCoarse, "component topology of {K > 0} changes under refinement");

  HypothesisReport r;
  bool has_pos = !a.positive.empty(), has_neg = !a.negative.empty();
  r.h1 = has_pos && has_neg;
  r.h2 = true;
  if (a.zeros.empty()) {
    r.h3 = true;
    r.h3_ratio = 0;
  } else {
    double mn = std::numeric_limits<double>::infinity();
    for (const auto& z : a.zeros) mn = std::min(mn, z.grad_norm);
    r.h3_ratio = a.max_grad > 0 ? mn / a.max_grad : 0;
    r.h3 = r.h3_ratio > 1e-3;
    if (r.h3 && r.h3_ratio < 2e-3) r.notes.push_back("(H3) margin within a factor 2 of the threshold");
  }
  r.h4 = true;
  r.h4_margin = std::numeric_limits<double>::infinity();
  if (!a.zeros.empty())
    for (const auto& p : d.sing.points) {
      double dist = a.distance_to_zero_set(s, p) / a.spacing;
      r.h4_margin = std::min(r.h4_margin, dist);
      if (dist <= 1.0) r.h4 = false;
    }
  if (r.h4 && r.h4_margin < 2.0) r.notes.push_back("(H4) a source lies within two grid spacings of {K = 0}");

  r.ell = d.ell;
  r.n_plus = static_cast<int>(a.positive.size());
  for (const auto& c : a.positive) {
    r.components.push_back({c.euler, c.contractible, long(c.vertices.size()), c.area, s.to_chart(c.peak)});
    if (!c.contractible) r.has_noncontractible = true;
  }
  if (has_pos && a.max_lap_log_k_positive < 0) r.beta = -a.max_lap_log_k_positive;

  r.alpha_positive_inside = true;
  r.alpha_exclusions_ok = true;
  r.split_rhs = d.ell;
  for (int i = 0; i < d.ell; ++i) {
    double al = d.sing.alpha[i];
    if (!(al > 0)) r.alpha_positive_inside = false;
    double nearest = std::nearbyint(al);
    if (std::abs(al - nearest) < 1e-12 && nearest >= 0 && nearest <= d.N - 1) r.alpha_exclusions_ok = false;
    r.split_rhs += bracket_minus(al);
  }
  r.split_inequality_ok = d.N <= r.split_rhs;
  r.chi_alpha = d.chi_alpha();
  r.rho_geo = d.rho_geo();
  r.rho_in_gamma = in_gamma(r.rho_geo, d.sing.alpha);

  const double area = s.area();
  const double eps_left = 4 * kPi * (2.0 * d.N - s.euler_characteristic() - d.alpha_sum());
  const bool beta_ok = r.beta.has_value();
  const double hi = beta_ok ? *r.beta * area : 0.0;
  r.verdicts.push_back(make_verdict("separate_components", eps_left, 0, hi,
                                    {{r.n_plus >= d.N, "fewer positive components than N"},
                                     {r.h1, "(H1) fails"},
                                     {r.h2, "(H2) fails"},
                                     {beta_ok, "no beta > 0"},
                                     {r.alpha_positive_inside, "an order inside {K > 0} is not positive"}},
                                    false));
  r.verdicts.push_back(make_verdict("noncontractible_loop", eps_left, 0, hi,
                                    {{r.has_noncontractible, "no non-contractible component"},
                                     {r.h1, "(H1) fails"},
                                     {r.h2, "(H2) fails"},
                                     {r.h3, "(H3) fails"},
                                     {r.h4, "(H4) fails"},
                                     {beta_ok, "no beta > 0"},
                                     {r.alpha_exclusions_ok, "an order inside {K > 0} is in {0,...,N-1}"}},
                                    false));
  r.verdicts.push_back(make_verdict("contractible_split", eps_left, 0, hi,
                                    {{r.h1, "(H1) fails"},
                                     {r.h2, "(H2) fails"},
                                     {r.h3, "(H3) fails"},
                                     {r.h4, "(H4) fails"},
                                     {beta_ok, "no beta > 0"},
                                     {r.alpha_exclusions_ok, "an order inside {K > 0} is in {0,...,N-1}"},
                                     {r.split_inequality_ok, "N exceeds ell + sum of [alpha]^-"}},
                                    false));
  r.verdicts.push_back(make_verdict("convex_class", -eps_left, 0, 1, {}, true));
  r.verdicts.push_back(make_verdict("concave_class", eps_left, 0, 1, {}, true));
  return r;
}

}  // namespace sll
