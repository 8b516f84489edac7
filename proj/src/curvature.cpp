#include "sll/curvature.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace sll {

namespace {

constexpr double kPi = std::numbers::pi;

class Constant final : public CurvatureField {
 public:
  explicit Constant(double c) : c_(c) {}
  Jet eval(const SurfacePoint&) const override { return {c_, {}, 0}; }

 private:
  double c_;
};

class CosPolar final : public CurvatureField {
 public:
  CosPolar(SurfaceRef s, SurfacePoint axis, double scale) : s_(std::move(s)), axis_(axis), k_(scale) {}
  Jet eval(const SurfacePoint& x) const override {
    double c = dot(x.p, axis_.p);
    return {k_ * c, (axis_.p - x.p * c) * k_, -2.0 * k_ * c};
  }

 private:
  SurfaceRef s_;
  SurfacePoint axis_;
  double k_;
};

class GaussianSum final : public CurvatureField {
 public:
  GaussianSum(SurfaceRef s, double off, std::vector<GaussTerm> t) : s_(std::move(s)), off_(off), t_(std::move(t)) {}
  Jet eval(const SurfacePoint& x) const override {
    Jet j{off_, {}, 0};
    for (const auto& t : t_) {
      double q = smooth_sq_dist(*s_, x, t.center);
      Vec3 gq = grad_smooth_sq_dist(*s_, x, t.center);
      double e = t.amplitude * std::exp(t.c * q);
      j.v += e;
      j.g += gq * (e * t.c);
      j.lap += e * (t.c * lap_smooth_sq_dist(*s_, x, t.center) + t.c * t.c * dot(gq, gq));
    }
    return j;
  }

 private:
  SurfaceRef s_;
  double off_;
  std::vector<GaussTerm> t_;
};

class QuadraticSum final : public CurvatureField {
 public:
  QuadraticSum(SurfaceRef s, std::vector<QuadTerm> t) : s_(std::move(s)), t_(std::move(t)) {}
  Jet eval(const SurfacePoint& x) const override {
    Jet j;
    for (const auto& t : t_) {
      j.v += t.c * smooth_sq_dist(*s_, x, t.center);
      j.g += grad_smooth_sq_dist(*s_, x, t.center) * t.c;
      j.lap += t.c * lap_smooth_sq_dist(*s_, x, t.center);
    }
    return j;
  }

 private:
  SurfaceRef s_;
  std::vector<QuadTerm> t_;
};

class Fourier final : public CurvatureField {
 public:
  Fourier(SurfaceRef s, double off, std::vector<FourierTerm> t) : s_(std::move(s)), off_(off), t_(std::move(t)) {}
  Jet eval(const SurfacePoint& x) const override {
    Jet j{off_, {}, 0};
    const double a = s_->period_a(), b = s_->period_b();
    for (const auto& t : t_) {
      double kx = 2 * kPi * t.n / a, ky = 2 * kPi * t.m / b;
      double ph = kx * x.p.x + ky * x.p.y + t.phase;
      j.v += t.amplitude * std::cos(ph);
      j.g += Vec3{kx, ky, 0} * (-t.amplitude * std::sin(ph));
      j.lap -= t.amplitude * (kx * kx + ky * ky) * std::cos(ph);
    }
    return j;
  }

 private:
  SurfaceRef s_;
  double off_;
  std::vector<FourierTerm> t_;
};

class ExpOf final : public CurvatureField {
 public:
  explicit ExpOf(FieldRef f) : f_(std::move(f)) {}
  Jet eval(const SurfacePoint& x) const override {
    Jet j = f_->eval(x);
    double e = std::exp(j.v);
    return {e, j.g * e, e * (j.lap + dot(j.g, j.g))};
  }

 private:
  FieldRef f_;
};

class Product final : public CurvatureField {
 public:
  Product(FieldRef a, FieldRef b) : a_(std::move(a)), b_(std::move(b)) {}
  Jet eval(const SurfacePoint& x) const override {
    Jet p = a_->eval(x), q = b_->eval(x);
    return {p.v * q.v, q.g * p.v + p.g * q.v, p.v * q.lap + q.v * p.lap + 2 * dot(p.g, q.g)};
  }

 private:
  FieldRef a_, b_;
};

class Sum final : public CurvatureField {
 public:
  Sum(FieldRef a, FieldRef b) : a_(std::move(a)), b_(std::move(b)) {}
  Jet eval(const SurfacePoint& x) const override {
    Jet p = a_->eval(x), q = b_->eval(x);
    return {p.v + q.v, p.g + q.g, p.lap + q.lap};
  }

 private:
  FieldRef a_, b_;
};

// ---- expressions: second-order forward jets in three ambient variables ----

struct D2 {
  double v = 0;
  std::array<double, 3> g{};
  std::array<std::array<double, 3>, 3> h{};
};

D2 unary(const D2& a, double f, double f1, double f2) {
  D2 r;
  r.v = f;
  for (int i = 0; i < 3; ++i) {
    r.g[i] = f1 * a.g[i];
    for (int k = 0; k < 3; ++k) r.h[i][k] = f1 * a.h[i][k] + f2 * a.g[i] * a.g[k];
  }
  return r;
}

// F(a, b) with partials (Fa, Fb, Faa, Fab, Fbb).
D2 binary(const D2& a, const D2& b, double F, double Fa, double Fb, double Faa, double Fab, double Fbb) {
  D2 r;
  r.v = F;
  for (int i = 0; i < 3; ++i) {
    r.g[i] = Fa * a.g[i] + Fb * b.g[i];
    for (int k = 0; k < 3; ++k)
      r.h[i][k] = Fa * a.h[i][k] + Fb * b.h[i][k] + Faa * a.g[i] * a.g[k] + Fbb * b.g[i] * b.g[k] +
                  Fab * (a.g[i] * b.g[k] + b.g[i] * a.g[k]);
  }
  return r;
}

D2 constant_d2(double c) { return D2{c, {}, {}}; }
D2 variable_d2(double v, int idx) {
  D2 r{v, {}, {}};
  r.g[idx] = 1;
  return r;
}

D2 add(const D2& a, const D2& b) { return binary(a, b, a.v + b.v, 1, 1, 0, 0, 0); }
D2 sub(const D2& a, const D2& b) { return binary(a, b, a.v - b.v, 1, -1, 0, 0, 0); }
D2 mul(const D2& a, const D2& b) { return binary(a, b, a.v * b.v, b.v, a.v, 0, 1, 0); }
D2 divide(const D2& a, const D2& b) {
  double ib = 1.0 / b.v;
  return binary(a, b, a.v * ib, ib, -a.v * ib * ib, 0, -ib * ib, 2 * a.v * ib * ib * ib);
}
D2 power(const D2& a, const D2& b) {
  bool const_exp = b.g == std::array<double, 3>{} && b.h == std::array<std::array<double, 3>, 3>{};
  if (const_exp) {
    double p = b.v;
    return unary(a, std::pow(a.v, p), p * std::pow(a.v, p - 1), p * (p - 1) * std::pow(a.v, p - 2));
  }
  double la = std::log(a.v), f = std::pow(a.v, b.v);
  double Fa = b.v * f / a.v, Fb = f * la;
  double Faa = b.v * (b.v - 1) * f / (a.v * a.v), Fbb = f * la * la, Fab = f / a.v * (1 + b.v * la);
  return binary(a, b, f, Fa, Fb, Faa, Fab, Fbb);
}
D2 atan2_d2(const D2& y, const D2& x) {
  double r2 = x.v * x.v + y.v * y.v;
  double Fy = x.v / r2, Fx = -y.v / r2;
  double Fyy = -2 * x.v * y.v / (r2 * r2), Fxx = 2 * x.v * y.v / (r2 * r2), Fxy = (y.v * y.v - x.v * x.v) / (r2 * r2);
  return binary(y, x, std::atan2(y.v, x.v), Fy, Fx, Fyy, Fxy, Fxx);
}

D2 apply_fn(const std::string& name, const D2& a) {
  double v = a.v;
  if (name == "sin") return unary(a, std::sin(v), std::cos(v), -std::sin(v));
  if (name == "cos") return unary(a, std::cos(v), -std::sin(v), -std::cos(v));
  if (name == "tan") {
    double t = std::tan(v), s2 = 1 + t * t;
    return unary(a, t, s2, 2 * t * s2);
  }
  if (name == "exp") {
    double e = std::exp(v);
    return unary(a, e, e, e);
  }
  if (name == "log") return unary(a, std::log(v), 1 / v, -1 / (v * v));
  if (name == "sqrt") {
    double s = std::sqrt(v);
    return unary(a, s, 0.5 / s, -0.25 / (s * v));
  }
  if (name == "abs") return unary(a, std::abs(v), v < 0 ? -1 : 1, 0);
  if (name == "sinh") return unary(a, std::sinh(v), std::cosh(v), std::sinh(v));
  if (name == "cosh") return unary(a, std::cosh(v), std::sinh(v), std::cosh(v));
  if (name == "tanh") {
    double t = std::tanh(v), s = 1 - t * t;
    return unary(a, t, s, -2 * t * s);
  }
  if (name == "atan") {
    double d = 1 + v * v;
    return unary(a, std::atan(v), 1 / d, -2 * v / (d * d));
  }
  if (name == "asin") {
    double d = 1 - v * v;
    return unary(a, std::asin(v), 1 / std::sqrt(d), v / (d * std::sqrt(d)));
  }
  if (name == "acos") {
    double d = 1 - v * v;
    return unary(a, std::acos(v), -1 / std::sqrt(d), -v / (d * std::sqrt(d)));
  }
  fail(ErrorCode::InvalidArgument, "unknown function '" + name + "' in expression");
}

struct Node {
  enum Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call, Call2 } kind;
  double num = 0;
  std::string name;
  std::vector<std::unique_ptr<Node>> kids;
};
using NodePtr = std::unique_ptr<Node>;

class Parser {
 public:
  Parser(const std::string& s, const std::map<std::string, double>& consts, const std::vector<std::string>& vars)
      : s_(s), consts_(consts), vars_(vars) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  const std::map<std::string, double>& consts_;
  const std::vector<std::string>& vars_;
  size_t pos_ = 0;

  [[noreturn]] void error(const std::string& m) const {
    fail(ErrorCode::InvalidArgument, "expression: " + m + " at offset " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    if (a) n->kids.push_back(std::move(a));
    if (b) n->kids.push_back(std::move(b));
    return n;
  }
  NodePtr expr() {
    NodePtr l = term();
    for (;;) {
      if (eat('+')) l = make(Node::Add, std::move(l), term());
      else if (eat('-')) l = make(Node::Sub, std::move(l), term());
      else return l;
    }
  }
  NodePtr term() {
    NodePtr l = unary_op();
    for (;;) {
      if (eat('*')) l = make(Node::Mul, std::move(l), unary_op());
      else if (eat('/')) l = make(Node::Div, std::move(l), unary_op());
      else return l;
    }
  }
  NodePtr unary_op() {
    if (eat('-')) return make(Node::Neg, unary_op());
    if (eat('+')) return unary_op();
    NodePtr base = primary();
    if (eat('^')) return make(Node::Pow, std::move(base), unary_op());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) error("unexpected end");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!eat(')')) error("missing ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      auto n = make(Node::Num);
      n->num = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t st = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string id = s_.substr(st, pos_ - st);
      if (eat('(')) {
        std::vector<NodePtr> args;
        args.push_back(expr());
        while (eat(',')) args.push_back(expr());
        if (!eat(')')) error("missing ')' after arguments of " + id);
        auto n = make(args.size() == 1 ? Node::Call : Node::Call2);
        if (args.size() > 2) error("too many arguments to " + id);
        n->name = id;
        for (auto& a : args) n->kids.push_back(std::move(a));
        return n;
      }
      if (auto it = consts_.find(id); it != consts_.end()) {
        auto n = make(Node::Num);
        n->num = it->second;
        return n;
      }
      for (const auto& v : vars_)
        if (v == id) {
          auto n = make(Node::Var);
          n->name = id;
          return n;
        }
      error("unknown identifier '" + id + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }
};

class Expression final : public CurvatureField {
 public:
  Expression(SurfaceRef s, const std::string& text) : s_(std::move(s)) {
    std::map<std::string, double> consts{{"pi", kPi}, {"e", std::numbers::e}};
    std::vector<std::string> vars;
    if (s_->kind() == SurfaceKind::Sphere) {
      vars = {"x", "y", "z", "lon", "colat"};
    } else {
      vars = {"x", "y", "u", "v"};
      consts["a"] = s_->period_a();
      consts["b"] = s_->period_b();
    }
    root_ = Parser(text, consts, vars).parse();
  }

  Jet eval(const SurfacePoint& x) const override {
    std::map<std::string, D2> env;
    if (s_->kind() == SurfaceKind::Sphere) {
      D2 X = variable_d2(x.p.x, 0), Y = variable_d2(x.p.y, 1), Z = variable_d2(x.p.z, 2);
      env["x"] = X;
      env["y"] = Y;
      env["z"] = Z;
      env["lon"] = atan2_d2(Y, X);
      D2 rho = apply_fn("sqrt", add(mul(X, X), mul(Y, Y)));
      env["colat"] = atan2_d2(rho, Z);
    } else {
      env["x"] = env["u"] = variable_d2(x.p.x, 0);
      env["y"] = env["v"] = variable_d2(x.p.y, 1);
    }
    D2 r = run(*root_, env);
    Vec3 g{r.g[0], r.g[1], r.g[2]};
    if (s_->kind() == SurfaceKind::Torus) return {r.v, {g.x, g.y, 0}, r.h[0][0] + r.h[1][1]};
    const Vec3& n = x.p;
    double nHn = 0, tr = r.h[0][0] + r.h[1][1] + r.h[2][2];
    const double nn[3] = {n.x, n.y, n.z};
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) nHn += nn[i] * r.h[i][k] * nn[k];
    double ng = dot(n, g);
    return {r.v, g - n * ng, tr - nHn - 2 * ng};
  }

 private:
  SurfaceRef s_;
  NodePtr root_;

  static D2 run(const Node& nd, const std::map<std::string, D2>& env) {
    switch (nd.kind) {
      case Node::Num: return constant_d2(nd.num);
      case Node::Var: return env.at(nd.name);
      case Node::Neg: return sub(constant_d2(0), run(*nd.kids[0], env));
      case Node::Add: return add(run(*nd.kids[0], env), run(*nd.kids[1], env));
      case Node::Sub: return sub(run(*nd.kids[0], env), run(*nd.kids[1], env));
      case Node::Mul: return mul(run(*nd.kids[0], env), run(*nd.kids[1], env));
      case Node::Div: return divide(run(*nd.kids[0], env), run(*nd.kids[1], env));
      case Node::Pow: return power(run(*nd.kids[0], env), run(*nd.kids[1], env));
      case Node::Call: return apply_fn(nd.name, run(*nd.kids[0], env));
      case Node::Call2: {
        D2 a = run(*nd.kids[0], env), b = run(*nd.kids[1], env);
        if (nd.name == "atan2") return atan2_d2(a, b);
        if (nd.name == "pow") return power(a, b);
        fail(ErrorCode::InvalidArgument, "unknown two-argument function '" + nd.name + "'");
      }
    }
    return {};
  }
};

}  // namespace

FieldRef constant_field(double c) { return std::make_shared<Constant>(c); }

FieldRef cos_polar_field(SurfaceRef s, SurfacePoint axis, double scale) {
  if (s->kind() != SurfaceKind::Sphere) fail(ErrorCode::InvalidArgument, "cos_polar is defined on the sphere only");
  return std::make_shared<CosPolar>(std::move(s), axis, scale);
}

FieldRef gaussian_sum_field(SurfaceRef s, double offset, std::vector<GaussTerm> terms) {
  return std::make_shared<GaussianSum>(std::move(s), offset, std::move(terms));
}

FieldRef quadratic_sum_field(SurfaceRef s, std::vector<QuadTerm> terms) {
  return std::make_shared<QuadraticSum>(std::move(s), std::move(terms));
}

FieldRef fourier_field(SurfaceRef s, double offset, std::vector<FourierTerm> terms) {
  if (s->kind() != SurfaceKind::Torus) fail(ErrorCode::InvalidArgument, "fourier family is defined on the torus only");
  return std::make_shared<Fourier>(std::move(s), offset, std::move(terms));
}

FieldRef expression_field(SurfaceRef s, const std::string& expr) { return std::make_shared<Expression>(std::move(s), expr); }

FieldRef exp_field(FieldRef f) { return std::make_shared<ExpOf>(std::move(f)); }
FieldRef product_field(FieldRef a, FieldRef b) { return std::make_shared<Product>(std::move(a), std::move(b)); }
FieldRef sum_field(FieldRef a, FieldRef b) { return std::make_shared<Sum>(std::move(a), std::move(b)); }

LogJet log_jet(const Jet& k) {
  Vec3 g = k.g / k.v;
  return {std::log(k.v), g, k.lap / k.v - dot(g, g)};
}

}  // namespace sll
