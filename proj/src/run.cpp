#include "sll/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

namespace sll {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

[[noreturn]] void parse_fail(const std::string& path, const std::string& msg) {
  fail(ErrorCode::ParseError, (path.empty() ? "/" : path) + ": " + msg);
}
[[noreturn]] void semantic_fail(const std::string& path, const std::string& msg) {
  fail(ErrorCode::SemanticError, (path.empty() ? "/" : path) + ": " + msg);
}

struct Ctx {
  bool lenient = false;
  std::vector<std::string> warnings;
};

// Reads one JSON object, recording which keys were consumed and writing the normalized copy.
class Obj {
 public:
  Obj(const json& j, std::string path, Ctx& ctx) : j_(j), path_(std::move(path)), ctx_(ctx) {
    if (!j_.is_object()) parse_fail(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double num(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = raw(key);
    double r;
    if (!v || v->is_null()) {
      if (!def) parse_fail(at(key), "required number is missing");
      r = *def;
    } else {
      if (!v->is_number()) parse_fail(at(key), "expected a number");
      r = v->get<double>();
      if (!std::isfinite(r)) parse_fail(at(key), "expected a finite number");
    }
    out[key] = r;
    return r;
  }

  std::optional<double> opt_num(const std::string& key) {
    const json* v = raw(key);
    if (!v || v->is_null()) {
      out[key] = nullptr;
      return std::nullopt;
    }
    return num(key);
  }

  long integer(const std::string& key, std::optional<long> def = std::nullopt) {
    const json* v = raw(key);
    long r;
    if (!v || v->is_null()) {
      if (!def) parse_fail(at(key), "required integer is missing");
      r = *def;
    } else {
      if (!v->is_number_integer()) parse_fail(at(key), "expected an integer");
      r = v->get<long>();
    }
    out[key] = r;
    return r;
  }

  std::string str(const std::string& key, std::optional<std::string> def = std::nullopt,
                  const std::vector<std::string>& allowed = {}) {
    const json* v = raw(key);
    std::string r;
    if (!v || v->is_null()) {
      if (!def) parse_fail(at(key), "required string is missing");
      r = *def;
    } else {
      if (!v->is_string()) parse_fail(at(key), "expected a string");
      r = v->get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), r) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      parse_fail(at(key), "'" + r + "' is not one of: " + list);
    }
    out[key] = r;
    return r;
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key())) continue;
      if (!ctx_.lenient) parse_fail(at(it.key()), "unknown key");
      ctx_.warnings.push_back(at(it.key()) + ": unknown key ignored");
    }
  }

  json out = json::object();

 private:
  const json& j_;
  std::string path_;
  Ctx& ctx_;
  std::set<std::string> seen_;
};

json norm_point(const json* v, const std::string& path) {
  if (!v || !v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
    parse_fail(path, "expected a chart point [c1, c2]");
  return json::array({(*v)[0].get<double>(), (*v)[1].get<double>()});
}

json norm_points(const json* v, const std::string& path) {
  if (!v || !v->is_array()) parse_fail(path, "expected an array of chart points");
  json out = json::array();
  for (size_t i = 0; i < v->size(); ++i) out.push_back(norm_point(&(*v)[i], path + "/" + std::to_string(i)));
  return out;
}

json norm_field(const json& j, const std::string& path, Ctx& ctx);

json norm_field_list(const json* v, const std::string& path, Ctx& ctx) {
  if (!v || !v->is_array() || v->empty()) parse_fail(path, "expected a non-empty array of field specs");
  json out = json::array();
  for (size_t i = 0; i < v->size(); ++i) out.push_back(norm_field((*v)[i], path + "/" + std::to_string(i), ctx));
  return out;
}

json norm_field(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  std::string fam = o.str("family", std::nullopt,
                          {"constant", "cos_polar", "expression", "gaussian_sum", "quadratic_sum", "fourier", "exp",
                           "product", "sum"});
  if (fam == "constant") {
    o.num("value", 1.0);
  } else if (fam == "cos_polar") {
    const json* ax = o.raw("axis");
    o.out["axis"] = (ax && !ax->is_null()) ? norm_point(ax, o.at("axis")) : json::array({0.0, 0.0});
    o.num("scale", 1.0);
  } else if (fam == "expression") {
    o.str("expression");
  } else if (fam == "gaussian_sum" || fam == "quadratic_sum" || fam == "fourier") {
    if (fam != "quadratic_sum") o.num("offset", 0.0);
    const json* t = o.raw("terms");
    if (!t || !t->is_array()) parse_fail(o.at("terms"), "expected an array of terms");
    json terms = json::array();
    for (size_t i = 0; i < t->size(); ++i) {
      Obj term((*t)[i], o.at("terms") + "/" + std::to_string(i), ctx);
      if (fam == "fourier") {
        term.integer("n");
        term.integer("m");
        term.num("amplitude", 1.0);
        term.num("phase", 0.0);
      } else {
        term.out["center"] = norm_point(term.raw("center"), term.at("center"));
        if (fam == "gaussian_sum") term.num("amplitude", 1.0);
        term.num("c");
      }
      term.finish();
      terms.push_back(term.out);
    }
    o.out["terms"] = terms;
  } else if (fam == "exp") {
    const json* of = o.raw("of");
    if (!of) parse_fail(o.at("of"), "required field spec is missing");
    o.out["of"] = norm_field(*of, o.at("of"), ctx);
  } else if (fam == "product") {
    o.out["factors"] = norm_field_list(o.raw("factors"), o.at("factors"), ctx);
  } else {
    o.out["summands"] = norm_field_list(o.raw("summands"), o.at("summands"), ctx);
  }
  o.finish();
  return o.out;
}

SurfacePoint chart_point(const SurfaceModel& s, const json& p) { return s.from_chart(p[0].get<double>(), p[1].get<double>()); }

json chart_json(const SurfaceModel& s, const SurfacePoint& x) {
  auto c = s.to_chart(x);
  return json::array({c[0], c[1]});
}

json config_json(const SurfaceModel& s, const Configuration& xi) {
  json a = json::array();
  for (const auto& x : xi.xi) a.push_back(chart_json(s, x));
  return a;
}

Configuration config_from(const SurfaceModel& s, const json& pts) {
  Configuration c;
  for (const auto& p : pts) c.xi.push_back(chart_point(s, p));
  return c;
}

FieldRef build_field(const SurfaceRef& s, const json& f) {
  const std::string fam = f.at("family");
  if (fam == "constant") return constant_field(f.at("value"));
  if (fam == "cos_polar") return cos_polar_field(s, chart_point(*s, f.at("axis")), f.at("scale"));
  if (fam == "expression") return expression_field(s, f.at("expression"));
  if (fam == "gaussian_sum") {
    std::vector<GaussTerm> t;
    for (const auto& x : f.at("terms")) t.push_back({chart_point(*s, x.at("center")), x.at("amplitude"), x.at("c")});
    return gaussian_sum_field(s, f.at("offset"), t);
  }
  if (fam == "quadratic_sum") {
    std::vector<QuadTerm> t;
    for (const auto& x : f.at("terms")) t.push_back({chart_point(*s, x.at("center")), x.at("c")});
    return quadratic_sum_field(s, t);
  }
  if (fam == "fourier") {
    std::vector<FourierTerm> t;
    for (const auto& x : f.at("terms"))
      t.push_back({x.at("n").get<int>(), x.at("m").get<int>(), x.at("amplitude"), x.at("phase")});
    return fourier_field(s, f.at("offset"), t);
  }
  if (fam == "exp") return exp_field(build_field(s, f.at("of")));
  const bool prod = fam == "product";
  const json& parts = f.at(prod ? "factors" : "summands");
  FieldRef acc = build_field(s, parts[0]);
  for (size_t i = 1; i < parts.size(); ++i)
    acc = prod ? product_field(acc, build_field(s, parts[i])) : sum_field(acc, build_field(s, parts[i]));
  return acc;
}

SurfaceRef build_surface(const json& s) {
  if (s.at("type") == "sphere") return SurfaceModel::sphere(s.at("nlat"), s.at("nlon"));
  return SurfaceModel::torus(s.at("periods")[0], s.at("periods")[1], s.at("nu"), s.at("nv"));
}

FieldRef build_curvature(const SurfaceRef& s, const json& c) {
  FieldRef k = build_field(s, c.at("field"));
  if (!c.at("modulation").is_null()) k = product_field(k, exp_field(build_field(s, c.at("modulation"))));
  return k;
}

}  // namespace

RunConfig parse_config(const std::string& text, bool lenient) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports line and column itself.
    fail(ErrorCode::ParseError, e.what());
  }
  return parse_config(j, lenient);
}

RunConfig parse_config(const json& j, bool lenient) {
  Ctx ctx;
  ctx.lenient = lenient;
  Obj root(j, "", ctx);
  json doc = json::object();

  // surface
  {
    const json* sv = root.raw("surface");
    if (!sv) parse_fail("/surface", "required section is missing");
    json sj = sv->is_string() ? json{{"type", *sv}} : *sv;
    Obj o(sj, "/surface", ctx);
    std::string type = o.str("type", std::nullopt, {"sphere", "torus"});
    if (type == "sphere") {
      if (o.integer("nlat", 128) < 4) semantic_fail(o.at("nlat"), "grid too small");
      if (o.integer("nlon", 256) < 8) semantic_fail(o.at("nlon"), "grid too small");
    } else {
      const json* per = o.raw("periods");
      json p = json::array({1.0, 1.0});
      if (per && !per->is_null()) {
        if (!per->is_array() || per->size() != 2 || !(*per)[0].is_number() || !(*per)[1].is_number())
          parse_fail(o.at("periods"), "expected [a, b]");
        p = json::array({(*per)[0].get<double>(), (*per)[1].get<double>()});
        if (!(p[0].get<double>() > 0) || !(p[1].get<double>() > 0)) semantic_fail(o.at("periods"), "periods must be positive");
      }
      o.out["periods"] = p;
      if (o.integer("nu", 256) < 8) semantic_fail(o.at("nu"), "grid too small");
      if (o.integer("nv", 256) < 8) semantic_fail(o.at("nv"), "grid too small");
    }
    o.finish();
    doc["surface"] = o.out;
  }
  const bool sphere = doc["surface"]["type"] == "sphere";

  // curvature: either a field spec or {field, modulation}
  {
    const json* cv = root.raw("curvature");
    if (!cv) parse_fail("/curvature", "required section is missing");
    json cj = cv->is_string() ? json{{"family", *cv}} : *cv;
    json c;
    if (cj.is_object() && cj.contains("field")) {
      Obj o(cj, "/curvature", ctx);
      o.out["field"] = norm_field(*o.raw("field"), "/curvature/field", ctx);
      const json* m = o.raw("modulation");
      o.out["modulation"] = (m && !m->is_null()) ? norm_field(*m, "/curvature/modulation", ctx) : json(nullptr);
      o.finish();
      c = o.out;
    } else {
      json copy = cj;
      json mod = nullptr;
      if (copy.is_object() && copy.contains("modulation")) {
        if (!copy["modulation"].is_null()) mod = norm_field(copy["modulation"], "/curvature/modulation", ctx);
        copy.erase("modulation");
      }
      c = {{"field", norm_field(copy, "/curvature", ctx)}, {"modulation", mod}};
    }
    doc["curvature"] = c;
  }

  // singularities
  {
    const json* sv = root.raw("singularities");
    json out = json::array();
    if (sv && !sv->is_null()) {
      if (!sv->is_array()) parse_fail("/singularities", "expected an array");
      for (size_t i = 0; i < sv->size(); ++i) {
        Obj o((*sv)[i], "/singularities/" + std::to_string(i), ctx);
        o.out["at"] = norm_point(o.raw("at"), o.at("at"));
        double a = o.num("alpha");
        if (!(a > -1)) semantic_fail(o.at("alpha"), "order must satisfy alpha > -1");
        if (a == 0) semantic_fail(o.at("alpha"), "order 0 is not a singularity");
        o.finish();
        out.push_back(o.out);
      }
    }
    doc["singularities"] = out;
  }

  {
    const json* nv = root.raw("N");
    if (!nv || !nv->is_number_integer()) parse_fail("/N", "expected an integer");
    if (nv->get<long>() < 1) semantic_fail("/N", "N must be at least 1");
    doc["N"] = nv->get<long>();
  }
  const long N = doc["N"];

  auto section = [&](const std::string& name) -> json {
    const json* v = root.raw(name);
    return (v && !v->is_null()) ? *v : json::object();
  };

  {
    json sj = section("search");
    Obj o(sj, "/search", ctx);
    o.str("mode", "max", {"min", "max", "any"});
    if (o.integer("multistarts", 16) < 0) semantic_fail(o.at("multistarts"), "must be non-negative");
    if (!(o.num("grad_tol", 1e-8) > 0)) semantic_fail(o.at("grad_tol"), "must be positive");
    if (!(o.num("trust_radius", 0.1) > 0)) semantic_fail(o.at("trust_radius"), "must be positive");
    if (!(o.num("trust_max", 0.5) > 0)) semantic_fail(o.at("trust_max"), "must be positive");
    if (o.integer("max_iters", 200) < 1) semantic_fail(o.at("max_iters"), "must be positive");
    if (o.integer("seed", 1) < 0) semantic_fail(o.at("seed"), "must be non-negative");
    if (!(o.num("M", 100.0) > 0)) semantic_fail(o.at("M"), "must be positive");
    if (!(o.num("tau", 1e-6) > 0)) semantic_fail(o.at("tau"), "must be positive");
    o.finish();
    doc["search"] = o.out;
  }
  {
    json sj = section("minmax");
    Obj o(sj, "/minmax", ctx);
    o.str("case", "contractible_circles", {"contractible_circles", "ray_genus0", "torus_curve"});
    if (!(o.num("M", 100.0) > 0)) semantic_fail(o.at("M"), "must be positive");
    if (o.integer("curve_samples", 64) < 4) semantic_fail(o.at("curve_samples"), "must be at least 4");
    if (o.integer("steps", 30) < 0) semantic_fail(o.at("steps"), "must be non-negative");
    o.finish();
    doc["minmax"] = o.out;
  }
  {
    json sj = section("verify");
    Obj o(sj, "/verify", ctx);
    const json* c = o.raw("centers");
    o.out["centers"] = (c && !c->is_null()) ? norm_points(c, o.at("centers")) : json(nullptr);
    if (!o.out["centers"].is_null() && static_cast<long>(o.out["centers"].size()) != N)
      semantic_fail(o.at("centers"), "expected N centres");
    const json* ds = o.raw("delta_sweep");
    json sweep = json::array({0.05, 0.02, 0.01});
    if (ds && !ds->is_null()) {
      if (!ds->is_array() || ds->empty()) parse_fail(o.at("delta_sweep"), "expected a non-empty array of numbers");
      sweep = json::array();
      for (size_t i = 0; i < ds->size(); ++i) {
        if (!(*ds)[i].is_number()) parse_fail(o.at("delta_sweep") + "/" + std::to_string(i), "expected a number");
        double v = (*ds)[i].get<double>();
        if (!(v > 0)) semantic_fail(o.at("delta_sweep") + "/" + std::to_string(i), "scales must be positive");
        sweep.push_back(v);
      }
    }
    o.out["delta_sweep"] = sweep;
    if (!(o.num("ball_radius", 0.3) > 0)) semantic_fail(o.at("ball_radius"), "must be positive");
    o.str("scales", "equal", {"equal", "balanced"});
    auto rho = o.opt_num("rho");
    if (rho && !(*rho > 0)) semantic_fail(o.at("rho"), "must be positive");
    o.finish();
    doc["verify"] = o.out;
  }
  {
    json sj = section("classes");
    Obj o(sj, "/classes", ctx);
    const json* xb = o.raw("xi_bar");
    o.out["xi_bar"] = (xb && !xb->is_null()) ? norm_points(xb, o.at("xi_bar")) : json(nullptr);
    if (!o.out["xi_bar"].is_null() && static_cast<long>(o.out["xi_bar"].size()) != N)
      semantic_fail(o.at("xi_bar"), "expected N points");
    if (!(o.num("r", 0.3) > 0)) semantic_fail(o.at("r"), "must be positive");
    double lo = o.num("alpha_star", -0.5);
    auto hi = o.opt_num("alpha_sup");
    if (hi && *hi < lo) semantic_fail(o.at("alpha_sup"), "box must satisfy alpha_star <= alpha_sup");
    o.str("sign", "+", {"+", "-"});
    if (o.integer("seed", 7) < 0) semantic_fail(o.at("seed"), "must be non-negative");
    if (o.integer("starts", 32) < 1) semantic_fail(o.at("starts"), "must be positive");
    o.finish();
    doc["classes"] = o.out;
  }
  {
    json sj = section("landscape");
    Obj o(sj, "/landscape", ctx);
    if (o.integer("n1", 64) < 2) semantic_fail(o.at("n1"), "must be at least 2");
    if (o.integer("n2", 128) < 2) semantic_fail(o.at("n2"), "must be at least 2");
    const json* f = o.raw("fixed");
    o.out["fixed"] = (f && !f->is_null()) ? norm_points(f, o.at("fixed")) : json::array();
    o.finish();
    doc["landscape"] = o.out;
  }
  {
    json sj = section("hypotheses");
    Obj o(sj, "/hypotheses", ctx);
    if (o.integer("n1", 0) < 0) semantic_fail(o.at("n1"), "must be non-negative");
    if (o.integer("n2", 0) < 0) semantic_fail(o.at("n2"), "must be non-negative");
    o.finish();
    doc["hypotheses"] = o.out;
  }
  {
    json sj = section("output");
    Obj o(sj, "/output", ctx);
    o.str("path", ".");
    o.str("format", "json", {"json"});
    o.finish();
    doc["output"] = o.out;
  }
  root.finish();

  // Semantic checks that need the model: coincident sources, field construction.
  SurfaceRef probe = sphere ? SurfaceModel::sphere(8, 16)
                            : SurfaceModel::torus(doc["surface"]["periods"][0], doc["surface"]["periods"][1], 8, 8);
  const auto& sing = doc["singularities"];
  for (size_t i = 0; i < sing.size(); ++i)
    for (size_t k = 0; k < i; ++k)
      if (probe->distance(chart_point(*probe, sing[i]["at"]), chart_point(*probe, sing[k]["at"])) < 1e-12)
        semantic_fail("/singularities/" + std::to_string(i), "coincides with singularity " + std::to_string(k));
  try {
    build_curvature(probe, doc["curvature"]);
  } catch (const Error& e) {
    semantic_fail("/curvature", e.what());
  }

  RunConfig cfg;
  cfg.doc = std::move(doc);
  cfg.warnings = std::move(ctx.warnings);
  return cfg;
}

ProblemData build_problem(const RunConfig& cfg) {
  SurfaceRef s = build_surface(cfg.doc.at("surface"));
  FieldRef K = build_curvature(s, cfg.doc.at("curvature"));
  SingularData sd;
  for (const auto& x : cfg.doc.at("singularities")) {
    sd.points.push_back(chart_point(*s, x.at("at")));
    sd.alpha.push_back(x.at("alpha"));
  }
  return make_problem(s, K, sd, cfg.doc.at("N"));
}

SearchConfig search_config(const RunConfig& cfg) {
  const json& s = cfg.doc.at("search");
  const json& m = cfg.doc.at("minmax");
  SearchConfig c;
  c.multistarts = s.at("multistarts");
  c.grad_tol = s.at("grad_tol");
  c.trust_radius = s.at("trust_radius");
  c.trust_max = s.at("trust_max");
  c.max_iters = s.at("max_iters");
  c.seed = s.at("seed").get<std::uint64_t>();
  c.M = s.at("M");
  c.tau = s.at("tau");
  c.curve_samples = m.at("curve_samples");
  c.minmax_steps = m.at("steps");
  return c;
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : cfg.doc.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json hypotheses_json(const SurfaceModel& s, const HypothesisReport& h) {
  json comps = json::array();
  for (const auto& c : h.components)
    comps.push_back({{"euler", c.euler}, {"contractible", c.contractible}, {"vertices", c.vertices},
                     {"area", c.area}, {"peak", {c.peak[0], c.peak[1]}}});
  json verdicts = json::array();
  for (const auto& v : h.verdicts)
    verdicts.push_back({{"name", v.name}, {"applies", v.applies}, {"status", v.status}, {"epsilon", v.epsilon},
                        {"window", {v.window_lo, v.window_hi}}, {"reasons", v.reasons}});
  (void)s;
  return {{"h1", h.h1},
          {"h2", h.h2},
          {"h3", h.h3},
          {"h4", h.h4},
          {"h3_ratio", h.h3_ratio},
          {"h4_margin", h.h4_margin},
          {"ell", h.ell},
          {"n_plus", h.n_plus},
          {"components", comps},
          {"has_noncontractible", h.has_noncontractible},
          {"beta", h.beta ? json(*h.beta) : json(nullptr)},
          {"alpha_positive_inside", h.alpha_positive_inside},
          {"alpha_exclusions_ok", h.alpha_exclusions_ok},
          {"split_inequality_ok", h.split_inequality_ok},
          {"split_rhs", h.split_rhs},
          {"chi_alpha", h.chi_alpha},
          {"rho_geo", h.rho_geo},
          {"rho_in_gamma", h.rho_in_gamma},
          {"verdicts", verdicts},
          {"notes", h.notes}};
}

json critical_json(const SurfaceModel& s, const CriticalPointReport& r) {
  return {{"config", config_json(s, r.config)},
          {"value", r.value},
          {"grad_norm", r.grad_norm},
          {"hessian_spectrum", r.hessian_spectrum},
          {"classification", r.classification},
          {"index", r.index},
          {"stable", r.stable},
          {"reason", r.reason},
          {"a_value", r.a_value},
          {"a_sign", r.a_sign}};
}

std::string critical_csv(const SurfaceModel& s, const std::vector<CriticalPointReport>& pts, int N) {
  const bool sphere = s.kind() == SurfaceKind::Sphere;
  std::string out = "index,value,grad_norm,classification,stable,a_sign";
  for (int j = 0; j < N; ++j) {
    out += sphere ? ",lon" : ",u";
    out += std::to_string(j + 1);
    out += sphere ? ",colat" : ",v";
    out += std::to_string(j + 1);
  }
  out += "\n";
  for (size_t i = 0; i < pts.size(); ++i) {
    const auto& r = pts[i];
    out += std::to_string(i) + "," + g17(r.value) + "," + g17(r.grad_norm) + "," + r.classification + "," +
           (r.stable ? "true" : "false") + "," + r.a_sign;
    for (const auto& x : r.config.xi) {
      auto c = s.to_chart(x);
      out += "," + g17(c[0]) + "," + g17(c[1]);
    }
    out += "\n";
  }
  return out;
}

std::vector<CriticalPointReport> search(const ProblemData& d, const RunConfig& cfg, const SearchConfig& sc) {
  const std::string mode = cfg.doc["search"]["mode"];
  SearchMode m = mode == "min" ? SearchMode::Min : mode == "max" ? SearchMode::Max : SearchMode::Any;
  return find_critical_points(d, sc, m);
}

}  // namespace

RunOutput run_command(const std::string& command, const RunConfig& cfg, const RunOptions& opt) {
  static const std::set<std::string> commands{"analyze", "landscape", "search", "minmax", "verify", "classes"};
  if (!commands.count(command)) fail(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
  const auto t0 = std::chrono::steady_clock::now();

  RunConfig eff = cfg;
  if (opt.seed) eff.doc["search"]["seed"] = *opt.seed;
  if (opt.tol) {
    if (!(*opt.tol > 0)) fail(ErrorCode::SemanticError, "--tol must be positive");
    eff.doc["search"]["grad_tol"] = *opt.tol;
  }
  ProblemData d = build_problem(eff);
  const SurfaceModel& s = *d.surface;
  SearchConfig sc = search_config(eff);

  RunOutput out;
  json rep;
  rep["command"] = command;
  rep["version"] = SLL_VERSION_STRING;
  rep["config"] = eff.doc;
  rep["config_hash"] = config_hash(eff);
  rep["warnings"] = eff.warnings;

  if (command == "analyze") {
    const json& h = eff.doc["hypotheses"];
    rep["hypotheses"] = hypotheses_json(s, hypotheses(d, h["n1"], h["n2"]));
  } else if (command == "landscape") {
    const json& L = eff.doc["landscape"];
    Configuration fixed = config_from(s, L["fixed"]);
    if (fixed.size() != d.N - 1)
      fail(ErrorCode::SemanticError, "/landscape/fixed: expected N - 1 = " + std::to_string(d.N - 1) + " points");
    const int n1 = L["n1"], n2 = L["n2"];
    const bool sphere = s.kind() == SurfaceKind::Sphere;
    std::string csv = sphere ? "lon,colat,psi,phi,a\n" : "u,v,psi,phi,a\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double best = -std::numeric_limits<double>::infinity();
    json best_at = nullptr;
    long defined = 0;
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) {
        double c1, c2;
        if (sphere) {
          c1 = 2 * kPi * j / n2;
          c2 = kPi * (i + 0.5) / n1;
        } else {
          c1 = s.period_a() * i / n1;
          c2 = s.period_b() * j / n2;
        }
        Configuration xi;
        xi.xi.push_back(s.from_chart(c1, c2));
        for (const auto& x : fixed.xi) xi.xi.push_back(x);
        double p = nan, f = nan, a = nan;
        if (domain_flags(d, xi).in_M_plus) {
          p = psi(d, xi);
          f = phi(d, xi);
          a = a_fun(d, xi);
          ++defined;
          if (p > best) {
            best = p;
            best_at = json::array({c1, c2});
          }
        }
        csv += g17(c1) + "," + g17(c2) + "," + g17(p) + "," + g17(f) + "," + g17(a) + "\n";
      }
    rep["landscape"] = {{"rows", n1 * n2}, {"defined", defined}, {"psi_max", defined ? json(best) : json(nullptr)},
                        {"psi_argmax", best_at}, {"file", "landscape.csv"}};
    out.artifacts.push_back({"landscape.csv", csv});
  } else if (command == "search") {
    auto pts = search(d, eff, sc);
    json arr = json::array();
    for (const auto& r : pts) arr.push_back(critical_json(s, r));
    rep["critical_points"] = arr;
    out.artifacts.push_back({"critical_points.csv", critical_csv(s, pts, d.N)});
    if (pts.empty()) out.exit_code = 2;
  } else if (command == "minmax") {
    const json& m = eff.doc["minmax"];
    sc.M = m["M"];
    MinMaxSetup st = build_retraction(d, parse_case(m["case"]), sc);
    MinMaxResult r = approx_minmax(d, st, sc);
    rep["minmax"] = {{"case", m["case"]},
                     {"M", st.M},
                     {"curve_samples", st.curve_samples},
                     {"base", config_json(s, st.base)},
                     {"split", st.split},
                     {"notes", st.notes},
                     {"psi_star", r.psi_star},
                     {"witness", config_json(s, r.witness)},
                     {"min_boundary", std::isfinite(r.min_boundary) ? json(r.min_boundary) : json(nullptr)},
                     {"boundary_gap", std::isfinite(r.boundary_gap) ? json(r.boundary_gap) : json(nullptr)},
                     {"gap_positive", r.boundary_gap > 0},
                     {"min_identity", r.min_identity},
                     {"samples", r.samples},
                     {"boundary_samples", r.boundary_samples},
                     {"b_in_D", r.b_in_D},
                     {"intersection_found", r.intersection_found},
                     {"intersection_distance", r.intersection_distance},
                     {"psi_star_history", r.psi_star_history}};
  } else if (command == "verify") {
    const json& v = eff.doc["verify"];
    Configuration centers;
    std::string source;
    if (!v["centers"].is_null()) {
      centers = config_from(s, v["centers"]);
      source = "config";
    } else {
      auto pts = search(d, eff, sc);
      json arr = json::array();
      for (const auto& r : pts) arr.push_back(critical_json(s, r));
      rep["critical_points"] = arr;
      out.artifacts.push_back({"critical_points.csv", critical_csv(s, pts, d.N)});
      for (const auto& r : pts)
        if (r.stable) {
          centers = r.config;
          break;
        }
      source = "search";
    }
    if (centers.size() == 0) {
      rep["verify"] = {{"source", source}, {"centers", nullptr}, {"sweep", json::array()}};
      out.exit_code = 2;
    } else {
      const double rho = v["rho"].is_null() ? 8 * kPi * d.N : v["rho"].get<double>();
      json sweep = json::array();
      for (const auto& dv : v["delta_sweep"]) {
        double delta = dv;
        std::vector<double> scales = v["scales"] == "balanced" ? balanced_scales(d, centers, delta)
                                                               : std::vector<double>(d.N, delta);
        BubbleAnsatz b = assemble_bubble(d, centers, scales);
        ResidualReport r = pde_residual(d, b, rho, v["ball_radius"]);
        sweep.push_back({{"delta", delta},
                         {"scales", scales},
                         {"r_c", b.r_c},
                         {"masses", r.masses},
                         {"total_mass", r.total_mass},
                         {"z", r.z},
                         {"l2_residual", r.l2_residual},
                         {"dual_residual", r.dual_residual},
                         {"j_rho", r.j_rho},
                         {"gauss_bonnet_gap", std::isfinite(r.gauss_bonnet_gap) ? json(r.gauss_bonnet_gap) : json(nullptr)}});
      }
      rep["verify"] = {{"source", source}, {"centers", config_json(s, centers)}, {"rho", rho}, {"sweep", sweep}};
    }
  } else {  // classes
    const json& c = eff.doc["classes"];
    if (c["xi_bar"].is_null()) fail(ErrorCode::SemanticError, "/classes/xi_bar: required for the classes command");
    Configuration xb = config_from(s, c["xi_bar"]);
    double hi = c["alpha_sup"].is_null() ? 2.0 * d.N : c["alpha_sup"].get<double>();
    std::string sign = c["sign"];
    ClassCertificate cc = class_membership(d, xb, c["r"], c["alpha_star"], hi, sign[0], c["seed"].get<std::uint64_t>(),
                                           c["starts"]);
    rep["classes"] = {{"sign", sign},
                      {"r", cc.r},
                      {"alpha_box", {c["alpha_star"], hi}},
                      {"positivity_min", cc.positivity_min},
                      {"positivity_ok", cc.positivity_ok},
                      {"M", cc.M},
                      {"m", cc.m},
                      {"log_lhs", cc.log_lhs},
                      {"log_rhs", cc.log_rhs},
                      {"gap_margin", cc.gap_margin},
                      {"gap_status", cc.gap_status},
                      {"laplacian_extreme", cc.laplacian_extreme},
                      {"laplacian_margin", cc.laplacian_margin},
                      {"laplacian_ok", cc.laplacian_ok},
                      {"verdict", cc.verdict}};
  }
  rep["exit_code"] = out.exit_code;
  if (opt.timings)
    rep["timings"] = {{"total_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  out.report = rep.dump(2) + "\n";
  return out;
}

}  // namespace sll
