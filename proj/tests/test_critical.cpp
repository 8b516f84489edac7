#include <doctest.h>

#include "oracles.hpp"

using namespace sll;
using oracle::pi;

namespace {

SurfaceRef sphere() {
  static SurfaceRef s = SurfaceModel::sphere(48, 96);
  return s;
}

}  // namespace

TEST_SUITE("critical_search") {

TEST_CASE("one point per positive component") {
  auto S = sphere();
  auto d = make_problem(S, expression_field(S, "z^2 - 0.25"), {}, 2);
  SearchConfig cfg;
  cfg.multistarts = 4;
  auto r = find_critical_points(d, cfg, SearchMode::Max);
  REQUIRE(!r.empty());
  const auto& best = r.front();
  CHECK(best.classification == "max");
  CHECK(best.stable);
  CHECK(best.grad_norm < 1e-8);
  CHECK(best.config.xi[0].p.z * best.config.xi[1].p.z < 0);
  for (double l : best.hessian_spectrum) CHECK(l < -1e-6);
  for (size_t i = 1; i < r.size(); ++i) CHECK(r[i].value <= r[i - 1].value);
}

TEST_CASE("single point, analytic maximum") {
  auto S = sphere();
  auto q = S->from_chart(1.1, 0.8);
  const double c = 1.7;
  auto d = make_problem(S, exp_field(cos_polar_field(S, q, c)), {}, 1);
  SearchConfig cfg;
  cfg.multistarts = 4;
  auto r = find_critical_points(d, cfg, SearchMode::Max);
  REQUIRE(!r.empty());
  CHECK(S->distance(r[0].config.xi[0], q) < 1e-6);
  CHECK(r[0].value == doctest::Approx(S->robin() + c / (4 * pi)).epsilon(1e-12));
  // dense grid oracle: no node beats the reported value
  auto g = S->tensor_grid(200, 400);
  double best = -INFINITY;
  for (auto& x : g.points) best = std::max(best, psi(d, Configuration{{x}}));
  CHECK(best <= r[0].value + 1e-14);
  CHECK(r[0].value - best < 1e-3);
}

TEST_CASE("permuted starts collapse to one report") {
  auto S = sphere();
  auto d = make_problem(S, expression_field(S, "z^2 - 0.25"), {}, 2);
  SearchConfig cfg;
  cfg.multistarts = 0;
  Configuration a{{S->from_chart(0.2, 0.3), S->from_chart(2.0, 2.8)}};
  Configuration b{{a.xi[1], a.xi[0]}};
  auto r = find_critical_points(d, cfg, SearchMode::Max, {a, b});
  int near_poles = 0;
  for (auto& c : r)
    if (std::abs(std::abs(c.config.xi[0].p.z) - 1) < 1e-6) ++near_poles;
  CHECK(near_poles == 1);
  CHECK(same_up_to_permutation(*S, a, b));
  CHECK_FALSE(same_up_to_permutation(*S, a, Configuration{{a.xi[0], S->from_chart(2.0, 2.7)}}));
}

TEST_CASE("classification rules") {
  auto S = sphere();
  auto north = Configuration{{S->point({0, 0, 1})}};
  // log K = x^2 - y^2/2: nondegenerate saddle at the poles
  auto saddle = classify(make_problem(S, expression_field(S, "exp(x^2 - 0.5*y^2)"), {}, 1), north);
  CHECK(saddle.classification == "saddle");
  CHECK(saddle.index == 1);
  CHECK(saddle.stable);

  auto mx = classify(make_problem(S, expression_field(S, "exp(-x^2 - y^2)"), {}, 1), north);
  CHECK(mx.classification == "max");
  CHECK(mx.stable);

  // -x^2 + y^3: kernel direction with odd behaviour
  auto deg = classify(make_problem(S, expression_field(S, "exp(-x^2 + y^3)"), {}, 1), north);
  CHECK(deg.classification == "degenerate");
  CHECK_FALSE(deg.stable);
  CHECK(deg.reason == "undetermined by implemented criteria");

  // two points, constant K: antipodal pairs form a rotation orbit of minima
  auto d2 = make_problem(S, constant_field(1.0), {}, 2);
  auto mn = classify(d2, Configuration{{S->point({0, 0, 1}), S->point({0, 0, -1})}});
  CHECK(mn.classification == "min");
  CHECK(mn.stable);
  int zeros = 0;
  for (double l : mn.hessian_spectrum) zeros += std::abs(l) <= 1e-6;
  CHECK(zeros == 2);  // the orbit of antipodal pairs is a 2-sphere

  CHECK_THROWS_AS(classify(d2, Configuration{{S->point({0, 0, 1}), S->point({1, 0, 0})}}), Error);
}

TEST_CASE("Newton polish keeps a converged point") {
  auto S = sphere();
  auto d = make_problem(S, expression_field(S, "z^2 - 0.25"), {}, 2);
  SearchConfig cfg;
  cfg.multistarts = 2;
  for (auto& r : find_critical_points(d, cfg, SearchMode::Max)) {
    auto p = newton_polish(d, r.config);
    CHECK(std::abs(psi(d, p) - r.value) < 1e-10);
  }
}

TEST_CASE("feasible split agrees with exhaustive enumeration") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.9, 3.5);
  for (int N = 1; N <= 6; ++N)
    for (int l = 0; l <= 6; ++l)
      for (int t = 0; t < 10; ++t) {
        std::vector<double> a(l);
        std::vector<int> cap(l);
        for (int i = 0; i < l; ++i) {
          a[i] = t % 3 == 0 ? std::round(u(rng)) : u(rng);
          cap[i] = std::max(0, 1 + oracle::floor_minus(a[i]));
        }
        auto s = feasible_split(N, a);
        CHECK(s.has_value() == oracle::split_exists(N, cap));
        if (s) {
          int total = 0;
          for (int i = 0; i < l; ++i) {
            CHECK((*s)[i] >= 0);
            CHECK((*s)[i] <= cap[i]);
            total += (*s)[i];
          }
          CHECK(total == N);
        }
      }
  CHECK_FALSE(feasible_split(2, {0.5}).has_value());
}

TEST_CASE("contractible circles") {
  auto S = sphere();
  auto K = cos_polar_field(S, S->point({0, 0, 1}));
  SingularData sd{{S->from_chart(0, 0.6), S->from_chart(pi, 0.6)}, {0.9, 0.9}};
  auto d = make_problem(S, K, sd, 2);
  SearchConfig cfg;
  auto st = build_retraction(d, RetractionCase::ContractibleCircles, cfg);
  CHECK(st.split == std::vector<int>{1, 1});
  REQUIRE(st.curves.size() == 2);
  CHECK(st.in_open_set(*S, st.base));
  CHECK(domain_flags(d, st.base).in_M_plus);
  for (const auto& c : st.curves) {
    CHECK(c.source >= 0);
    for (int k = 0; k < 16; ++k) {
      auto x = c.at(k / 16.0);
      CHECK(S->distance(c.project(x), x) < 1e-12);
      CHECK(S->distance(x, d.sing.points[c.source]) == doctest::Approx(c.radius).epsilon(1e-10));
    }
    auto p = d.sing.points[c.source];
    for (int k = 0; k < 16; ++k) {
      auto y = S->exp(p, S->frame(p).e1 * (0.05 + 0.01 * k));
      auto once = c.project(y);
      CHECK(S->distance(c.project(once), once) < 1e-12);
    }
  }

  SingularData one{{S->from_chart(0, 0.6)}, {0.5}};
  auto d1 = make_problem(S, K, one, 2);
  ErrorCode code = ErrorCode::Ok;
  try {
    build_retraction(d1, RetractionCase::ContractibleCircles, cfg);
  } catch (const Error& e) {
    code = e.code();
  }
  CHECK(code == ErrorCode::NoFeasibleSplit);
}

TEST_CASE("loop retractions") {
  auto S = sphere();
  auto band = make_problem(S, expression_field(S, "0.25 - z^2"), {}, 1);
  SearchConfig cfg;
  auto ray = build_retraction(band, RetractionCase::RayGenus0, cfg);
  REQUIRE(ray.curves.size() == 1);
  for (int k = 0; k < 12; ++k) {
    auto x = ray.curves[0].at(k / 12.0);
    CHECK(band.K->value(x) > 0);
    CHECK(S->distance(ray.curves[0].project(x), x) < 1e-12);
  }
  auto cap = make_problem(S, cos_polar_field(S, S->point({0, 0, 1})), {}, 1);
  CHECK_THROWS_AS(build_retraction(cap, RetractionCase::RayGenus0, cfg), Error);
  CHECK_THROWS_AS(build_retraction(cap, RetractionCase::TorusCurve, cfg), Error);

  auto T = SurfaceModel::torus(1, 1, 32, 32);
  auto tb = make_problem(T, fourier_field(T, 0.3, {{1, 0, 1.0, 0.0}}), {}, 2);
  auto tc = build_retraction(tb, RetractionCase::TorusCurve, cfg);
  REQUIRE(tc.curves.size() == 2);
  for (int k = 0; k < 12; ++k) {
    auto x = tc.curves[0].at(k / 12.0);
    CHECK(tb.K->value(x) > 0);
    auto once = tc.curves[0].project(x);
    CHECK(T->distance(tc.curves[0].project(once), once) < 1e-12);
  }
}

TEST_CASE("min-max: identity family and monotone history") {
  auto S = SurfaceModel::sphere(32, 64);
  auto K = cos_polar_field(S, S->point({0, 0, 1}));
  SingularData sd{{S->point({0, 0, 1}), S->from_chart(pi, 1.1)}, {1.5, 0.9}};
  auto d = make_problem(S, K, sd, 2);
  SearchConfig cfg;
  cfg.M = 50;
  cfg.curve_samples = 24;
  cfg.minmax_steps = 0;
  auto st = build_retraction(d, RetractionCase::ContractibleCircles, cfg);
  auto r0 = approx_minmax(d, st, cfg);
  CHECK(r0.psi_star == r0.min_identity);
  cfg.minmax_steps = 8;
  auto r = approx_minmax(d, st, cfg);
  CHECK(r.psi_star >= r0.psi_star - 1e-12);
  for (size_t i = 1; i < r.psi_star_history.size(); ++i)
    CHECK(r.psi_star_history[i] >= r.psi_star_history[i - 1] - 1e-12);
  CHECK(r.boundary_gap == doctest::Approx(r.min_boundary - r.psi_star));
  CHECK(r.b_in_D);
}

}  // TEST_SUITE
