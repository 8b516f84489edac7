#include <doctest.h>

#include "oracles.hpp"
#include "sll/verify.hpp"

using namespace sll;
using oracle::pi;

namespace {

SurfaceRef sphere() {
  static SurfaceRef s = SurfaceModel::sphere(64, 128);
  return s;
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("planar bubble mass") {
  for (double delta : {0.3, 1e-2, 1e-3}) {
    // r = delta tan(theta) maps [0, pi/2) onto [0, inf)
    double m = oracle::integrate(
        [&](double th) {
          double r = delta * std::tan(th), dr = delta / std::pow(std::cos(th), 2);
          return std::exp(bubble_profile(delta, r)) * 2 * pi * r * dr;
        },
        0, pi / 2 - 1e-12);
    CHECK(m == doctest::Approx(8 * pi).epsilon(1e-9));
    const double rc = 0.25;
    double part = oracle::integrate([&](double r) { return std::exp(bubble_profile(delta, r)) * 2 * pi * r; }, 0, rc);
    CHECK(part == doctest::Approx(8 * pi * rc * rc / (delta * delta + rc * rc)).epsilon(1e-10));
  }
}

TEST_CASE("far field equals the Green's function sum") {
  auto S = sphere();
  auto d = make_problem(S, constant_field(1.0), {}, 2);
  Configuration xi{{S->from_chart(0.2, 0.7), S->from_chart(2.9, 2.0)}};
  std::mt19937_64 rng(1);
  for (double delta : {1e-2, 1e-3}) {
    auto b = assemble_bubble(d, xi, {delta, delta});
    int tested = 0;
    while (tested < 50) {
      auto x = oracle::random_sphere_point(rng);
      if (S->distance(x, xi.xi[0]) < 2 * b.r_c || S->distance(x, xi.xi[1]) < 2 * b.r_c) continue;
      double g = 8 * pi * (S->green(x, xi.xi[0]) + S->green(x, xi.xi[1]));
      CHECK(std::abs(b.value(x) - g) < 1e-11);
      ++tested;
    }
  }
}

TEST_CASE("concentration") {
  auto S = sphere();
  auto d = make_problem(S, constant_field(1.0), {}, 1);
  Configuration xi{{S->point({0, 0, 1})}};
  auto b = assemble_bubble(d, xi, {1e-2});
  auto m = concentration_measure(d, b, 1.0, 0.2);
  CHECK(m.masses[0] >= 0.99);
  CHECK(m.total == doctest::Approx(1.0).epsilon(1e-12));

  auto d2 = make_problem(S, constant_field(1.0), {}, 2);
  Configuration two{{S->point({0, 0, 1}), S->point({0, 0, -1})}};
  auto b2 = assemble_bubble(d2, two, {1e-3, 1e-3});
  auto m2 = concentration_measure(d2, b2, 16 * pi, 0.3);
  for (double mass : m2.masses) CHECK(mass == doctest::Approx(8 * pi).epsilon(0.02));
  CHECK(std::abs(m2.total - 16 * pi) < 1e-9 * 16 * pi);

  // K~ -> c K~ leaves the masses unchanged
  auto d3 = make_problem(S, constant_field(7.5), {}, 2);
  auto m3 = concentration_measure(d3, assemble_bubble(d3, two, {1e-3, 1e-3}), 16 * pi, 0.3);
  for (int j = 0; j < 2; ++j) CHECK(m3.masses[j] == doctest::Approx(m2.masses[j]).epsilon(1e-12));

  Configuration close{{S->from_chart(0, 0.3), S->from_chart(0, 0.7)}};
  auto bc = assemble_bubble(d2, close, {1e-3, 1e-3});
  CHECK_THROWS_AS(concentration_measure(d2, bc, 16 * pi, 0.3), Error);
}

TEST_CASE("masses approach 8 pi along a decreasing scale sweep") {
  auto S = sphere();
  auto d = make_problem(S, cos_polar_field(S, S->point({0, 0, 1})), {}, 1);
  Configuration xi{{S->point({0, 0, 1})}};
  double prev = INFINITY;
  for (double delta : {0.05, 0.02, 0.01, 1e-3}) {
    auto m = concentration_measure(d, assemble_bubble(d, xi, {delta}), 8 * pi, 0.3);
    double err = std::abs(m.masses[0] - 8 * pi);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("assembly errors") {
  auto S = sphere();
  auto d = make_problem(S, cos_polar_field(S, S->point({0, 0, 1})), {}, 1);
  CHECK_THROWS_AS(assemble_bubble(d, Configuration{{S->point({0, 0, -1})}}, {1e-3}), Error);
  CHECK_THROWS_AS(assemble_bubble(d, Configuration{{S->point({0, 0, 1})}}, {0.5}), Error);
  CHECK_THROWS_AS(assemble_bubble(d, Configuration{{S->point({0, 0, 1})}}, {-1e-3}), Error);
}

TEST_CASE("manufactured solution") {
  for (auto S : {SurfaceModel::sphere(32, 64), SurfaceModel::torus(1.2, 0.9, 48, 40)}) {
    const double rho = 20.0;
    auto v0 = S->sample([&](const SurfacePoint& x) {
      if (S->kind() == SurfaceKind::Sphere) return 0.3 * x.p.x * x.p.z + 0.2 * x.p.y;
      return 0.1 * std::sin(2 * pi * x.p.x / 1.2) + 0.05 * std::cos(2 * pi * 2 * x.p.y / 0.9);
    });
    auto lap = S->laplacian(v0);
    ScalarField kt{S, {}};
    for (size_t i = 0; i < v0.values.size(); ++i) {
      double rhs = -lap.values[i] + rho / S->area();
      REQUIRE(rhs > 0);
      kt.values.push_back(3.0 * rhs * std::exp(-v0.values[i]));
    }
    auto r = pde_residual_grid(v0, kt, rho);
    CHECK(r.l2_residual < 1e-8);
    CHECK(r.dual_residual < 1e-8);
  }
}

TEST_CASE("residual report and J invariance") {
  auto S = sphere();
  auto d = make_problem(S, cos_polar_field(S, S->point({0, 0, 1})), {}, 1);
  Configuration xi{{S->point({0, 0, 1})}};
  std::vector<double> l2;
  for (double delta : {0.05, 0.02, 0.01}) {
    auto b = assemble_bubble(d, xi, {delta});
    auto r = pde_residual(d, b, 8 * pi, 0.3);
    l2.push_back(r.dual_residual);
    CHECK(std::abs(r.total_mass - 8 * pi) < 1e-9 * 8 * pi);
    double j = j_rho(d, b, 8 * pi), js = j_rho(d, b, 8 * pi, 2.5);
    CHECK(std::abs(js - j) < 1e-9 * (1 + std::abs(j)));
    CHECK(r.j_rho == doctest::Approx(j).epsilon(1e-12));
  }
  CHECK(l2[1] < l2[0]);
  CHECK(l2[2] < l2[1]);
}

TEST_CASE("Gauss-Bonnet balance") {
  auto S = sphere();
  SingularData sd{{S->point({0, 0, -1})}, {-0.25}};
  auto d = make_problem(S, cos_polar_field(S, S->point({0, 0, 1})), sd, 1);
  auto b = assemble_bubble(d, Configuration{{S->point({0, 0, 1})}}, {0.05});
  auto g = gauss_bonnet_check(d, b);
  CHECK(g.target == doctest::Approx(4 * pi * 1.75));
  CHECK(g.gap < 1e-3 * g.target);
  CHECK(g.gap == doctest::Approx(std::abs(g.integral - g.target)).epsilon(1e-12));

  auto T = SurfaceModel::torus(1, 1, 32, 32);
  auto dt = make_problem(T, fourier_field(T, 0.5, {{1, 0, 1.0, 0.0}}), {}, 1);
  auto bt = assemble_bubble(dt, Configuration{{T->point({0, 0.5, 0})}}, {1e-2});
  CHECK_THROWS_AS(gauss_bonnet_check(dt, bt), Error);
}

}  // TEST_SUITE
