#include <doctest.h>

#include "oracles.hpp"

using namespace sll;
using oracle::pi;

TEST_SUITE("surface") {

TEST_CASE("distance examples") {
  auto S = SurfaceModel::sphere(32, 64);
  SurfacePoint n = S->point({0, 0, 1}), s = S->point({0, 0, -1});
  CHECK(S->distance(n, s) == doctest::Approx(pi).epsilon(1e-15));
  CHECK(S->distance(n, n) == 0.0);

  auto T = SurfaceModel::torus(1, 1, 32, 32);
  SurfacePoint a = T->point({0.1, 0.1, 0}), b = T->point({0.9, 0.9, 0});
  CHECK(T->distance(a, b) == doctest::Approx(oracle::torus_distance(1, 1, 0.1, 0.1, 0.9, 0.9)).epsilon(1e-14));
  CHECK(T->distance(a, b) == doctest::Approx(std::sqrt(0.08)).epsilon(1e-12));

  std::mt19937_64 rng(5);
  auto T2 = SurfaceModel::torus(1.3, 0.7, 32, 32);
  for (int k = 0; k < 50; ++k) {
    auto x = oracle::random_point(*T2, rng), y = oracle::random_point(*T2, rng);
    CHECK(T2->distance(x, y) == doctest::Approx(oracle::torus_distance(1.3, 0.7, x.p.x, x.p.y, y.p.x, y.p.y)).epsilon(1e-13));
    CHECK(T2->distance(x, y) == T2->distance(y, x));
  }
}

TEST_CASE("points are normalized on construction") {
  auto S = SurfaceModel::sphere(16, 32);
  CHECK(norm(S->point({3, 4, 12}).p) == doctest::Approx(1.0).epsilon(1e-15));
  auto T = SurfaceModel::torus(2, 1, 16, 16);
  auto p = T->point({2.5, -0.25, 0});
  CHECK(p.p.x == doctest::Approx(0.5));
  CHECK(p.p.y == doctest::Approx(0.75));
}

TEST_CASE("quadrature exactness and Euler characteristic") {
  for (auto S : {SurfaceModel::sphere(32, 64), SurfaceModel::torus(1.5, 0.8, 48, 40)}) {
    double w = 0;
    for (auto& q : S->quadrature()) w += q.w;
    CHECK(std::abs(w - S->area()) < 1e-10 * S->area());
  }
  auto S = SurfaceModel::sphere(32, 64);
  CHECK(S->area() == doctest::Approx(4 * pi));
  CHECK(S->euler_characteristic() == 2.0);
  CHECK(SurfaceModel::torus()->euler_characteristic() == 0.0);
  // integral of a nonconstant eigenfunction vanishes
  auto f = S->sample([](const SurfacePoint& x) { return 3 * x.p.z * x.p.z - 1 + x.p.x * x.p.y; });
  CHECK(std::abs(S->integrate(f)) < 1e-8);
}

TEST_CASE("sphere Green's function against the quadrature oracle") {
  auto S = SurfaceModel::sphere(32, 64);
  const double c0 = oracle::sphere_c0();
  CHECK(std::abs(c0 - (2 * std::log(2.0) - 1) / (4 * pi)) < 1e-12);
  CHECK(std::abs(S->robin() - c0) < 1e-8);
  SurfacePoint n = S->point({0, 0, 1}), s = S->point({0, 0, -1});
  CHECK(S->green(n, s) == doctest::Approx(-std::log(2.0) / (2 * pi) + c0).epsilon(1e-12));
  CHECK(S->green(n, s) == doctest::Approx(-0.079578).epsilon(1e-4));
  CHECK_THROWS_AS(S->green(n, n), Error);

  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    auto x = oracle::random_point(*S, rng), p = oracle::random_point(*S, rng);
    if (S->distance(x, p) < 1e-3) continue;
    CHECK(std::abs(S->green(x, p) - S->green(p, x)) < 1e-10);
  }
  // zero mean through the adaptive polar oracle
  auto p = oracle::random_point(*S, rng);
  double mean = oracle::sphere_polar_integral(p.p, [&](const Vec3& x) {
    return std::abs(dot(x, p.p) - 1) < 1e-15 ? 0.0 : S->green(S->point(x), p);
  });
  CHECK(std::abs(mean) < 1e-9);
}

TEST_CASE("green_regular continuity and diagonal") {
  auto S = SurfaceModel::sphere(32, 64);
  SurfacePoint p = S->point({0.3, -0.2, 0.9});
  CHECK(S->green_regular(p, p) == doctest::Approx(S->robin()).epsilon(1e-14));
  auto fr = S->frame(p);
  // h(x,p) - h(p,p) decays quadratically; Richardson from d = 1e-4, 1e-5 recovers the diagonal
  std::vector<double> diff;
  for (double d : {0.1, 0.05, 0.025}) diff.push_back(S->green_regular(S->exp(p, fr.e1 * d), p) - S->robin());
  CHECK(diff[0] / diff[1] == doctest::Approx(4.0).epsilon(0.01));
  CHECK(diff[1] / diff[2] == doctest::Approx(4.0).epsilon(0.01));
  auto h_at = [&](double d) { return S->green(S->exp(p, fr.e1 * d), p) + std::log(d) / (2 * pi); };
  double rich = (100 * h_at(1e-5) - h_at(1e-4)) / 99;
  CHECK(std::abs(rich - S->robin()) < 1e-9);
  const double d = 0.3;
  CHECK(S->green_regular(S->exp(p, fr.e2 * d), p) ==
        doctest::Approx(-std::log(2 * std::sin(d / 2) / d) / (2 * pi) + S->robin()).epsilon(1e-12));

  auto T = SurfaceModel::torus(1, 1, 32, 32);
  auto q = T->point({0.4, 0.7, 0});
  auto tf = T->frame(q);
  double t1 = T->green_regular(T->exp(q, tf.e1 * 0.01), q) - T->green_regular(q, q);
  double t2 = T->green_regular(T->exp(q, tf.e1 * 0.005), q) - T->green_regular(q, q);
  CHECK(t1 / t2 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("torus Green's function matches the row-sum oracle") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{1.4, 0.8}}) {
    auto T = SurfaceModel::torus(a, b, 32, 32);
    for (int k = 0; k < 10; ++k) {
      auto x = oracle::random_point(*T, rng), p = oracle::random_point(*T, rng);
      CHECK(std::abs(T->green(x, p) - oracle::torus_green_rows(a, b, x.p.x - p.p.x, x.p.y - p.p.y)) < 1e-10);
      // translation invariance
      double tu = u(rng), tv = u(rng);
      auto xs = T->point({x.p.x + tu, x.p.y + tv, 0}), ps = T->point({p.p.x + tu, p.p.y + tv, 0});
      CHECK(std::abs(T->green(xs, ps) - T->green(x, p)) < 1e-11);
      CHECK(std::abs(T->green(x, p) - T->green(p, x)) < 1e-11);
    }
  }
}

TEST_CASE("grad_green: finite differences, antipodes, rotations") {
  std::mt19937_64 rng(3);
  for (auto S : {SurfaceModel::sphere(16, 32), SurfaceModel::torus(1.2, 0.9, 16, 16)}) {
    for (int k = 0; k < 100; ++k) {
      auto x = oracle::random_point(*S, rng), p = oracle::random_point(*S, rng);
      if (S->distance(x, p) < 0.05) continue;
      Vec3 g = S->grad_green(x, p);
      auto fr = S->frame(x);
      auto G = [&](const SurfacePoint& y) { return S->green(y, p); };
      double f1 = oracle::directional_fd(*S, G, x, fr.e1), f2 = oracle::directional_fd(*S, G, x, fr.e2);
      double err = std::hypot(dot(g, fr.e1) - f1, dot(g, fr.e2) - f2);
      CHECK(err < 1e-6 * std::max(1.0, norm(g)));
    }
  }
  auto S = SurfaceModel::sphere(16, 32);
  CHECK(norm(S->grad_green(S->point({0, 0, 1}), S->point({0, 0, -1}))) < 1e-14);

  Eigen::Quaterniond q(0.3, -0.5, 0.7, 0.2);
  q.normalize();
  Eigen::Matrix3d R = q.toRotationMatrix();
  auto rot = [&](const Vec3& v) {
    Eigen::Vector3d w = R * Eigen::Vector3d(v.x, v.y, v.z);
    return Vec3{w[0], w[1], w[2]};
  };
  for (int k = 0; k < 20; ++k) {
    auto x = oracle::random_point(*S, rng), p = oracle::random_point(*S, rng);
    Vec3 lhs = S->grad_green(S->point(rot(x.p)), S->point(rot(p.p)));
    Vec3 rhs = rot(S->grad_green(x, p));
    CHECK(norm(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("weak Green identity on the sphere") {
  auto S = SurfaceModel::sphere(16, 32);
  std::mt19937_64 rng(4);
  for (int l = 1; l <= 5; ++l) {
    auto q = oracle::random_sphere_point(rng), p = oracle::random_sphere_point(rng);
    auto phi = [&](const Vec3& x) { return oracle::legendre(l, dot(x, q.p)); };
    double lhs = oracle::sphere_polar_integral(p.p, [&](const Vec3& x) {
      if (1 - dot(x, p.p) < 1e-15) return 0.0;
      return S->green(S->point(x), p) * l * (l + 1) * phi(x);
    });
    CHECK(std::abs(lhs - phi(p.p)) < 1e-6);  // mean of P_l is 0
  }
}

TEST_CASE("spectral Poisson solver") {
  auto S = SurfaceModel::sphere(32, 64);
  auto zero = S->sample([](const SurfacePoint&) { return 0.0; });
  for (double v : S->solve_poisson(zero).values) CHECK(v == doctest::Approx(0.0));

  auto Y = S->sample([](const SurfacePoint& x) { return x.p.x; });
  auto u = S->solve_poisson(Y);
  for (size_t i = 0; i < u.values.size(); i += 37) CHECK(std::abs(u.values[i] - Y.values[i] / 2) < 1e-12);

  auto bad = S->sample([](const SurfacePoint& x) { return 1.0 + x.p.z; });
  CHECK_THROWS_WITH_AS(S->solve_poisson(bad), doctest::Contains("mean"), Error);

  for (auto M : {SurfaceModel::sphere(32, 64), SurfaceModel::torus(1.0, 2.0, 32, 48)}) {
    std::mt19937_64 rng(9);
    auto q1 = oracle::random_point(*M, rng), q2 = oracle::random_point(*M, rng);
    auto f = M->sample([&](const SurfacePoint& x) {
      if (M->kind() == SurfaceKind::Sphere) return oracle::legendre(3, dot(x.p, q1.p)) + 0.5 * oracle::legendre(2, dot(x.p, q2.p));
      return std::sin(2 * pi * (x.p.x - q1.p.x)) + std::cos(2 * pi * (2 * x.p.y / 2.0 - q2.p.y));
    });
    auto minus_lap = M->laplacian(f);
    for (auto& v : minus_lap.values) v = -v;
    auto back = M->solve_poisson(minus_lap);
    double err = 0;
    for (size_t i = 0; i < f.values.size(); ++i) err = std::max(err, std::abs(back.values[i] - f.values[i]));
    CHECK(err < 1e-8);
    auto spec = M->analyze(f);
    auto spec2 = M->analyze(M->synthesize(spec));
    double cerr = 0, cmax = 0;
    for (size_t i = 0; i < spec.real.size(); ++i) {
      cerr = std::max(cerr, std::abs(spec.real[i] - spec2.real[i]));
      cmax = std::max(cmax, std::abs(spec.real[i]));
    }
    for (size_t i = 0; i < spec.cplx.size(); ++i) {
      cerr = std::max(cerr, std::abs(spec.cplx[i] - spec2.cplx[i]));
      cmax = std::max(cmax, std::abs(spec.cplx[i]));
    }
    CHECK(cerr < 1e-8 * cmax);
  }
}

TEST_CASE("Laplacian examples") {
  auto S = SurfaceModel::sphere(32, 64);
  auto c = S->sample([](const SurfacePoint&) { return 2.5; });
  CHECK(std::abs(laplacian_at(c, S->point({0.2, 0.4, 0.1}))) < 1e-10);
  // -c d^2 near the centre: radial formula and FD stencil both give -4c
  const double cc = 0.7;
  for (double d : {1e-3, 1e-4}) CHECK(laplacian_radial(*S, d, -2 * cc * d, -2 * cc) == doctest::Approx(-4 * cc).epsilon(1e-6));
  auto q = S->point({0, 0, 1});
  auto x = S->exp(q, S->frame(q).e1 * 0.3);
  const double d = 0.3;
  double fd = laplacian_fd(*S, [&](const SurfacePoint& y) { double r = S->distance(y, q); return -cc * r * r; }, x, 1e-4);
  CHECK(fd == doctest::Approx(laplacian_radial(*S, d, -2 * cc * d, -2 * cc)).epsilon(1e-6));

  auto T = SurfaceModel::torus(1.5, 1.0, 64, 48);
  auto f = T->sample([](const SurfacePoint& y) { return std::sin(2 * pi * y.p.x / 1.5); });
  auto y = T->point({0.37, 0.61, 0});
  double expect = -std::pow(2 * pi / 1.5, 2) * std::sin(2 * pi * 0.37 / 1.5);
  CHECK(laplacian_at(f, y) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("exponential map") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (auto S : {SurfaceModel::sphere(16, 32), SurfaceModel::torus(1, 2, 16, 16)}) {
    for (int k = 0; k < 100; ++k) {
      auto x = oracle::random_point(*S, rng);
      auto fr = S->frame(x);
      Vec3 v = fr.e1 * (0.3 * g(rng)) + fr.e2 * (0.3 * g(rng));
      if (norm(v) > 0.9 * S->injectivity_radius()) continue;
      auto y = S->exp(x, v);
      CHECK(S->distance(x, y) == doctest::Approx(norm(v)).epsilon(1e-10));
      CHECK(norm(S->log(x, y) - v) < 1e-10);
    }
    auto x = oracle::random_point(*S, rng);
    CHECK(S->exp(x, Vec3{}) == x);
    CHECK_THROWS_AS(S->exp(x, S->frame(x).e1 * (1.01 * S->injectivity_radius())), Error);
  }
}

}  // TEST_SUITE
