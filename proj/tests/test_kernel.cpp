// Kernel line integrals: the unit-mass bump, quadratic support solving, the
// straight-line closed form with its magnitude bound, and the single-atom
// divergence identity that everything downstream depends on.

#include <catch2/catch_amalgamated.hpp>

#include "divsolve/experiment.hpp"

using namespace divsolve;

namespace {

struct BallSetup {
  DomainPair pair;
  CubeComplex cx;
  std::unique_ptr<PathSystem> sys;
  std::unique_ptr<KernelContext> kc;

  BallSetup() {
    const CsgShape omega(CsgNode::ball(Vec(0.0, 0.0), 1.0), 2);
    pair = DomainPair::normalize(omega, omega, Vec(0.0, 0.0));
    cx = decompose(pair, 0.05);
    sys = std::make_unique<PathSystem>(pair, cx);
    kc = std::make_unique<KernelContext>(pair);
  }
};

}  // namespace

TEST_CASE("bump has unit mass, compact support, and a consistent gradient") {
  const Bump chi(Vec(0.0, 0.0), 2);

  // midpoint quadrature of the radial profile over the unit ball
  const int g = 400;
  const double h = 2.0 / g;
  double mass = 0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const Vec p(-1 + (i + 0.5) * h, -1 + (j + 0.5) * h);
      mass += chi.eval(p) * h * h;
    }
  CHECK(mass == Catch::Approx(1.0).epsilon(1e-4));

  CHECK(chi.eval(Vec(1.0, 0.0)) == 0.0);
  CHECK(chi.eval(Vec(0.8, 0.8)) == 0.0);
  CHECK(norm(chi.grad(Vec(0.99, 0.0))) < 1e-6);
  CHECK(chi.eval(Vec(0.0, 0.0)) == Catch::Approx(chi.sup_norm()));

  // finite differences against the analytic gradient
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const Vec p = rng.point_in_box(Vec(-0.9, -0.9), Vec(0.9, 0.9));
    const double eps = 1e-6;
    const Vec g0 = chi.grad(p);
    for (int d = 0; d < 2; ++d) {
      Vec lo = p, hi = p;
      lo[d] -= eps;
      hi[d] += eps;
      const double fd = (chi.eval(hi) - chi.eval(lo)) / (2 * eps);
      CHECK(g0[d] == Catch::Approx(fd).margin(1e-5));
    }
  }
}

TEST_CASE("quadratic positivity regions match a brute-force scan") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double A = rng.uniform(-2, 2), B = rng.uniform(-2, 2),
                 C = rng.uniform(-2, 2);
    std::vector<std::pair<double, double>> out;
    detail::positive_region(A, B, C, 0.0, 1.0, out);
    for (size_t i = 0; i + 1 < out.size(); ++i) CHECK(out[i].second <= out[i + 1].first);
    for (int i = 0; i <= 1000; ++i) {
      const double t = i / 1000.0;
      const double v = (A * t + B) * t + C;
      bool inside = false;
      for (const auto& [a, b] : out) inside = inside || (t >= a && t <= b);
      if (v > 1e-6) CHECK(inside);
      if (v < -1e-6) CHECK_FALSE(inside);
    }
  }
}

TEST_CASE("straight paths use the closed-form branch under the floor bound") {
  BallSetup b;
  const Vec y(3.0, 3.0);  // |y - x0| strictly below half the clearance
  const Vec x(0.3, 0.5);  // near the latter part of the segment
  const KernelEval ev = kernel_G(*b.sys, *b.kc, x, y);

  CHECK(ev.case_id == 2);
  CHECK(ev.claim_violations == 0);
  REQUIRE_FALSE(ev.support.empty());
  for (const auto& si : ev.support) {
    CHECK(si.form == 2);
    // support floor: the tube can only meet x beyond c_floor * |x-y|
    CHECK(si.a >= b.kc->c_floor * dist(x, y) * (1 - 1e-9));
  }
  CHECK(norm(ev.value) <=
        straight_case_bound(*b.kc, 2, dist(x, y)) * (1 + 1e-9));
  CHECK(dist(ev.value, ev.near_part + ev.far_part) < 1e-15);

  CHECK_THROWS_AS(kernel_G(*b.sys, *b.kc, y, y), DiagonalEvaluation);
}

TEST_CASE("crossing-case evaluations split cleanly into near and far parts") {
  BallSetup b;
  const Vec y(11.0, 0.0);  // beyond the straight-shortcut radius
  const Polyline pl = b.sys->path(y);
  const PathParam par = make_param(*b.sys, pl, y);
  REQUIRE(par.case_id() == 1);

  Rng rng(7);
  int nonzero = 0;
  for (int k = 0; k < 30; ++k) {
    // probe inside the tube: offset from the path by a fraction of the local
    // radius, perpendicular to the direction of travel
    const double t = rng.uniform(0.2, 0.95);
    const Vec v = par.velocity(t);
    Vec perp(-v[1], v[0]);
    perp = (1.0 / norm(perp)) * perp;
    const Vec x = par.point(t) + (0.3 * par.rho(t)) * perp;
    if (!b.pair.in_omega(x) || dist(x, y) < 1e-3) continue;
    const KernelEval ev = kernel_eval(*b.kc, par, x);
    CHECK(ev.claim_violations == 0);
    CHECK(dist(ev.value, ev.near_part + ev.far_part) < 1e-12);
    REQUIRE_FALSE(ev.support.empty());
    if (norm(ev.value) > 0) ++nonzero;
  }
  CHECK(nonzero > 20);
}

TEST_CASE("single-atom kernel satisfies the divergence identity") {
  // for one unit atom at y the field G(.,y) must satisfy, for smooth phi,
  //   integral grad(phi) . G dx = integral phi chi dx - phi(y)
  BallSetup b;
  const Vec y = b.pair.map_to_normalized(Vec(1.0 / 3, 0.0));
  const Polyline pl = b.sys->path(y);
  const PathParam par = make_param(*b.sys, pl, y);

  const OmegaQuadrature quad(b.pair.omega, 64, {y});
  const double sc = b.pair.cover.bbox_diameter();
  const std::vector<TestFunction> phis = {
      testfn::gaussian(Vec(0.07 * sc, -0.03 * sc), 0.17 * sc),
      testfn::coordinate(0, 2)};
  for (const auto& phi : phis) {
    double lhs = 0, rhs = -phi.f(y), sup = 0;
    for (size_t i = 0; i < quad.size(); ++i) {
      const Vec& p = quad.pts[i];
      sup = std::max(sup, std::abs(phi.f(p)));
      rhs += phi.f(p) * b.kc->bump.eval(p) * quad.wts[i];
      if (dist(p, y) < 1e-12) continue;
      lhs += dot(phi.grad(p), kernel_eval(*b.kc, par, p).value) * quad.wts[i];
    }
    CHECK(lhs == Catch::Approx(rhs).margin(0.02 * sup));
  }
}
