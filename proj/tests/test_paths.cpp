// Path family: straight shortcuts, tree routing, collinear merging, the
// radius profile with its 1/5 slope cap, and the clearance-walk table.

#include <catch2/catch_amalgamated.hpp>

#include "divsolve/experiment.hpp"

using namespace divsolve;

namespace {

struct BallSetup {
  DomainPair pair;
  CubeComplex cx;
  std::unique_ptr<PathSystem> sys;

  BallSetup() {
    const CsgShape omega(CsgNode::ball(Vec(0.0, 0.0), 1.0), 2);
    pair = DomainPair::normalize(omega, omega, Vec(0.0, 0.0));
    cx = decompose(pair, 0.05);
    sys = std::make_unique<PathSystem>(pair, cx);
  }
};

struct CombSetup {
  CombLayout L = comb_layout(6, 0.1);
  DomainPair pair;
  CubeComplex cx;
  std::unique_ptr<PathSystem> sys;

  CombSetup() {
    const CsgShape comb(comb_domain_node(L), 2);
    pair = DomainPair::normalize(comb, comb, Vec(0.5, 0.55));
    cx = decompose(pair, 0.02);
    sys = std::make_unique<PathSystem>(pair, cx);
  }

  // physical point mapped into the working frame
  Vec at(double x, double y) const {
    return pair.map_to_normalized(Vec(x, y));
  }
};

}  // namespace

TEST_CASE("near-base points get the straight segment") {
  BallSetup b;
  const Vec y(3.0, 4.0);  // |y| = 5 <= d_hat(y)/2 = (15-5)/2
  const Polyline pl = b.sys->path(y);
  REQUIRE(pl.v.size() == 2);
  CHECK(pl.total == Catch::Approx(5.0));
  CHECK(dist(pl.point(0.0), y) == 0.0);
  CHECK(dist(pl.point(1.0), b.pair.x0) == 0.0);

  // the base point itself degenerates
  CHECK(b.sys->path(b.pair.x0).degenerate);
  CHECK_THROWS_AS(b.sys->path(Vec(20.0, 0.0)), OutsideDecomposition);
}

TEST_CASE("polyline parametrization is proportional to arclength") {
  CombSetup c;
  const Polyline pl = c.sys->path(c.at(0.5, 0.003));
  REQUIRE(pl.v.size() > 3);
  for (size_t i = 0; i < pl.v.size(); ++i) {
    const double t = pl.t_of_vertex(i);
    CHECK(dist(pl.point(t), pl.v[i]) < 1e-9 * pl.total);
  }
  // unit speed after scaling by total length, checked inside segments
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const double t = rng.uniform(0.01, 0.99);
    CHECK(norm(pl.velocity(t)) == Catch::Approx(pl.total).epsilon(1e-9));
    // two parametrizations of the same curve agree pointwise: the cumulative
    // table is just the arclength integral re-read
    const double s = t * pl.total;
    size_t seg = pl.segment_of(t);
    const double u = (s - pl.cum[seg]) / (pl.cum[seg + 1] - pl.cum[seg]);
    const Vec q = pl.v[seg] + u * (pl.v[seg + 1] - pl.v[seg]);
    CHECK(dist(q, pl.point(t)) < 1e-6);
  }
}

TEST_CASE("collinear merging preserves the curve pointwise") {
  CombSetup c;
  const Vec y = c.at(0.45, 0.0025);
  const Polyline merged = c.sys->path(y);

  // rebuild the unmerged chain straight from the cube tree
  Polyline raw;
  raw.v.push_back(y);
  for (int k = *c.cx.locate(y); k >= 0; k = c.sys->parent(k)) {
    const Vec& ctr = c.cx.cubes[size_t(k)].center;
    if (!(raw.v.back() == ctr)) raw.v.push_back(ctr);
    if (k == c.cx.root) break;
  }
  if (!(raw.v.back() == c.pair.x0)) raw.v.push_back(c.pair.x0);
  raw.finalize();

  CHECK(merged.v.size() < raw.v.size());
  CHECK(merged.total == Catch::Approx(raw.total).epsilon(1e-12));
  for (int i = 0; i <= 200; ++i) {
    const double t = i / 200.0;
    CHECK(dist(merged.point(t), raw.point(t)) < 1e-9 * raw.total);
  }
}

TEST_CASE("deep comb paths wind through every shallower channel") {
  CombSetup c;
  const Vec y = c.at(0.5, 0.0025);  // floor channel, below the last tooth
  const Polyline pl = c.sys->path(y);
  const double straight = dist(y, c.pair.x0);
  CHECK(pl.total > 2.5 * straight);

  // the serpentine layout forces a visit to channels 4,3,2,1 in order
  for (int k = 1; k <= 4; ++k) {
    const double ya = c.pair.x0[1] + c.pair.lambda * (c.L.below(k) - 0.55);
    const double yb = c.pair.x0[1] + c.pair.lambda * (c.L.h[size_t(k)] - 0.55);
    bool visited = false;
    for (const auto& v : pl.v)
      visited = visited || (v[1] > ya && v[1] < yb);
    CHECK(visited);
  }
}

TEST_CASE("tree distances accumulate the clearance-normalized edge costs") {
  BallSetup b;
  // pick any non-root cube and walk its parent chain
  int cube = -1;
  for (const auto& q : b.cx.cubes)
    if (q.index != b.cx.root && std::isfinite(b.sys->tree_distance(q.index)) &&
        b.sys->parent(q.index) >= 0) {
      cube = q.index;
      break;
    }
  REQUIRE(cube >= 0);
  double acc = 0;
  for (int k = cube; k != b.cx.root; k = b.sys->parent(k)) {
    const auto& cu = b.cx.cubes[size_t(k)];
    const auto& cv = b.cx.cubes[size_t(b.sys->parent(k))];
    acc += dist(cu.center, cv.center) * 2.0 / (cu.dhat_center + cv.dhat_center);
  }
  CHECK(acc == Catch::Approx(b.sys->tree_distance(cube)).epsilon(1e-12));
  CHECK(b.sys->tree_distance(b.cx.root) == 0.0);
  CHECK(b.sys->reached_volume_fraction() >= 0.995);
}

TEST_CASE("radius profile caps the crossing slope at one fifth") {
  CombSetup c;
  Rng rng(17);
  Vec lo, hi;
  c.pair.cover.bbox(lo, hi);
  int case1 = 0;
  for (int i = 0; i < 200; ++i) {
    const Vec y = rng.point_in_box(lo, hi);
    if (!(c.pair.d_hat(y) > 2 * c.cx.min_side)) continue;
    if (dist(y, c.pair.x0) < 1e-6) continue;
    Polyline pl;
    try {
      pl = c.sys->path(y);
    } catch (const Error&) {
      continue;
    }
    const RadiusProfile rp = radius_profile(*c.sys, pl, y);
    if (rp.case_id != 1) continue;
    ++case1;
    CHECK(rp.alpha <= 0.2 * (1 + 1e-12));
    CHECK(rp.alpha ==
          Catch::Approx(2.0 * c.pair.d_hat(pl.point(rp.tau)) /
                        (rp.dhat_x0 * rp.dhat_y)));
    // tau is the first crossing of the half-clearance sphere about y
    CHECK(dist(pl.point(rp.tau), y) ==
          Catch::Approx(0.5 * rp.dhat_y).epsilon(1e-9));
  }
  CHECK(case1 > 30);
}

TEST_CASE("tube radius is continuous at the crossing and under the cap") {
  CombSetup c;
  const Vec y = c.at(0.3, 0.02);
  const Polyline pl = c.sys->path(y);
  const PathParam par = make_param(*c.sys, pl, y);
  REQUIRE(par.case_id() == 1);
  const double tau = par.tau();
  CHECK(par.rho(tau - 1e-9) == Catch::Approx(par.rho(tau + 1e-9)).margin(1e-6));
  for (int i = 0; i <= 500; ++i) {
    const double t = 0.5 / 500 + i * (1.0 - 1.0 / 500) / 500;
    CHECK(par.rho(t) <= c.pair.d_hat(par.point(t)) / 5 * (1 + 1e-9));
  }
}

TEST_CASE("clearance-walk table covers the far region contiguously") {
  CombSetup c;
  const Vec y = c.at(0.5, 0.0025);
  const Polyline pl = c.sys->path(y);
  const PathParam par = make_param(*c.sys, pl, y);
  REQUIRE(par.case_id() == 1);
  REQUIRE(par.prof.tau < 1.0);
  REQUIRE_FALSE(par.chunks.empty());

  CHECK(par.chunks.front().ta == Catch::Approx(par.tau()));
  CHECK(par.chunks.back().tb == Catch::Approx(1.0));
  for (size_t i = 0; i + 1 < par.chunks.size(); ++i)
    CHECK(par.chunks[i].tb == Catch::Approx(par.chunks[i + 1].ta));
  // each chunk's cap dominates the tube radius everywhere inside it
  for (const auto& ck : par.chunks)
    for (int j = 0; j <= 8; ++j) {
      const double t = ck.ta + (ck.tb - ck.ta) * j / 8;
      CHECK(par.rho(t) <= ck.rho_cap * (1 + 1e-12));
    }
}

TEST_CASE("segment-ball overlap length is exact") {
  Polyline pl;
  pl.v = {Vec(0.0, 0.0), Vec(2.0, 0.0), Vec(2.0, 1.0)};
  pl.finalize();
  CHECK(polyline_ball_length(pl, Vec(1.0, 0.0), 0.5) == Catch::Approx(1.0));
  CHECK(polyline_ball_length(pl, Vec(5.0, 5.0), 0.5) == 0.0);
  // a ball around the corner collects from both segments
  CHECK(polyline_ball_length(pl, Vec(2.0, 0.0), 0.25) == Catch::Approx(0.5));
  CHECK(polyline_min_dist(pl, Vec(1.0, 2.0)) ==
        Catch::Approx(std::sqrt(2.0)));
}
