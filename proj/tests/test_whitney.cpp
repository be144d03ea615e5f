// Cube decomposition: acceptance window, disjoint dyadic cover, grading,
// adjacency, truncation-skin behaviour, and refinement monotonicity.

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "divsolve/experiment.hpp"

using namespace divsolve;

namespace {

DomainPair unit_ball_pair() {
  const CsgShape omega(CsgNode::ball(Vec(0.0, 0.0), 1.0), 2);
  return DomainPair::normalize(omega, omega, Vec(0.0, 0.0));
}

}  // namespace

TEST_CASE("every accepted cube sits in the comparability window") {
  const DomainPair pair = unit_ball_pair();
  const CubeComplex cx = decompose(pair, 0.05);
  REQUIRE(cx.cubes.size() > 100);
  const double rootn = std::sqrt(2.0);
  for (const auto& c : cx.cubes) {
    CHECK(c.dhat_center >= rootn * c.side);
    CHECK(c.dhat_center <= 5.0 * rootn * c.side);
    CHECK(c.side >= cx.min_side);
    // the window places the whole closed cube inside the set
    for (int k = 0; k < 4; ++k) {
      Vec corner = c.center;
      corner[0] += (k & 1 ? 0.5 : -0.5) * c.side;
      corner[1] += (k & 2 ? 0.5 : -0.5) * c.side;
      CHECK(pair.d_hat(corner) > 0);
    }
  }
}

TEST_CASE("cubes tile without overlap and locate resolves membership") {
  const DomainPair pair = unit_ball_pair();
  const CubeComplex cx = decompose(pair, 0.05);
  Rng rng(3);
  int located = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec p = rng.point_in_box(Vec(-15.0, -15.0), Vec(15.0, 15.0));
    const auto id = cx.locate(p);
    if (!id) continue;
    ++located;
    // locate returns the cube that geometrically contains the point, and by
    // dyadic disjointness no other cube does
    int containing = 0;
    for (const auto& c : cx.cubes) {
      bool in = true;
      for (int d = 0; d < 2; ++d)
        in = in && p[d] >= c.center[d] - 0.5 * c.side &&
             p[d] < c.center[d] + 0.5 * c.side;
      if (in) {
        ++containing;
        CHECK(c.index == *id);
      }
    }
    CHECK(containing == 1);
  }
  CHECK(located > 400);
}

TEST_CASE("adjacency is symmetric, irreflexive, and graded") {
  const DomainPair pair = unit_ball_pair();
  const CubeComplex cx = decompose(pair, 0.05);
  for (const auto& c : cx.cubes) {
    for (int v : cx.adjacency[size_t(c.index)]) {
      CHECK(v != c.index);
      const auto& nb = cx.adjacency[size_t(v)];
      CHECK(std::find(nb.begin(), nb.end(), c.index) != nb.end());
      // neighbours differ by at most one generation after grading
      CHECK(std::abs(cx.cubes[size_t(v)].generation - c.generation) <= 1);
    }
  }
  CHECK(cx.connected());
  // the root cube covers the base point
  const auto rt = cx.locate(pair.x0);
  REQUIRE(rt);
  CHECK(*rt == cx.root);
}

TEST_CASE("refining the smallest side tiles every coarse cube") {
  // both decompositions live on the same dyadic grid, so each coarse cube is
  // either kept or split; the fine cube at a coarse center must therefore be
  // nested inside that coarse cube (the grading pass may have split it)
  const DomainPair pair = unit_ball_pair();
  const CubeComplex coarse = decompose(pair, 0.2);
  const CubeComplex fine = decompose(pair, 0.05);
  for (const auto& c : coarse.cubes) {
    const auto f = fine.locate(c.center);
    REQUIRE(f);
    const WhitneyCube& fc = fine.cubes[size_t(*f)];
    REQUIRE(fc.generation >= c.generation);
    const int shift = fc.generation - c.generation;
    for (int d = 0; d < 2; ++d)
      CHECK((fc.ipos[size_t(d)] >> shift) == c.ipos[size_t(d)]);
  }
  CHECK(fine.cubes.size() > coarse.cubes.size());
  CHECK(fine.max_generation > coarse.max_generation);
}

TEST_CASE("comb cubes stay clear of the teeth") {
  const CombLayout L = comb_layout(6, 0.1);
  const CsgShape comb(comb_domain_node(L), 2);
  const DomainPair pair =
      DomainPair::normalize(comb, comb, Vec(0.5, 0.55));
  const CubeComplex cx = decompose(pair, 0.02);
  REQUIRE(cx.cubes.size() > 500);
  int channel_cubes = 0;
  for (const auto& c : cx.cubes) {
    const double half_diag = 0.5 * std::sqrt(2.0) * c.side;
    for (int k = 1; k < L.teeth; ++k) {
      const double ty = pair.x0[1] + pair.lambda * (L.h[size_t(k)] - 0.55);
      const double xa =
          pair.x0[0] + pair.lambda * ((k % 2 ? L.epsilon : 0.0) - 0.5);
      const double xb =
          pair.x0[0] + pair.lambda * ((k % 2 ? 1.0 : 1.0 - L.epsilon) - 0.5);
      // a closed cube over a tooth's span must not reach the tooth line,
      // which also caps its side by the channel gap
      if (c.center[0] > xa + half_diag && c.center[0] < xb - half_diag) {
        CHECK(std::abs(c.center[1] - ty) > 0.5 * c.side);
        if (std::abs(c.center[1] - ty) < pair.lambda * L.h[size_t(k)])
          ++channel_cubes;
      }
    }
  }
  CHECK(channel_cubes > 50);
}

TEST_CASE("decomposition rejects bad inputs") {
  const DomainPair pair = unit_ball_pair();
  CHECK_THROWS_AS(decompose(pair, -1.0), ConfigError);
  CHECK_THROWS_AS(decompose(pair, 0.0), ConfigError);
  // a min_side too coarse to accept any cube around the base point
  CHECK_THROWS_AS(decompose(pair, 40.0), RootNotCovered);
}
