// Shape calculus: open-set membership, complement distance, zero-thickness
// punctures, dilation, normalization, and the two sampling oracles.

#include <catch2/catch_amalgamated.hpp>

#include "divsolve/experiment.hpp"

using namespace divsolve;

TEST_CASE("primitive membership and distance") {
  const CsgShape ball(CsgNode::ball(Vec(0.0, 0.0), 1.0), 2);
  CHECK(ball.contains(Vec(0.5, 0.0)));
  CHECK_FALSE(ball.contains(Vec(1.0, 0.0)));  // boundary of the open set
  CHECK(ball.dist_to_complement(Vec(0.25, 0.0)) == Catch::Approx(0.75));
  CHECK(ball.dist_to_complement(Vec(2.0, 0.0)) == 0.0);

  const CsgShape box(CsgNode::box(Vec(0.0, 0.0), Vec(2.0, 1.0)), 2);
  CHECK(box.dist_to_complement(Vec(0.3, 0.5)) == Catch::Approx(0.3));
  CHECK(box.signed_distance(Vec(3.0, 0.5)) == Catch::Approx(1.0));
  // outside witness is the closest boundary point
  const auto w = box.witness(Vec(3.0, 0.5));
  CHECK(dist(w.p, Vec(2.0, 0.5)) < 1e-12);
}

TEST_CASE("zero-thickness slab punctures without removing volume") {
  // unit square minus the closed segment y = 0.5, x in [0, 0.7]
  auto node = CsgNode::combine(
      CsgKind::Difference,
      {CsgNode::box(Vec(0.0, 0.0), Vec(1.0, 1.0)),
       CsgNode::box(Vec(0.0, 0.5), Vec(0.7, 0.5))});
  const CsgShape s(std::move(node), 2);

  CHECK(s.contains(Vec(0.35, 0.499)));
  CHECK(s.contains(Vec(0.35, 0.501)));
  CHECK_FALSE(s.contains(Vec(0.35, 0.5)));   // on the slit
  CHECK(s.contains(Vec(0.85, 0.5)));         // past the slit tip

  // clearance near the slit is the distance to it, not to the outer walls
  CHECK(s.dist_to_complement(Vec(0.35, 0.45)) == Catch::Approx(0.05));
  CHECK(s.dist_to_complement(Vec(0.35, 0.55)) == Catch::Approx(0.05));
  // the slit's endpoint is the nearest complement point diagonally off the tip
  const Vec q(0.73, 0.54);
  CHECK(s.dist_to_complement(q) == Catch::Approx(dist(q, Vec(0.7, 0.5))));
}

TEST_CASE("dilation scales distances linearly") {
  const CsgShape ball(CsgNode::ball(Vec(0.2, -0.1), 0.8), 2);
  const Vec about(0.2, -0.1);
  const CsgShape big = ball.dilated(about, 3.0);
  const Vec x(0.5, 0.1);
  const Vec xs = about + 3.0 * (x - about);
  CHECK(big.dist_to_complement(xs) ==
        Catch::Approx(3.0 * ball.dist_to_complement(x)));
  CHECK(big.bbox_diameter() == Catch::Approx(3.0 * ball.bbox_diameter()));
}

TEST_CASE("normalization fixes the base clearance scale") {
  const CsgShape omega(CsgNode::ball(Vec(0.0, 0.0), 1.0), 2);
  const DomainPair pair = DomainPair::normalize(omega, omega, Vec(0.0, 0.0));
  CHECK(pair.lambda == Catch::Approx(15.0));
  CHECK(pair.d_hat(pair.x0) == Catch::Approx(15.0));

  // already-normalized input: the dilation clamps at one
  const DomainPair again =
      DomainPair::normalize(pair.omega, pair.cover, pair.x0);
  CHECK(again.lambda == 1.0);

  // a thin realized set inside a roomy ambient set: the unit-ball clause
  // drives the dilation, not the ambient clearance
  const CsgShape thin(CsgNode::box(Vec(-0.1, -20.0), Vec(0.1, 20.0)), 2);
  const CsgShape wide(CsgNode::ball(Vec(0.0, 0.0), 40.0), 2);
  const DomainPair p2 = DomainPair::normalize(thin, wide, Vec(0.0, 0.0));
  CHECK(p2.lambda == Catch::Approx(1.01 / 0.1));
  CHECK(p2.d_omega(p2.x0) >= 1.0);

  CHECK_THROWS_AS(
      DomainPair::normalize(omega, omega, Vec(2.0, 0.0)), BasePointOutside);
}

TEST_CASE("clearance gradient is the unit direction from the witness") {
  const CsgShape omega(CsgNode::ball(Vec(0.0, 0.0), 2.0), 2);
  const DomainPair pair = DomainPair::normalize(omega, omega, Vec(0.0, 0.0));
  const Vec x(3.0, 4.0);  // inside radius 30
  const Vec g = pair.grad_dhat(x);
  CHECK(norm(g) == Catch::Approx(1.0));
  // for a ball the clearance decreases radially outward
  CHECK(dot(g, x) < 0);
  CHECK_THROWS_AS(pair.grad_dhat(Vec(100.0, 0.0)), Error);
}

TEST_CASE("cover gap estimate matches the known area fraction") {
  const CsgShape omega(CsgNode::ball(Vec(0.5, 0.5), 0.4), 2);
  const CsgShape cover(CsgNode::box(Vec(0.0, 0.0), Vec(1.0, 1.0)), 2);
  const DomainPair pair = DomainPair::normalize(omega, cover, Vec(0.5, 0.5));
  const CoverEstimate e = pair.validate_cover(200000, 7);
  const double expected = 1.0 - M_PI * 0.4 * 0.4;
  CHECK(std::abs(e.fraction - expected) <= 4.0 * e.std_error + 1e-3);
}

TEST_CASE("distance calculus agrees with the boundary sampling oracle") {
  // the comb has zero-thickness teeth, the stress case for min/max distances
  const CombLayout L = comb_layout(6, 0.1);
  const CsgShape comb(comb_domain_node(L), 2);
  const auto rep = DomainPair::shape_oracle_check(comb, 400, 5);
  CHECK(rep.checked > 100);
  CHECK(rep.consistent);

  // every sample produced for the oracle lies on the complement
  for (const auto& p : comb.boundary_complement_samples(500))
    CHECK_FALSE(comb.contains(p));
}

TEST_CASE("shape configs round-trip through json") {
  const Json j = Json{{"type", "difference"},
                      {"children",
                       {Json{{"type", "box"}, {"min", {0.0, 0.0}}, {"max", {1.0, 1.0}}},
                        Json{{"type", "ball"}, {"center", {0.5, 0.5}}, {"radius", 0.2}}}}};
  const CsgShape s(csg_from_json(j, 2, "domain"), 2);
  CHECK(s.contains(Vec(0.1, 0.1)));
  CHECK_FALSE(s.contains(Vec(0.5, 0.5)));
  CHECK_THROWS_AS(csg_from_json(Json{{"type", "wedge"}}, 2, "domain"),
                  ConfigError);
}
