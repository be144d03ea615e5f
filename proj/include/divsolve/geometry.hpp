#pragma once
// Constructive solid geometry over balls and axis-aligned boxes (n = 2 or 3),
// realized as OPEN sets. `difference` subtracts the CLOSURE of the subtrahend,
// so zero-thickness boxes puncture a domain without changing its volume.
//
// Distance calculus: signed distance s is exact for primitives; combinations
// use min/max. Inside a shape, -s is exact for intersections and differences
// (complement distance of an intersection is the min over the children's
// complement distances) and a lower bound for overlapping unions; the
// boundary-sampling oracle below detects configurations where the lower bound
// is strict so they can be rejected at load time.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "divsolve/core.hpp"

namespace divsolve {

enum class CsgKind { Ball, Box, Union, Intersection, Difference };

struct CsgNode {
  CsgKind kind = CsgKind::Ball;
  Vec center;          // Ball
  double radius = 0;   // Ball
  Vec lo, hi;          // Box (lo[i] == hi[i] allowed: degenerate closed slab)
  std::vector<CsgNode> children;

  static CsgNode ball(const Vec& c, double r) {
    CsgNode n;
    n.kind = CsgKind::Ball;
    n.center = c;
    n.radius = r;
    return n;
  }
  static CsgNode box(const Vec& lo, const Vec& hi) {
    CsgNode n;
    n.kind = CsgKind::Box;
    n.lo = lo;
    n.hi = hi;
    return n;
  }
  static CsgNode combine(CsgKind k, std::vector<CsgNode> cs) {
    CsgNode n;
    n.kind = k;
    n.children = std::move(cs);
    return n;
  }
};

inline bool operator==(const CsgNode& a, const CsgNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case CsgKind::Ball:
      return a.center == b.center && a.radius == b.radius;
    case CsgKind::Box:
      return a.lo == b.lo && a.hi == b.hi;
    default:
      if (a.children.size() != b.children.size()) return false;
      for (size_t i = 0; i < a.children.size(); ++i)
        if (!(a.children[i] == b.children[i])) return false;
      return true;
  }
}

// signed distance + witness point on the active boundary piece
struct DistWitness {
  double s = 0;
  Vec p;
};

namespace detail {

inline DistWitness ball_witness(const CsgNode& n, const Vec& x) {
  const double d = dist(x, n.center);
  DistWitness r;
  r.s = d - n.radius;
  if (d > 0) {
    r.p = n.center + (n.radius / d) * (x - n.center);
  } else {
    // center query: every sphere point is nearest; lexicographic minimum
    r.p = n.center;
    r.p[0] -= n.radius;
  }
  return r;
}

inline DistWitness box_witness(const CsgNode& n, const Vec& x) {
  const int dim = x.n;
  DistWitness r;
  bool inside = true;
  for (int i = 0; i < dim; ++i)
    if (!(x[i] > n.lo[i] && x[i] < n.hi[i])) inside = false;
  if (inside) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim; ++i)
      m = std::min(m, std::min(x[i] - n.lo[i], n.hi[i] - x[i]));
    r.s = -m;
    bool have = false;
    for (int i = 0; i < dim; ++i) {
      for (int side = 0; side < 2; ++side) {
        const double fd = side == 0 ? x[i] - n.lo[i] : n.hi[i] - x[i];
        if (fd == m) {
          Vec cand = x;
          cand[i] = side == 0 ? n.lo[i] : n.hi[i];
          if (!have || lex_less(cand, r.p)) {
            r.p = cand;
            have = true;
          }
        }
      }
    }
  } else {
    Vec cl = x;
    for (int i = 0; i < dim; ++i) cl[i] = std::clamp(x[i], n.lo[i], n.hi[i]);
    r.s = dist(x, cl);
    r.p = cl;
  }
  return r;
}

inline DistWitness pick(const DistWitness& a, const DistWitness& b, bool take_max) {
  const double sa = a.s, sb = b.s;
  if (sa == sb) return lex_less(a.p, b.p) ? a : b;
  if (take_max) return sa > sb ? a : b;
  return sa < sb ? a : b;
}

}  // namespace detail

class CsgShape {
 public:
  CsgShape() = default;
  CsgShape(CsgNode root, int dim) : root_(std::move(root)), dim_(dim) {}

  int dim() const { return dim_; }
  const CsgNode& root() const { return root_; }

  bool contains(const Vec& x) const { return contains_open(root_, x); }

  // distance from x to the complement of the open realized set (0 outside)
  double dist_to_complement(const Vec& x) const {
    if (!contains(x)) return 0.0;
    return std::max(0.0, -witness(x).s);
  }

  double signed_distance(const Vec& x) const { return eval(root_, x).s; }

  DistWitness witness(const Vec& x) const { return eval(root_, x); }

  void bbox(Vec& lo, Vec& hi) const {
    lo = Vec::zero(dim_);
    hi = Vec::zero(dim_);
    node_bbox(root_, lo, hi, true);
  }

  double bbox_diameter() const {
    Vec lo, hi;
    bbox(lo, hi);
    return dist(lo, hi);
  }

  CsgShape dilated(const Vec& about, double lambda) const {
    return CsgShape(dilate_node(root_, about, lambda), dim_);
  }

  // Complement points sampled on primitive boundaries, for the independent
  // distance oracle. `target` is the approximate number of samples per
  // primitive boundary component.
  std::vector<Vec> boundary_complement_samples(int target) const {
    std::vector<Vec> raw;
    collect_boundary(root_, target, raw);
    std::vector<Vec> keep;
    keep.reserve(raw.size());
    for (const auto& p : raw)
      if (!contains(p)) keep.push_back(p);
    return keep;
  }

 private:
  static bool contains_open(const CsgNode& n, const Vec& x) {
    switch (n.kind) {
      case CsgKind::Ball:
        return dist(x, n.center) < n.radius;
      case CsgKind::Box:
        for (int i = 0; i < x.n; ++i)
          if (!(x[i] > n.lo[i] && x[i] < n.hi[i])) return false;
        return true;
      case CsgKind::Union:
        for (const auto& c : n.children)
          if (contains_open(c, x)) return true;
        return false;
      case CsgKind::Intersection:
        for (const auto& c : n.children)
          if (!contains_open(c, x)) return false;
        return true;
      case CsgKind::Difference:
        if (n.children.empty() || !contains_open(n.children[0], x)) return false;
        for (size_t i = 1; i < n.children.size(); ++i)
          if (contains_closure(n.children[i], x)) return false;
        return true;
    }
    return false;
  }

  static bool contains_closure(const CsgNode& n, const Vec& x) {
    switch (n.kind) {
      case CsgKind::Ball:
        return dist(x, n.center) <= n.radius;
      case CsgKind::Box:
        for (int i = 0; i < x.n; ++i)
          if (!(x[i] >= n.lo[i] && x[i] <= n.hi[i])) return false;
        return true;
      case CsgKind::Union:
        for (const auto& c : n.children)
          if (contains_closure(c, x)) return true;
        return false;
      case CsgKind::Intersection:
        // superset of the true closure; exact for the shapes shipped here
        for (const auto& c : n.children)
          if (!contains_closure(c, x)) return false;
        return true;
      case CsgKind::Difference:
        if (n.children.empty() || !contains_closure(n.children[0], x)) return false;
        for (size_t i = 1; i < n.children.size(); ++i)
          if (contains_open(n.children[i], x)) return false;
        return true;
    }
    return false;
  }

  static DistWitness eval(const CsgNode& n, const Vec& x) {
    switch (n.kind) {
      case CsgKind::Ball:
        return detail::ball_witness(n, x);
      case CsgKind::Box:
        return detail::box_witness(n, x);
      case CsgKind::Union: {
        DistWitness best = eval(n.children[0], x);
        for (size_t i = 1; i < n.children.size(); ++i)
          best = detail::pick(best, eval(n.children[i], x), false);
        return best;
      }
      case CsgKind::Intersection: {
        DistWitness best = eval(n.children[0], x);
        for (size_t i = 1; i < n.children.size(); ++i)
          best = detail::pick(best, eval(n.children[i], x), true);
        return best;
      }
      case CsgKind::Difference: {
        DistWitness best = eval(n.children[0], x);
        for (size_t i = 1; i < n.children.size(); ++i) {
          DistWitness sub = eval(n.children[i], x);
          sub.s = -sub.s;
          best = detail::pick(best, sub, true);
        }
        return best;
      }
    }
    return {};
  }

  static void node_bbox(const CsgNode& n, Vec& lo, Vec& hi, bool first) {
    auto merge = [&](const Vec& a, const Vec& b) {
      if (first) {
        lo = a;
        hi = b;
        first = false;
      } else {
        for (int i = 0; i < lo.n; ++i) {
          lo[i] = std::min(lo[i], a[i]);
          hi[i] = std::max(hi[i], b[i]);
        }
      }
    };
    switch (n.kind) {
      case CsgKind::Ball: {
        Vec a = n.center, b = n.center;
        for (int i = 0; i < a.n; ++i) {
          a[i] -= n.radius;
          b[i] += n.radius;
        }
        merge(a, b);
        break;
      }
      case CsgKind::Box:
        merge(n.lo, n.hi);
        break;
      case CsgKind::Difference:
        node_bbox(n.children[0], lo, hi, first);
        break;
      default:
        for (const auto& c : n.children) {
          Vec a, b;
          bool f = true;
          node_bbox(c, a, b, f);
          merge(a, b);
        }
        break;
    }
  }

  static CsgNode dilate_node(const CsgNode& n, const Vec& about, double lambda) {
    CsgNode out = n;
    auto map = [&](const Vec& v) { return about + lambda * (v - about); };
    switch (n.kind) {
      case CsgKind::Ball:
        out.center = map(n.center);
        out.radius = lambda * n.radius;
        break;
      case CsgKind::Box:
        out.lo = map(n.lo);
        out.hi = map(n.hi);
        break;
      default:
        for (auto& c : out.children) c = dilate_node(c, about, lambda);
        break;
    }
    return out;
  }

  static void collect_boundary(const CsgNode& n, int target, std::vector<Vec>& out) {
    switch (n.kind) {
      case CsgKind::Ball: {
        if (n.center.n == 2) {
          for (int k = 0; k < target; ++k) {
            const double th = 2.0 * M_PI * k / target;
            Vec p = n.center;
            p[0] += n.radius * std::cos(th);
            p[1] += n.radius * std::sin(th);
            out.push_back(p);
          }
        } else {
          const int m = std::max(8, static_cast<int>(std::cbrt(double(target)) * 4));
          for (int i = 0; i <= m; ++i) {
            const double ph = M_PI * i / m;
            for (int j = 0; j < 2 * m; ++j) {
              const double th = M_PI * j / m;
              Vec p = n.center;
              p[0] += n.radius * std::sin(ph) * std::cos(th);
              p[1] += n.radius * std::sin(ph) * std::sin(th);
              p[2] += n.radius * std::cos(ph);
              out.push_back(p);
            }
          }
        }
        break;
      }
      case CsgKind::Box: {
        const int dim = n.lo.n;
        if (dim == 2) {
          const int m = std::max(2, target / 4);
          for (int i = 0; i <= m; ++i) {
            const double tx = n.lo[0] + (n.hi[0] - n.lo[0]) * i / m;
            const double ty = n.lo[1] + (n.hi[1] - n.lo[1]) * i / m;
            out.push_back(Vec(tx, n.lo[1]));
            out.push_back(Vec(tx, n.hi[1]));
            out.push_back(Vec(n.lo[0], ty));
            out.push_back(Vec(n.hi[0], ty));
          }
        } else {
          const int m = std::max(2, static_cast<int>(std::cbrt(double(target))));
          for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j) {
              auto at = [&](int a, int b, int c2, double va, double vb, double vc) {
                Vec p = Vec::zero(3);
                p[a] = va;
                p[b] = vb;
                p[c2] = vc;
                return p;
              };
              const double u0 = n.lo[0] + (n.hi[0] - n.lo[0]) * i / m;
              const double u1 = n.lo[1] + (n.hi[1] - n.lo[1]) * i / m;
              const double v1 = n.lo[1] + (n.hi[1] - n.lo[1]) * j / m;
              const double v2 = n.lo[2] + (n.hi[2] - n.lo[2]) * j / m;
              out.push_back(at(0, 1, 2, u0, v1, n.lo[2]));
              out.push_back(at(0, 1, 2, u0, v1, n.hi[2]));
              out.push_back(at(0, 1, 2, u0, n.lo[1], v2));
              out.push_back(at(0, 1, 2, u0, n.hi[1], v2));
              out.push_back(at(0, 1, 2, n.lo[0], u1, v2));
              out.push_back(at(0, 1, 2, n.hi[0], u1, v2));
            }
        }
        break;
      }
      default:
        for (const auto& c : n.children) collect_boundary(c, target, out);
        break;
    }
  }

  CsgNode root_;
  int dim_ = 2;
};

// ---------------------------------------------------------------------------

struct CoverEstimate {
  double fraction = 0;   // vol(cover \ omega) / vol(cover)
  double std_error = 0;
  size_t samples = 0;
};

struct OracleReport {
  double max_shortfall = 0;   // max over samples of oracle(x) - d_hat(x)
  double sample_spacing = 0;  // boundary sampling resolution
  size_t checked = 0;
  bool consistent = true;
};

// Omega together with the ambient open set (the positive-clearance part of the
// measurable cover) and the base point. `lambda` records the dilation applied
// by normalize() so results can be mapped back to input coordinates.
struct DomainPair {
  CsgShape omega;
  CsgShape cover;
  Vec x0;
  double lambda = 1.0;

  int dim() const { return omega.dim(); }
  bool in_omega(const Vec& x) const { return omega.contains(x); }
  bool in_cover(const Vec& x) const { return cover.contains(x); }
  double d_omega(const Vec& x) const { return omega.dist_to_complement(x); }
  double d_hat(const Vec& x) const { return cover.dist_to_complement(x); }

  Vec grad_dhat(const Vec& x) const {
    const DistWitness w = cover.witness(x);
    const double d = dist(x, w.p);
    if (!(w.s < 0) || d <= 0)
      throw Error("grad_dhat: point has no positive clearance");
    return (1.0 / d) * (x - w.p);
  }

  bool epsilon_interior(const Vec& x, double eps) const { return d_hat(x) > eps; }

  Vec map_to_normalized(const Vec& x) const { return x0 + lambda * (x - x0); }

  // Rescale about x0 so that d_hat(x0) >= 15 and B(x0,1) closure fits in
  // omega. Pairs already satisfying both are returned unchanged (lambda
  // clamps at 1), which makes the operation idempotent.
  static DomainPair normalize(const CsgShape& omega, const CsgShape& cover, const Vec& x0) {
    if (!omega.contains(x0))
      throw BasePointOutside("base point is not inside the domain");
    if (!cover.contains(x0))
      throw BasePointOutside("base point is not inside the ambient set");
    DomainPair p;
    const double dh = cover.dist_to_complement(x0);
    const double dw = omega.dist_to_complement(x0);
    if (dh <= 0 || dw <= 0)
      throw BasePointOutside("base point has zero clearance");
    double lam = std::max(15.0 / dh, 1.01 / dw);
    lam = std::max(lam, 1.0);
    p.omega = lam > 1.0 ? omega.dilated(x0, lam) : omega;
    p.cover = lam > 1.0 ? cover.dilated(x0, lam) : cover;
    p.x0 = x0;
    p.lambda = lam;
    return p;
  }

  CoverEstimate validate_cover(size_t samples, uint64_t seed) const {
    Vec lo, hi;
    cover.bbox(lo, hi);
    Rng rng(seed);
    size_t in_cover_n = 0, in_gap = 0;
    for (size_t i = 0; i < samples; ++i) {
      const Vec x = rng.point_in_box(lo, hi);
      if (!cover.contains(x)) continue;
      ++in_cover_n;
      if (!omega.contains(x)) ++in_gap;
    }
    CoverEstimate e;
    e.samples = in_cover_n;
    if (in_cover_n > 0) {
      e.fraction = double(in_gap) / double(in_cover_n);
      e.std_error = std::sqrt(std::max(0.0, e.fraction * (1 - e.fraction) / double(in_cover_n)));
    }
    return e;
  }

  // Independent distance check: compare d_hat against the minimum distance to
  // densely sampled complement points on primitive boundaries. Flags
  // configurations where the min/max distance calculus underestimates the
  // true clearance.
  OracleReport oracle_check(size_t probes, uint64_t seed, int boundary_target = 4000) const {
    return shape_oracle_check(cover, probes, seed, boundary_target);
  }

  static OracleReport shape_oracle_check(const CsgShape& shape, size_t probes,
                                         uint64_t seed, int boundary_target = 4000) {
    OracleReport rep;
    const auto pts = shape.boundary_complement_samples(boundary_target);
    if (pts.empty()) return rep;
    const double res =
        shape.dim() == 2 ? double(boundary_target)
                         : std::max(8.0, std::cbrt(double(boundary_target)) * 4);
    rep.sample_spacing = shape.bbox_diameter() * 3.2 / res;
    Vec lo, hi;
    shape.bbox(lo, hi);
    Rng rng(seed);
    for (size_t i = 0; i < probes; ++i) {
      const Vec x = rng.point_in_box(lo, hi);
      if (!shape.contains(x)) continue;
      const double dh = shape.dist_to_complement(x);
      double oracle = std::numeric_limits<double>::infinity();
      for (const auto& p : pts) oracle = std::min(oracle, dist(x, p));
      rep.max_shortfall = std::max(rep.max_shortfall, oracle - dh);
      ++rep.checked;
    }
    rep.consistent = rep.max_shortfall <= 2.5 * rep.sample_spacing + 1e-12;
    return rep;
  }
};

}  // namespace divsolve
