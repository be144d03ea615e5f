#pragma once
// Path family from every covered point to the base point, built on the
// Whitney cube graph: Dijkstra tree over cube centers rooted at the cube
// containing x0, polylines parametrized proportionally to arclength on [0,1].
// Edge costs are clearance-normalized (center distance over mean clearance),
// the metric in which one cube-to-neighbor hop costs O(1). Euclidean costs
// would route corridors along walls (taut strings hug inner corners, and the
// many equal-length staircases tie-break arbitrarily); the normalized cost
// makes routes climb to the coarsest cubes available and sweep corridors
// along their centers, like the scale-ascending chains of the cube tree.
//
// Near-base shortcut: when |y - x0| <= d_hat(y)/2 the path is the straight
// segment y -> x0 (it stays inside the closed ball B(y, d_hat(y)/2), which
// has positive clearance). This makes the no-crossing case of the radius
// profile coincide exactly with straight paths, so the closed-form kernel
// branch applies verbatim. Points in the root cube are also routed straight.
//
// Radius profile: tau = first parameter with |gamma(t) - y| = d_hat(y)/2
// (per segment the distance to y is convex in t, so endpoint signs find the
// first crossing, refined by bisection). Crossing case:
//   rho(t) = alpha * |y - gamma(t)|            for t <= tau,
//   rho(t) = d_hat(gamma(t)) / d_hat(x0)       for t >  tau,
//   alpha  = 2 d_hat(gamma(tau)) / (d_hat(x0) d_hat(y))  <= 1/5.
// No-crossing case: rho(t) = t. Both give rho <= d_hat(gamma)/5.

#include <queue>

#include "divsolve/whitney.hpp"

namespace divsolve {

struct Polyline {
  std::vector<Vec> v;
  std::vector<double> cum;  // cum[i] = arclength up to vertex i
  double total = 0;
  bool degenerate = false;

  void finalize() {
    cum.assign(v.size(), 0.0);
    for (size_t i = 1; i < v.size(); ++i)
      cum[i] = cum[i - 1] + dist(v[i], v[i - 1]);
    total = cum.empty() ? 0.0 : cum.back();
    if (total <= 0) degenerate = true;
  }

  size_t segment_of(double t) const {
    // first segment [v[i], v[i+1]] whose parameter range contains t
    const double s = t * total;
    size_t lo = 0, hi = v.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      if (cum[mid] <= s)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  Vec point(double t) const {
    if (degenerate) return v.front();
    if (t <= 0) return v.front();
    if (t >= 1) return v.back();
    const size_t i = segment_of(t);
    const double s = t * total;
    const double seg = cum[i + 1] - cum[i];
    const double u = seg > 0 ? (s - cum[i]) / seg : 0.0;
    return v[i] + u * (v[i + 1] - v[i]);
  }

  Vec velocity(double t) const {
    if (degenerate) return Vec::zero(v.front().n);
    size_t i = segment_of(std::clamp(t, 0.0, 1.0));
    const double seg = cum[i + 1] - cum[i];
    if (seg <= 0) return Vec::zero(v.front().n);
    return (total / seg) * (v[i + 1] - v[i]);
  }

  double t_of_vertex(size_t i) const { return total > 0 ? cum[i] / total : 0.0; }
};

// exact length of polyline inside the closed ball B(c, r)
inline double polyline_ball_length(const Polyline& pl, const Vec& c, double r) {
  double len = 0;
  for (size_t i = 0; i + 1 < pl.v.size(); ++i) {
    const Vec d = pl.v[i + 1] - pl.v[i];
    const Vec m = pl.v[i] - c;
    const double a = dot(d, d);
    if (a <= 0) continue;
    const double b = 2 * dot(m, d);
    const double cc = dot(m, m) - r * r;
    const double disc = b * b - 4 * a * cc;
    if (disc <= 0) continue;
    const double sq = std::sqrt(disc);
    const double u1 = std::max(0.0, (-b - sq) / (2 * a));
    const double u2 = std::min(1.0, (-b + sq) / (2 * a));
    if (u2 > u1) len += (u2 - u1) * std::sqrt(a);
  }
  return len;
}

inline double polyline_min_dist(const Polyline& pl, const Vec& c) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < pl.v.size(); ++i) {
    const Vec d = pl.v[i + 1] - pl.v[i];
    const double a = dot(d, d);
    double u = 0;
    if (a > 0) u = std::clamp(-dot(pl.v[i] - c, d) / a, 0.0, 1.0);
    best = std::min(best, dist(pl.v[i] + u * d, c));
  }
  return best;
}

class PathSystem {
 public:
  PathSystem(const DomainPair& pair, const CubeComplex& cx)
      : pair_(&pair), cx_(&cx) {
    const size_t n = cx.cubes.size();
    dist_.assign(n, std::numeric_limits<double>::infinity());
    parent_.assign(n, -1);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    dist_[size_t(cx.root)] = 0;
    pq.emplace(0.0, cx.root);
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist_[size_t(u)]) continue;
      for (int v : cx.adjacency[size_t(u)]) {
        const auto& cu = cx.cubes[size_t(u)];
        const auto& cv = cx.cubes[size_t(v)];
        const double w = dist(cu.center, cv.center) * 2.0 /
                         (cu.dhat_center + cv.dhat_center);
        const double nd = d + w;
        if (nd < dist_[size_t(v)] ||
            (nd == dist_[size_t(v)] && u < parent_[size_t(v)])) {
          dist_[size_t(v)] = nd;
          parent_[size_t(v)] = u;
          pq.emplace(nd, v);
        }
      }
    }
    double vol_all = 0, vol_reached = 0;
    for (const auto& c : cx.cubes) {
      const double vol = std::pow(c.side, cx.dim);
      vol_all += vol;
      if (std::isfinite(dist_[size_t(c.index)])) vol_reached += vol;
    }
    reached_volume_fraction_ = vol_all > 0 ? vol_reached / vol_all : 0.0;
    if (reached_volume_fraction_ < 0.995)
      throw DisconnectedComplex("cube graph is disconnected at the working scale");
  }

  const DomainPair& pair() const { return *pair_; }
  const CubeComplex& complex() const { return *cx_; }
  double tree_distance(int cube) const { return dist_[size_t(cube)]; }
  int parent(int cube) const { return parent_[size_t(cube)]; }
  double reached_volume_fraction() const { return reached_volume_fraction_; }

  double diagonal_scale() const { return pair_->cover.bbox_diameter(); }

  Polyline path(const Vec& y) const {
    Polyline pl;
    const Vec x0 = pair_->x0;
    if (dist(y, x0) <= 1e-14 * diagonal_scale()) {
      pl.v = {y, y};
      pl.finalize();
      pl.degenerate = true;
      return pl;
    }
    const double dh = pair_->d_hat(y);
    if (!(dh > 0))
      throw OutsideDecomposition("path endpoint has no positive clearance");
    auto cube = cx_->locate(y);
    if (!cube)
      throw OutsideDecomposition("path endpoint is not covered by any cube");
    if (!std::isfinite(dist_[size_t(*cube)]))
      throw OutsideDecomposition("path endpoint cube is unreachable from the root");
    if (dist(y, x0) <= 0.5 * dh || *cube == cx_->root) {
      pl.v = {y, x0};
      pl.finalize();
      return pl;
    }
    pl.v.push_back(y);
    for (int k = *cube; k >= 0; k = parent_[size_t(k)]) {
      const Vec& c = cx_->cubes[size_t(k)].center;
      if (!(pl.v.back() == c)) pl.v.push_back(c);
      if (k == cx_->root) break;
    }
    if (!(pl.v.back() == x0)) pl.v.push_back(x0);
    drop_collinear(pl.v);
    pl.finalize();
    return pl;
  }

  double geodesic_distance(const Vec& y) const { return path(y).total; }

 private:
  // chains along rows of equal cubes produce runs of collinear centers; merging
  // them leaves the curve pointwise identical and cuts the segment count
  static void drop_collinear(std::vector<Vec>& v) {
    if (v.size() < 3) return;
    std::vector<Vec> out;
    out.push_back(v.front());
    for (size_t i = 1; i + 1 < v.size(); ++i) {
      const Vec a = v[i] - out.back();
      const Vec b = v[i + 1] - v[i];
      const double na = norm(a), nb = norm(b);
      // forward and exactly straight: |a||b| == a.b up to rounding
      if (na > 0 && nb > 0 && dot(a, b) >= na * nb * (1 - 1e-12)) continue;
      out.push_back(v[i]);
    }
    out.push_back(v.back());
    v = std::move(out);
  }
  const DomainPair* pair_;
  const CubeComplex* cx_;
  std::vector<double> dist_;
  std::vector<int> parent_;
  double reached_volume_fraction_ = 0;
};

struct RadiusProfile {
  int case_id = 1;     // 1: sphere crossing exists, 2: none (straight path)
  double tau = 1.0;
  double alpha = 0.0;  // case 1 only
  double dhat_y = 0;
  double dhat_x0 = 0;
};

inline RadiusProfile radius_profile(const PathSystem& sys, const Polyline& pl, const Vec& y) {
  if (pl.degenerate)
    throw DegeneratePath("radius profile of a constant path");
  RadiusProfile rp;
  rp.dhat_y = sys.pair().d_hat(y);
  rp.dhat_x0 = sys.pair().d_hat(sys.pair().x0);
  const double target = 0.5 * rp.dhat_y;
  double tau = -1;
  for (size_t i = 0; i + 1 < pl.v.size(); ++i) {
    const double ta = pl.t_of_vertex(i), tb = pl.t_of_vertex(i + 1);
    if (!(tb > ta)) continue;
    const double fb = dist(pl.point(tb), y) - target;
    if (fb < 0) continue;
    // distance to y is convex on the segment and negative at ta
    double loT = ta, hiT = tb;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (loT + hiT);
      if (dist(pl.point(mid), y) - target < 0)
        loT = mid;
      else
        hiT = mid;
      if (hiT - loT < 1e-13) break;
    }
    tau = hiT;
    break;
  }
  if (tau < 0) {
    rp.case_id = 2;
    rp.tau = 1.0;
    return rp;
  }
  rp.case_id = 1;
  rp.tau = tau;
  const double dh_tau = sys.pair().d_hat(pl.point(tau));
  rp.alpha = 2.0 * dh_tau / (rp.dhat_x0 * rp.dhat_y);
  return rp;
}

// One step of the clearance walk along the t > tau part of a path: the
// parameter window, its endpoints, and the largest tube radius it can carry.
// The table is x-independent, so it is built once per path and reused by
// every kernel evaluation as a distance prefilter.
struct ClearanceChunk {
  double ta = 0, tb = 0;
  Vec pa, pb;
  double rho_cap = 0;
};

// Parameter bundle the kernel integrates against.
struct PathParam {
  const DomainPair* pair;
  const Polyline* pl;
  RadiusProfile prof;
  Vec y;
  std::vector<ClearanceChunk> chunks;  // covers (tau, 1) contiguously

  Vec point(double t) const { return pl->point(t); }
  Vec velocity(double t) const { return pl->velocity(t); }
  double tau() const { return prof.tau; }
  int case_id() const { return prof.case_id; }
  double total_length() const { return pl->total; }

  double rho(double t) const {
    if (prof.case_id == 2) return t;
    if (t <= prof.tau) return prof.alpha * dist(y, pl->point(t));
    return pair->d_hat(pl->point(t)) / prof.dhat_x0;
  }

  double rho_dot(double t) const {
    if (prof.case_id == 2) return 1.0;
    if (t <= prof.tau) {
      const Vec g = pl->point(t);
      const double r = dist(g, y);
      if (r <= 0) return 0.0;
      return prof.alpha * dot(g - y, pl->velocity(t)) / r;
    }
    const Vec g = pl->point(t);
    return dot(pair->grad_dhat(g), pl->velocity(t)) / prof.dhat_x0;
  }

  // segment breakpoints plus tau, ascending in (0,1)
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (size_t i = 1; i + 1 < pl->v.size(); ++i) b.push_back(pl->t_of_vertex(i));
    if (prof.case_id == 1 && prof.tau > 0 && prof.tau < 1) b.push_back(prof.tau);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }
};

inline PathParam make_param(const PathSystem& sys, const Polyline& pl, const Vec& y) {
  PathParam par;
  par.pair = &sys.pair();
  par.pl = &pl;
  par.y = y;
  par.prof = radius_profile(sys, pl, y);
  if (par.prof.case_id == 1 && par.prof.tau < 1) {
    // clearance walk over (tau, 1): steps of a quarter local clearance, cut at
    // the polyline vertices so every chunk is straight (d_hat is 1-Lipschitz,
    // so the step bounds the clearance everywhere inside the chunk)
    const DomainPair& pair = sys.pair();
    std::vector<double> cuts;
    for (size_t i = 1; i + 1 < pl.v.size(); ++i) {
      const double t = pl.t_of_vertex(i);
      if (t > par.prof.tau) cuts.push_back(t);
    }
    cuts.push_back(1.0);
    const double len = pl.total;
    double ta = par.prof.tau;
    Vec pa = pl.point(ta);
    double dha = pair.d_hat(pa);
    for (double b : cuts) {
      while (ta < b) {
        const double step = std::max(0.25 * dha, 1e-9 * sys.diagonal_scale());
        const double tb = std::min(b, ta + step / len);
        const Vec pb = pl.point(tb);
        const double dhb = pair.d_hat(pb);
        par.chunks.push_back({ta, tb, pa, pb,
                              (std::min(dha, dhb) + dist(pa, pb)) /
                                  par.prof.dhat_x0});
        ta = tb;
        pa = pb;
        dha = dhb;
      }
    }
  }
  return par;
}

}  // namespace divsolve
