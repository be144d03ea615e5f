#pragma once
// Path kernel G(x,y): the divergence field transported along the path from y
// to the base point, mollified by a unit bump at the base point.
//
//   G(x,y) = int_0^1 [gamma'(t) + rho'(t)(x-gamma)/rho] chi(x0 + (x-gamma)/rho)
//            dt / rho(t)^n
//
// The integrand is supported on the tube |x - gamma(t)| < rho(t).  On pieces
// where rho is proportional to |y - gamma| (t <= tau) or to t (straight-line
// case) the tube crossing is a quadratic inequality per straight segment, so
// the support interval is computed in closed form; only the pieces where rho
// follows the clearance d_hat are located by scanning and bisection.

#include "divsolve/measure.hpp"

namespace divsolve {

// smooth bump supported on the open unit ball about c, unit mass
struct Bump {
  Vec center;
  double z_norm = 1;  // normalization constant

  Bump(const Vec& c, int dim) : center(c) {
    // mass = surface(S^{n-1}) * int_0^1 r^{n-1} exp(-1/(1-r^2)) dr
    GaussRule g(200);
    const double radial = g.integrate(0.0, 1.0, [&](double r) {
      const double q = 1.0 - r * r;
      return std::pow(r, dim - 1) * std::exp(-1.0 / q);
    });
    z_norm = (dim == 2 ? 2 * M_PI : 4 * M_PI) * radial;
  }

  double eval(const Vec& p) const {
    const double r2 = dot(p - center, p - center);
    if (r2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r2)) / z_norm;
  }
  Vec grad(const Vec& p) const {
    const double r2 = dot(p - center, p - center);
    if (r2 >= 1.0) return Vec::zero(p.n);
    const double q = 1.0 - r2;
    const double s = -2.0 * std::exp(-1.0 / q) / (q * q * z_norm);
    return s * (p - center);
  }
  double sup_norm() const { return std::exp(-1.0) / z_norm; }
};

struct QuadConfig {
  int scan_nodes = 16;   // support scan nodes per path piece
  int gauss_nodes = 32;  // high-order rule size (low order is half)
  double tol = 1e-7;     // relative interval tolerance
  int max_depth = 14;
  bool check_claims = true;  // verify rho <= d_hat/5 at quadrature nodes
};

struct SupportInterval {
  double a = 0, b = 0;
  int form = 0;  // 0: rho = alpha|y-gamma|, 1: rho = d_hat/d_hat(x0), 2: rho = t
};

struct KernelEval {
  Vec value;
  Vec near_part;  // contribution of t <= tau
  Vec far_part;   // contribution of t > tau
  int case_id = 1;
  std::vector<SupportInterval> support;
  size_t nodes = 0;
  double err_est = 0;
  int claim_violations = 0;

  explicit KernelEval(int dim)
      : value(Vec::zero(dim)), near_part(Vec::zero(dim)), far_part(Vec::zero(dim)) {}
};

namespace detail {

// appends the sub-intervals of [lo,hi] where A t^2 + B t + C > 0
inline void positive_region(double A, double B, double C, double lo, double hi,
                            std::vector<std::pair<double, double>>& out) {
  auto push = [&](double a, double b) {
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (b - a > 1e-15) out.emplace_back(a, b);
  };
  if (A == 0) {
    if (B == 0) {
      if (C > 0) push(lo, hi);
    } else if (B > 0) {
      push(-C / B, hi);
    } else {
      push(lo, -C / B);
    }
    return;
  }
  const double disc = B * B - 4 * A * C;
  if (disc <= 0) {
    if (A > 0) push(lo, hi);
    return;
  }
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (B + std::copysign(sq, B == 0 ? 1.0 : B));
  double r1 = q / A;
  double r2 = (q != 0) ? C / q : -B / (2 * A);
  if (r1 > r2) std::swap(r1, r2);
  if (A > 0) {
    push(lo, r1);
    push(r2, hi);
  } else {
    push(r1, r2);
  }
}

inline double max_abs(const Vec& v) {
  double m = 0;
  for (int i = 0; i < v.n; ++i) m = std::max(m, std::abs(v[i]));
  return m;
}

}  // namespace detail

class KernelContext {
 public:
  Bump bump;
  QuadConfig cfg;
  GaussRule rule_lo, rule_hi;
  double c_floor;  // straight-line support floor constant 1/(1+diam)
  double scale;    // length scale for near-diagonal guards

  KernelContext(const DomainPair& pair, QuadConfig c = {})
      : bump(pair.x0, pair.omega.dim()),
        cfg(c),
        rule_lo(std::max(2, c.gauss_nodes / 2)),
        rule_hi(std::max(4, c.gauss_nodes)),
        c_floor(1.0 / (1.0 + pair.omega.bbox_diameter())),
        scale(pair.cover.bbox_diameter()) {}
};

// Par must expose: pair, y, prof, point(t), velocity(t), rho(t), case_id(),
// breakpoints(), tau().  PathParam satisfies this.
template <class Par>
KernelEval kernel_eval(const KernelContext& kc, const Par& par, const Vec& x) {
  const int n = x.n;
  const DomainPair& pair = *par.pair;
  if (dist(x, par.y) <= 1e-14 * kc.scale)
    throw DiagonalEvaluation("kernel evaluated on the diagonal x = y");

  KernelEval ev(n);
  ev.case_id = par.case_id();

  // --- locate the support ---------------------------------------------------
  std::vector<SupportInterval> sup;
  std::vector<std::pair<double, double>> tmp;
  if (ev.case_id == 2) {
    // gamma(t) = y + t(x0 - y), rho = t: support is {t^2 > |x-gamma|^2}
    const Vec d = pair.x0 - par.y;
    const Vec xy = x - par.y;
    detail::positive_region(1.0 - dot(d, d), 2.0 * dot(d, xy), -dot(xy, xy),
                            0.0, 1.0, tmp);
    const double floor_t = kc.c_floor * norm(xy);
    for (auto [a, b] : tmp) {
      if (a < floor_t * (1 - 1e-9)) ++ev.claim_violations;
      sup.push_back({a, b, 2});
    }
  } else {
    std::vector<double> cuts = par.breakpoints();
    cuts.insert(cuts.begin(), 0.0);
    cuts.push_back(1.0);
    const double tau = par.tau();
    const double alpha = par.prof.alpha;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (b - a <= 1e-15 || b > tau + 1e-18) continue;
      // straight piece with rho = alpha |y - gamma|: quadratic crossing
      const double tm = 0.5 * (a + b);
      const Vec pm = par.point(tm);
      const Vec w = par.velocity(tm);
      const Vec ym = par.y - pm, xm = x - pm;
      const double a2 = alpha * alpha;
      const double c2 = (a2 - 1.0) * dot(w, w);
      const double c1 = 2.0 * (dot(xm, w) - a2 * dot(ym, w));
      const double c0 = a2 * dot(ym, ym) - dot(xm, xm);
      tmp.clear();
      detail::positive_region(c2, c1, c0, a - tm, b - tm, tmp);
      for (auto [u, v] : tmp) sup.push_back({u + tm, v + tm, 0});
    }
    // clearance-driven region t > tau: the tube radius is d_hat/d_hat(x0), so
    // the support must be located at the clearance's own scale however long
    // the straight runs of the polyline are. The path carries a precomputed
    // walk in steps of a quarter local clearance; each chunk is distance-
    // filtered against the largest tube radius it can carry, survivors are
    // scanned for sign changes of rho - |x - gamma|
    auto gap = [&](double t) { return par.rho(t) - dist(x, par.point(t)); };
    auto cross = [&](double lo, double hi) {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(lo) > 0) == (gap(mid) > 0) ? lo = mid : hi = mid;
      }
      return 0.5 * (lo + hi);
    };
    const int K = std::max(8, kc.cfg.scan_nodes / 2);
    double open_at = -1;
    for (const auto& ck : par.chunks) {
      const Vec ab = ck.pb - ck.pa;
      const double ab2 = dot(ab, ab);
      double u = ab2 > 0 ? dot(x - ck.pa, ab) / ab2 : 0.0;
      u = std::min(1.0, std::max(0.0, u));
      const double seg_dist = dist(x, ck.pa + u * ab);
      if (seg_dist > ck.rho_cap) {
        if (open_at >= 0) {
          sup.push_back({open_at, ck.ta, 1});
          open_at = -1;
        }
        continue;
      }
      double prev_t = ck.ta, prev_g = gap(ck.ta);
      if (open_at < 0 && prev_g > 0) open_at = ck.ta;
      for (int j = 1; j <= K; ++j) {
        const double t = ck.ta + (ck.tb - ck.ta) * j / K;
        const double g = gap(t);
        if (prev_g <= 0 && g > 0) open_at = cross(prev_t, t);
        if (prev_g > 0 && g <= 0) {
          sup.push_back({open_at, cross(prev_t, t), 1});
          open_at = -1;
        }
        prev_t = t;
        prev_g = g;
      }
    }
    if (open_at >= 0) sup.push_back({open_at, 1.0, 1});
  }

  // --- integrands per support form -----------------------------------------
  const double dhx0 = par.prof.dhat_x0;
  auto near_f = [&](double t) -> Vec {
    ++ev.nodes;
    const Vec g = par.point(t);
    const Vec w = par.y - g;
    const double r = norm(w);
    const double rho = par.prof.alpha * r;
    if (rho <= 0) return Vec::zero(n);
    const double ch = kc.bump.eval(kc.bump.center + (1.0 / rho) * (x - g));
    if (ch == 0) return Vec::zero(n);
    if (kc.cfg.check_claims && rho > pair.d_hat(g) / 5 * (1 + 1e-9))
      ++ev.claim_violations;
    const Vec v = par.velocity(t);
    const Vec br = v + (-dot(v, w) / (r * r)) * (x - g);
    return (ch / std::pow(rho, n)) * br;
  };
  auto far_f = [&](double t) -> Vec {
    ++ev.nodes;
    const Vec g = par.point(t);
    const double dh = pair.d_hat(g);
    const double rho = dh / dhx0;
    const double ch = kc.bump.eval(kc.bump.center + (1.0 / rho) * (x - g));
    if (ch == 0) return Vec::zero(n);
    if (kc.cfg.check_claims && rho > dh / 5 * (1 + 1e-9)) ++ev.claim_violations;
    const Vec v = par.velocity(t);
    const Vec br = v + (dot(v, pair.grad_dhat(g)) / dh) * (x - g);
    return (ch / std::pow(rho, n)) * br;
  };
  auto line_f = [&](double t) -> Vec {
    ++ev.nodes;
    const Vec xy = x - par.y;
    const double ch = kc.bump.eval(par.y + (1.0 / t) * xy);
    if (ch == 0) return Vec::zero(n);
    if (kc.cfg.check_claims && t > pair.d_hat(par.point(t)) / 5 * (1 + 1e-9))
      ++ev.claim_violations;
    return (ch / std::pow(t, n + 1)) * xy;
  };

  // --- adaptive Gauss integration over each support interval ----------------
  auto integrate = [&](auto&& f, double a0, double b0) -> Vec {
    Vec total = Vec::zero(n);
    struct Seg {
      double a, b;
      int depth;
    };
    std::vector<Seg> stack{{a0, b0, 0}};
    while (!stack.empty()) {
      const Seg s = stack.back();
      stack.pop_back();
      const Vec lo = kc.rule_lo.integrate(s.a, s.b, f);
      const Vec hi = kc.rule_hi.integrate(s.a, s.b, f);
      const double err = detail::max_abs(hi - lo);
      if (err <= kc.cfg.tol * detail::max_abs(hi) + 1e-300 ||
          s.depth >= kc.cfg.max_depth || s.b - s.a < 1e-14) {
        total += hi;
        ev.err_est += err;
      } else {
        const double mid = 0.5 * (s.a + s.b);
        stack.push_back({mid, s.b, s.depth + 1});
        stack.push_back({s.a, mid, s.depth + 1});
      }
    }
    return total;
  };

  for (const auto& iv : sup) {
    Vec part = Vec::zero(n);
    switch (iv.form) {
      case 0: part = integrate(near_f, iv.a, iv.b); ev.near_part += part; break;
      case 1: part = integrate(far_f, iv.a, iv.b); ev.far_part += part; break;
      default: part = integrate(line_f, iv.a, iv.b); ev.far_part += part; break;
    }
    ev.value += part;
  }
  ev.support = std::move(sup);
  return ev;
}

// convenience entry: builds the path and profile for y, then evaluates
inline KernelEval kernel_G(const PathSystem& sys, const KernelContext& kc,
                           const Vec& x, const Vec& y) {
  if (!(sys.pair().d_hat(y) > 0))
    throw SkinViolation("kernel source point has no positive clearance");
  const Polyline pl = sys.path(y);
  const PathParam par = make_param(sys, pl, y);
  return kernel_eval(kc, par, x);
}

// closed-form magnitude bound for the straight-line case:
//   |G(x,y)| <= sup(chi) * c^{-n} |x-y|^{1-n} / (n-1),  c = 1/(1+diam)
inline double straight_case_bound(const KernelContext& kc, int dim, double r) {
  return kc.bump.sup_norm() * std::pow(kc.c_floor, -dim) *
         std::pow(r, 1 - dim) / (dim - 1);
}

}  // namespace divsolve
