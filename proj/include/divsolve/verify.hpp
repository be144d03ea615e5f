#pragma once
// Verification harness: domain quadrature, test-function families, the weak
// divergence identity, and the two L1 Poincare functionals.
//
// For each source atom y the field satisfies, against Lipschitz phi,
//   int_Omega G(x,y) . grad phi(x) dx = int phi chi dx - phi(y),
// so for a zero-mass atomic right-hand side mu,
//   int_Omega u . grad phi dx = -int phi dmu + mu(Omega) int phi chi dx.
// The harness measures the relative defect of that identity on midpoint
// quadrature grids, with u evaluated once per grid and reused across phi.

#include "divsolve/solver.hpp"

#include <functional>

namespace divsolve {

// midpoint quadrature over the realized set: cells fully inside enter whole,
// boundary cells are subdivided twice and clipped by membership of sub-centers,
// and cells near a listed point are split recursively so the 1/r factors the
// integrands carry at measure atoms are resolved instead of sampled once.
// avoid_depth bounds that splitting: the field's tube structure needs the full
// depth near its few source atoms, while integrable 1/r weight spikes at a
// large reference family stabilize with a shallow split
class OmegaQuadrature {
 public:
  std::vector<Vec> pts;
  std::vector<double> wts;

  OmegaQuadrature(const CsgShape& omega, int grid,
                  const std::vector<Vec>& avoid = {}, int avoid_depth = 7)
      : omega_(&omega), avoid_(&avoid), avoid_depth_(avoid_depth) {
    const int n = omega.dim();
    Vec lo = Vec::zero(n), hi = Vec::zero(n);
    omega.bbox(lo, hi);
    Vec h = Vec::zero(n);
    double half_diag2 = 0;
    for (int d = 0; d < n; ++d) {
      h[d] = (hi[d] - lo[d]) / grid;
      half_diag2 += 0.25 * h[d] * h[d];
    }
    h_ = h;
    const double half_diag = std::sqrt(half_diag2);
    const int sub = 4;  // two halvings per axis

    std::array<int, 3> idx{0, 0, 0};
    const int kmax = n == 3 ? grid : 1;
    for (idx[0] = 0; idx[0] < grid; ++idx[0])
      for (idx[1] = 0; idx[1] < grid; ++idx[1])
        for (idx[2] = 0; idx[2] < kmax; ++idx[2]) {
          Vec c = Vec::zero(n);
          for (int d = 0; d < n; ++d) c[d] = lo[d] + h[d] * (idx[size_t(d)] + 0.5);
          const double s = omega.signed_distance(c);
          if (s >= half_diag) continue;  // provably outside
          if (s <= -half_diag) {
            emit(c, 0.5 * h, 0, false);
            continue;
          }
          // straddling cell: clip by sub-center membership
          std::array<int, 3> j{0, 0, 0};
          const int jk = n == 3 ? sub : 1;
          for (j[0] = 0; j[0] < sub; ++j[0])
            for (j[1] = 0; j[1] < sub; ++j[1])
              for (j[2] = 0; j[2] < jk; ++j[2]) {
                Vec q = c;
                for (int d = 0; d < n; ++d)
                  q[d] += h[d] * ((j[size_t(d)] + 0.5) / sub - 0.5);
                if (omega.contains(q)) emit(q, (0.5 / sub) * h, 0, true);
              }
        }
  }

  double total_weight() const {
    double s = 0;
    for (double w : wts) s += w;
    return s;
  }
  size_t size() const { return pts.size(); }

 private:
  void emit(const Vec& c, const Vec& half, int depth, bool clip) {
    if (depth < avoid_depth_) {
      // the field's support narrows like r/5 toward an atom while its
      // magnitude grows like 1/r, so a cell of size s needs s << r to see it:
      // split any cell closer to an atom than six times its own size
      double size = 0;
      for (int d = 0; d < c.n; ++d) size = std::max(size, 2 * half[d]);
      bool near = false;
      for (const auto& a : *avoid_)
        if (dist(c, a) <= 6.0 * size) {
          near = true;
          break;
        }
      if (near) {
        const int nchild = 1 << c.n;
        for (int k = 0; k < nchild; ++k) {
          Vec q = c;
          const Vec hh = 0.5 * half;
          for (int d = 0; d < c.n; ++d) q[d] += ((k >> d) & 1) ? hh[d] : -hh[d];
          emit(q, hh, depth + 1, clip);
        }
        return;
      }
    }
    if (clip && depth > 0 && !omega_->contains(c)) return;
    double w = 1;
    for (int d = 0; d < c.n; ++d) w *= 2 * half[d];
    push(c, w);
  }

  void push(Vec p, double w) {
    for (const auto& a : *avoid_)
      if (dist(p, a) <= 1e-9 * norm(h_)) {
        for (int d = 0; d < p.n; ++d) p[d] += 3.7e-4 * h_[d];
        break;
      }
    pts.push_back(p);
    wts.push_back(w);
  }

  const CsgShape* omega_;
  const std::vector<Vec>* avoid_;
  int avoid_depth_;
  Vec h_;
};

// scalar test function with an (a.e.) gradient and a pointwise |grad| bound
struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad;
  std::function<double(const Vec&)> grad_norm;  // defaults to |grad|

  double gnorm(const Vec& x) const {
    return grad_norm ? grad_norm(x) : norm(grad(x));
  }
};

namespace testfn {

inline TestFunction gaussian(const Vec& c, double sigma) {
  TestFunction t;
  t.name = "gaussian";
  const double s2 = sigma * sigma;
  t.f = [c, s2](const Vec& x) { return std::exp(-dot(x - c, x - c) / s2); };
  t.grad = [c, s2](const Vec& x) {
    return (-2.0 / s2 * std::exp(-dot(x - c, x - c) / s2)) * (x - c);
  };
  return t;
}

inline TestFunction coordinate(int axis, int dim) {
  TestFunction t;
  t.name = "coordinate";
  t.f = [axis](const Vec& x) { return x[axis]; };
  t.grad = [axis, dim](const Vec& x) {
    (void)x;
    Vec e = Vec::zero(dim);
    e[axis] = 1;
    return e;
  };
  return t;
}

inline TestFunction wave(const Vec& k, double phase) {
  TestFunction t;
  t.name = "wave";
  t.f = [k, phase](const Vec& x) { return std::sin(dot(k, x) + phase); };
  t.grad = [k, phase](const Vec& x) {
    return std::cos(dot(k, x) + phase) * k;
  };
  return t;
}

inline TestFunction cone(const Vec& c, double r) {
  TestFunction t;
  t.name = "cone";
  t.f = [c, r](const Vec& x) { return std::max(0.0, r - dist(x, c)); };
  t.grad = [c, r](const Vec& x) {
    const double d = dist(x, c);
    if (d <= 0 || d >= r) return Vec::zero(x.n);
    return (-1.0 / d) * (x - c);
  };
  return t;
}

inline TestFunction plane_dist(const Vec& a, double b) {
  TestFunction t;
  t.name = "plane_dist";
  const double an = norm(a);
  t.f = [a, b, an](const Vec& x) { return std::abs(dot(a, x) - b) / an; };
  t.grad = [a, b, an](const Vec& x) {
    const double s = dot(a, x) - b;
    return ((s >= 0 ? 1.0 : -1.0) / an) * a;
  };
  return t;
}

inline TestFunction radial(const Vec& c) {
  TestFunction t;
  t.name = "radial";
  t.f = [c](const Vec& x) { return dist(x, c); };
  t.grad = [c](const Vec& x) {
    const double d = dist(x, c);
    if (d <= 0) return Vec::zero(x.n);
    return (1.0 / d) * (x - c);
  };
  return t;
}

// distance to the base point along the cube tree, truncated at level T;
// 1-Lipschitz with |grad| = 1 where the truncation is inactive
inline TestFunction truncated_tree_distance(const PathSystem& sys, double T) {
  TestFunction t;
  t.name = "tree_distance";
  const PathSystem* s = &sys;
  auto val = [s, T](const Vec& x) {
    try {
      return std::min(T, s->geodesic_distance(x));
    } catch (const Error&) {
      return T;  // below the working scale: truncation plateau
    }
  };
  t.f = val;
  t.grad_norm = [val, T](const Vec& x) { return val(x) < T ? 1.0 : 0.0; };
  t.grad = {};
  return t;
}

}  // namespace testfn

// -- weak divergence identity -------------------------------------------------

struct WeakCase {
  std::string phi;
  double lhs = 0, rhs = 0, residual = 0;
};

class DivergenceCheck {
 public:
  DivergenceCheck(const FieldEvaluator& field, const OmegaQuadrature& quad)
      : field_(&field),
        quad_(&quad),
        u_vals_(quad.size(), Vec::zero(field.system().pair().omega.dim())) {
    parallel_for(quad.size(), [&](size_t i) { u_vals_[i] = field.u(quad.pts[i]); });
  }

  const std::vector<Vec>& field_values() const { return u_vals_; }

  WeakCase test(const TestFunction& tf) const {
    const DiscreteMeasure& mu = field_->mu();
    const Bump& chi = field_->context().bump;
    double lhs = 0, chi_int = 0, sup_phi = 0;
    for (size_t i = 0; i < quad_->size(); ++i) {
      const Vec& x = quad_->pts[i];
      const double w = quad_->wts[i];
      lhs += w * dot(u_vals_[i], tf.grad(x));
      chi_int += w * tf.f(x) * chi.eval(x);
      sup_phi = std::max(sup_phi, std::abs(tf.f(x)));
    }
    double atom_term = 0;
    for (const auto& a : mu.atoms) atom_term += a.w * tf.f(a.p);
    const double rhs = mu.mass() * chi_int - atom_term;
    WeakCase c;
    c.phi = tf.name;
    c.lhs = lhs;
    c.rhs = rhs;
    c.residual = std::abs(lhs - rhs) /
                 (mu.total_variation() * sup_phi + 1e-300);
    return c;
  }

 private:
  const FieldEvaluator* field_;
  const OmegaQuadrature* quad_;
  std::vector<Vec> u_vals_;
};

// -- L1 Poincare functionals --------------------------------------------------

struct PoincareReport {
  double num = 0, den = 0, ratio = 0;
  bool degenerate_rhs = false;
};

struct PoincareStarReport {
  double num = 0, den = 0, ratio = 0;
  double zero_mass = 0, factor = 0;
};

class PoincareCheck {
 public:
  PoincareCheck(const WeightEvaluator& weight, const OmegaQuadrature& quad)
      : weight_(&weight), quad_(&quad), w0_(quad.size(), 0.0) {
    parallel_for(quad.size(), [&](size_t i) {
      const double dh = weight.system().pair().d_hat(quad.pts[i]);
      w0_[i] = dh > 0 ? weight.w0(quad.pts[i]) : 0.0;
    });
  }

  const std::vector<double>& w0_values() const { return w0_; }

  double gradient_side(const TestFunction& tf) const {
    double s = 0;
    for (size_t i = 0; i < quad_->size(); ++i)
      s += quad_->wts[i] * tf.gnorm(quad_->pts[i]) * w0_[i];
    return s;
  }

  // int |f - mean_f| dmu0 <= C int |grad f| w0 dx
  PoincareReport p1(const TestFunction& tf) const {
    const DiscreteMeasure& mu0 = weight_->mu0();
    double mass = 0, mean = 0;
    for (const auto& a : mu0.atoms) {
      mass += a.w;
      mean += a.w * tf.f(a.p);
    }
    mean /= mass;
    PoincareReport r;
    for (const auto& a : mu0.atoms) r.num += a.w * std::abs(tf.f(a.p) - mean);
    r.den = gradient_side(tf);
    r.degenerate_rhs = !(r.den > 1e-14 * (1 + r.num));
    r.ratio = r.degenerate_rhs ? (r.num > 0 ? INFINITY : 0.0) : r.num / r.den;
    return r;
  }

  // int |f| dmu0 <= C (1 + mu0(Omega)/mu0({f=0})) int |grad f| w0 dx
  PoincareStarReport p1_star(const TestFunction& tf) const {
    const DiscreteMeasure& mu0 = weight_->mu0();
    PoincareStarReport r;
    double mass = 0;
    for (const auto& a : mu0.atoms) {
      mass += a.w;
      const double v = tf.f(a.p);
      r.num += a.w * std::abs(v);
      if (std::abs(v) <= 1e-12) r.zero_mass += a.w;
    }
    if (!(r.zero_mass > 0))
      throw EmptyZeroSet("test function has no zero atoms");
    r.factor = 1.0 + mass / r.zero_mass;
    r.den = r.factor * gradient_side(tf);
    r.ratio = r.den > 0 ? r.num / r.den : (r.num > 0 ? INFINITY : 0.0);
    return r;
  }

 private:
  const WeightEvaluator* weight_;
  const OmegaQuadrature* quad_;
  std::vector<double> w0_;
};

// quadrature of f against the realized set, for stabilization studies
template <class F>
double weighted_integral(const OmegaQuadrature& quad, const F& f) {
  std::vector<double> vals(quad.size());
  parallel_for(quad.size(), [&](size_t i) { vals[i] = f(quad.pts[i]); });
  double s = 0;
  for (size_t i = 0; i < quad.size(); ++i) s += quad.wts[i] * vals[i];
  return s;
}

}  // namespace divsolve
