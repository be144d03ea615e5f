#pragma once
// Solution field u(x) = sum_i mu_i G(x, y_i) for an atomic right-hand side,
// with grid sampling and the weighted sup functional |u| / (kappa w0).

#include "divsolve/kernel.hpp"

namespace divsolve {

struct FieldRow {
  Vec x;
  Vec u;
  double i1 = 0, omega = 0, d_hat = 0, w0 = 0;
};

class FieldEvaluator {
 public:
  FieldEvaluator(const PathSystem& sys, const WeightEvaluator& weight,
                 const DiscreteMeasure& mu, const KernelContext& kc)
      : sys_(&sys), weight_(&weight), mu_(&mu), kc_(&kc) {
    lines_.reserve(mu.atoms.size());
    params_.reserve(mu.atoms.size());
    for (const auto& a : mu.atoms) {
      if (!(sys.pair().d_hat(a.p) > 0))
        throw SkinViolation("source atom has no positive clearance");
      lines_.push_back(sys.path(a.p));
    }
    for (size_t i = 0; i < mu_->atoms.size(); ++i)
      params_.push_back(make_param(sys, lines_[i], mu_->atoms[i].p));
  }

  // path parameterizations point into lines_, so the evaluator is pinned
  FieldEvaluator(const FieldEvaluator&) = delete;
  FieldEvaluator& operator=(const FieldEvaluator&) = delete;

  const DiscreteMeasure& mu() const { return *mu_; }
  const KernelContext& context() const { return *kc_; }
  const PathSystem& system() const { return *sys_; }
  const WeightEvaluator& weight() const { return *weight_; }
  const PathParam& param(size_t i) const { return params_[i]; }

  Vec u(const Vec& x) const {
    Vec s = Vec::zero(x.n);
    for (size_t i = 0; i < params_.size(); ++i) {
      const KernelEval ev = kernel_eval(*kc_, params_[i], x);
      s += mu_->atoms[i].w * ev.value;
    }
    return s;
  }

  // cell centers of a tensor grid over the domain box, keeping points that lie
  // in the domain, above the truncation skin, and off the source atoms
  std::vector<FieldRow> sample_field(int grid, size_t* near_atom_skips = nullptr) const {
    const CsgShape& omega = sys_->pair().omega;
    Vec lo = Vec::zero(omega.dim()), hi = Vec::zero(omega.dim());
    omega.bbox(lo, hi);
    const int n = omega.dim();
    const double diam = omega.bbox_diameter();
    const double skin = sys_->complex().min_side;

    std::vector<Vec> pts;
    size_t skips = 0;
    std::array<int, 3> idx{0, 0, 0};
    const int kmax = n == 3 ? grid : 1;
    for (idx[0] = 0; idx[0] < grid; ++idx[0])
      for (idx[1] = 0; idx[1] < grid; ++idx[1])
        for (idx[2] = 0; idx[2] < kmax; ++idx[2]) {
          Vec p = Vec::zero(n);
          for (int d = 0; d < n; ++d)
            p[d] = lo[d] + (hi[d] - lo[d]) * (idx[size_t(d)] + 0.5) / grid;
          if (!omega.contains(p)) continue;
          if (!(sys_->pair().d_hat(p) > skin)) continue;
          bool near = false;
          for (const auto& a : mu_->atoms)
            if (dist(p, a.p) <= 1e-3 * diam) near = true;
          if (near) {
            ++skips;
            continue;
          }
          pts.push_back(p);
        }
    if (near_atom_skips) *near_atom_skips = skips;

    std::vector<FieldRow> rows(pts.size());
    parallel_for(pts.size(), [&](size_t i) {
      FieldRow r;
      r.x = pts[i];
      r.u = u(pts[i]);
      r.i1 = weight_->i1(pts[i]);
      r.omega = weight_->omega(pts[i]);
      r.d_hat = sys_->pair().d_hat(pts[i]);
      r.w0 = r.i1 + r.omega * std::pow(r.d_hat, 1 - n);
      rows[i] = r;
    });
    return rows;
  }

  double weighted_sup(const std::vector<FieldRow>& rows, double kappa) const {
    double m = 0;
    for (const auto& r : rows) m = std::max(m, norm(r.u) / (kappa * r.w0));
    return m;
  }

 private:
  const PathSystem* sys_;
  const WeightEvaluator* weight_;
  const DiscreteMeasure* mu_;
  const KernelContext* kc_;
  std::vector<Polyline> lines_;
  std::vector<PathParam> params_;
};

}  // namespace divsolve
