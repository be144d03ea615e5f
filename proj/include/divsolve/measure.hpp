#pragma once
// Atomic measures and the weight w0 = I1(mu0) + omega * d_hat^(1-n).
// All integrals against atomic measures are exact finite sums; omega uses
// exact segment-ball intersections of the cached atom polylines.

#include "divsolve/paths.hpp"

namespace divsolve {

struct Atom {
  Vec p;
  double w = 0;
};

struct DiscreteMeasure {
  std::vector<Atom> atoms;

  double mass() const {
    double s = 0;
    for (const auto& a : atoms) s += a.w;
    return s;
  }
  double total_variation() const {
    double s = 0;
    for (const auto& a : atoms) s += std::abs(a.w);
    return s;
  }
  bool nonnegative() const {
    for (const auto& a : atoms)
      if (a.w < 0) return false;
    return true;
  }
};

inline double riesz_potential(const DiscreteMeasure& mu, const Vec& x, double scale) {
  const int n = x.n;
  double s = 0;
  for (const auto& a : mu.atoms) {
    const double r = dist(x, a.p);
    if (r <= 1e-14 * scale)
      throw AtomCoincidence("potential evaluated at an atom location");
    s += a.w * std::pow(r, 1 - n);
  }
  return s;
}

// Checks mu(Omega) = 0 and atomwise domination |mu| <= kappa * mu0 at shared
// locations (every mu atom must sit on a mu0 atom).
inline void validate_pair(const DiscreteMeasure& mu, const DiscreteMeasure& mu0,
                          double kappa, double scale) {
  const double tv = mu.total_variation();
  if (std::abs(mu.mass()) > 1e-12 * std::max(tv, 1e-300))
    throw ZeroSumViolated("mu does not have total mass zero");
  for (const auto& a : mu.atoms) {
    double cap = -1;
    for (const auto& b : mu0.atoms) {
      if (dist(a.p, b.p) <= 1e-12 * scale) {
        cap = std::max(cap, kappa * b.w);
        break;
      }
    }
    if (cap < 0)
      throw DominationViolated("mu atom is not located on any mu0 atom");
    if (std::abs(a.w) > cap * (1 + 1e-12))
      throw DominationViolated("mu atom weight exceeds kappa * mu0 weight");
  }
}

// Weight machinery bound to a path system and a reference measure.
class WeightEvaluator {
 public:
  WeightEvaluator(const PathSystem& sys, const DiscreteMeasure& mu0)
      : sys_(&sys), mu0_(&mu0) {
    lines_.reserve(mu0.atoms.size());
    for (const auto& a : mu0.atoms) lines_.push_back(sys.path(a.p));
  }

  const DiscreteMeasure& mu0() const { return *mu0_; }
  const PathSystem& system() const { return *sys_; }
  const Polyline& line(size_t i) const { return lines_[i]; }

  double omega(const Vec& x) const {
    const double dh = sys_->pair().d_hat(x);
    if (!(dh > 0)) throw SkinViolation("omega evaluated without positive clearance");
    const double r = 0.5 * dh;
    double s = 0;
    for (size_t i = 0; i < lines_.size(); ++i)
      if (polyline_min_dist(lines_[i], x) <= r) s += mu0_->atoms[i].w;
    return s;
  }

  double i1(const Vec& x) const {
    return riesz_potential(*mu0_, x, sys_->diagonal_scale());
  }

  double w0(const Vec& x) const {
    const int n = x.n;
    const double dh = sys_->pair().d_hat(x);
    if (!(dh > 0)) throw SkinViolation("w0 evaluated without positive clearance");
    return i1(x) + omega(x) * std::pow(dh, 1 - n);
  }

  // integral of the tree distance against mu0 (finiteness = admissibility)
  double geodesic_integral() const {
    double s = 0;
    for (size_t i = 0; i < lines_.size(); ++i)
      s += mu0_->atoms[i].w * lines_[i].total;
    return s;
  }

 private:
  const PathSystem* sys_;
  const DiscreteMeasure* mu0_;
  std::vector<Polyline> lines_;
};

}  // namespace divsolve
