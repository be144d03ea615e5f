#pragma once
// Experiment configurations (JSON), session assembly with validation, and
// deterministic artifact writers (CSV/JSON).  A session normalizes the input
// geometry, decomposes the cover, builds the path tree, maps the measures
// into the working frame, and wires up weight/kernel/field evaluators.

#include "divsolve/verify.hpp"

#include <json.hpp>

#include <fstream>
#include <memory>
#include <sstream>

namespace divsolve {

using Json = nlohmann::json;

namespace detail {

inline const Json& jget(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(path + "." + key + ": missing field");
  return j.at(key);
}

inline double jnum(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline Vec jvec(const Json& j, int dim, const std::string& path) {
  if (!j.is_array() || int(j.size()) != dim)
    throw ConfigError(path + ": expected an array of " + std::to_string(dim) +
                      " numbers");
  Vec v = Vec::zero(dim);
  for (int d = 0; d < dim; ++d) v[d] = jnum(j.at(size_t(d)), path);
  return v;
}

}  // namespace detail

inline CsgNode csg_from_json(const Json& j, int dim, const std::string& path) {
  using detail::jget;
  if (!j.is_object()) throw ConfigError(path + ": expected a shape object");
  const std::string ty = jget(j, "type", path).get<std::string>();
  if (ty == "ball")
    return CsgNode::ball(detail::jvec(jget(j, "center", path), dim, path + ".center"),
                         detail::jnum(jget(j, "radius", path), path + ".radius"));
  if (ty == "box") {
    const Vec lo = detail::jvec(jget(j, "min", path), dim, path + ".min");
    const Vec hi = detail::jvec(jget(j, "max", path), dim, path + ".max");
    for (int d = 0; d < dim; ++d)
      if (lo[d] > hi[d]) throw ConfigError(path + ".min: exceeds max");
    return CsgNode::box(lo, hi);
  }
  CsgKind kind;
  if (ty == "union") kind = CsgKind::Union;
  else if (ty == "intersection") kind = CsgKind::Intersection;
  else if (ty == "difference") kind = CsgKind::Difference;
  else throw ConfigError(path + ".type: unknown shape type '" + ty + "'");
  const Json& cs = jget(j, "children", path);
  if (!cs.is_array() || cs.size() < 2)
    throw ConfigError(path + ".children: expected at least two shapes");
  std::vector<CsgNode> nodes;
  for (size_t i = 0; i < cs.size(); ++i)
    nodes.push_back(csg_from_json(cs.at(i), dim,
                                  path + ".children[" + std::to_string(i) + "]"));
  return CsgNode::combine(kind, std::move(nodes));
}

// -- comb family --------------------------------------------------------------

// unit square with zero-thickness horizontal teeth at heights h_k = (k+1)^-3,
// anchored on alternating side walls and stopping eps short of the other;
// channel k lives between heights h_{k+1} and h_k
struct CombLayout {
  int teeth = 6;
  double epsilon = 0.1;
  std::vector<double> h;

  double below(int k) const {
    return k + 1 < int(h.size()) ? h[size_t(k) + 1] : 0.0;
  }
  double mid(int k) const { return 0.5 * (h[size_t(k)] + below(k)); }
};

inline CombLayout comb_layout(int teeth, double eps) {
  CombLayout L;
  L.teeth = teeth;
  L.epsilon = eps;
  for (int k = 0; k < teeth; ++k) L.h.push_back(std::pow(k + 1.0, -3.0));
  return L;
}

// teeth alternate sides, so the channel between consecutive teeth opens on
// alternating ends and any route from depth k to the chamber winds through
// every shallower channel (geodesic distance grows like k per level)
inline CsgNode comb_domain_node(const CombLayout& L) {
  std::vector<CsgNode> cs;
  cs.push_back(CsgNode::box(Vec(0.0, 0.0), Vec(1.0, 1.0)));
  for (int k = 0; k < L.teeth; ++k) {
    const double lo = k % 2 ? L.epsilon : 0.0;
    const double hi = k % 2 ? 1.0 : 1.0 - L.epsilon;
    cs.push_back(
        CsgNode::box(Vec(lo, L.h[size_t(k)]), Vec(hi, L.h[size_t(k)])));
  }
  return CsgNode::combine(CsgKind::Difference, std::move(cs));
}

// uniform discretization: one row of atoms per channel on the channel
// midline over the fully roofed strip [eps, 1-eps], row mass = channel
// height times strip width at surface density 1/2
inline DiscreteMeasure comb_strata(const CombLayout& L, int per_row, int ch_lo,
                                   int ch_hi) {
  DiscreteMeasure m;
  const double xa = L.epsilon;
  const double xb = 1.0 - L.epsilon;
  for (int k = ch_lo; k <= ch_hi; ++k) {
    const double y = L.mid(k);
    const double w =
        0.5 * (L.h[size_t(k)] - L.below(k)) * (xb - xa) / per_row;
    for (int i = 0; i < per_row; ++i)
      m.atoms.push_back({Vec(xa + (xb - xa) * (i + 0.5) / per_row, y), w});
  }
  return m;
}

// -- measures from JSON -------------------------------------------------------

inline DiscreteMeasure measure_from_json(const Json& j, int dim, const Vec& base,
                                         const std::string& path) {
  DiscreteMeasure m;
  if (j.contains("atoms")) {
    const Json& arr = j.at("atoms");
    if (!arr.is_array()) throw ConfigError(path + ".atoms: expected an array");
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string ap = path + ".atoms[" + std::to_string(i) + "]";
      m.atoms.push_back({detail::jvec(detail::jget(arr.at(i), "p", ap), dim, ap + ".p"),
                         detail::jnum(detail::jget(arr.at(i), "w", ap), ap + ".w")});
    }
    return m;
  }
  if (j.contains("comb_strata")) {
    const Json& c = j.at("comb_strata");
    const std::string cp = path + ".comb_strata";
    const int teeth = int(detail::jnum(detail::jget(c, "teeth", cp), cp + ".teeth"));
    const double eps = detail::jnum(detail::jget(c, "epsilon", cp), cp + ".epsilon");
    const int per_row = int(detail::jnum(detail::jget(c, "atoms_per_row", cp),
                                         cp + ".atoms_per_row"));
    const CombLayout L = comb_layout(teeth, eps);
    int lo = c.contains("channel_min") ? int(c.at("channel_min").get<double>()) : 1;
    int hi = c.contains("channel_max") ? int(c.at("channel_max").get<double>())
                                       : teeth - 1;
    if (lo < 1 || hi > teeth - 1 || lo > hi)
      throw ConfigError(cp + ".channel_min: invalid channel range");
    return comb_strata(L, per_row, lo, hi);
  }
  if (j.contains("dyadic")) {
    const Json& c = j.at("dyadic");
    const std::string cp = path + ".dyadic";
    const int levels = int(detail::jnum(detail::jget(c, "levels", cp), cp + ".levels"));
    const double expo = detail::jnum(detail::jget(c, "exponent", cp), cp + ".exponent");
    if (levels < 1) throw ConfigError(cp + ".levels: must be at least 1");
    for (int jx = 1; jx <= levels; ++jx) {
      Vec p = base;
      p[0] += std::pow(2.0, -jx);
      m.atoms.push_back({p, std::pow(2.0, -jx * expo)});
    }
    return m;
  }
  throw ConfigError(path + ": expected atoms, comb_strata, or dyadic");
}

// -- experiment configuration -------------------------------------------------

struct ExperimentConfig {
  std::string name = "experiment";
  int dimension = 2;
  Json domain;
  Json cover;  // null: cover equals domain
  std::vector<double> base_point;
  double kappa = 1;
  double min_side = 0.05;
  QuadConfig quad;
  uint64_t seed = 1;
  int verify_grid = 128;
  int sample_grid = 64;
  Json mu0_spec, mu_spec;

  static ExperimentConfig parse(const Json& j) {
    ExperimentConfig c;
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    c.dimension = int(detail::jnum(detail::jget(j, "dimension", "config"),
                                   "dimension"));
    if (c.dimension != 2 && c.dimension != 3)
      throw ConfigError("dimension: must be 2 or 3");
    c.domain = detail::jget(j, "domain", "config");
    c.cover = j.contains("cover") ? j.at("cover") : Json();
    const Json& bp = detail::jget(j, "base_point", "config");
    if (!bp.is_array() || int(bp.size()) != c.dimension)
      throw ConfigError("base_point: expected an array of " +
                        std::to_string(c.dimension) + " numbers");
    for (const auto& v : bp) c.base_point.push_back(detail::jnum(v, "base_point"));
    if (j.contains("kappa")) c.kappa = detail::jnum(j.at("kappa"), "kappa");
    if (c.kappa <= 0) throw ConfigError("kappa: must be positive");
    if (j.contains("whitney") && j.at("whitney").contains("min_side"))
      c.min_side = detail::jnum(j.at("whitney").at("min_side"), "whitney.min_side");
    if (c.min_side <= 0) throw ConfigError("whitney.min_side: must be positive");
    if (j.contains("quad")) {
      const Json& q = j.at("quad");
      if (q.contains("gauss_nodes"))
        c.quad.gauss_nodes = int(detail::jnum(q.at("gauss_nodes"), "quad.gauss_nodes"));
      if (q.contains("scan_nodes"))
        c.quad.scan_nodes = int(detail::jnum(q.at("scan_nodes"), "quad.scan_nodes"));
      if (q.contains("tol")) c.quad.tol = detail::jnum(q.at("tol"), "quad.tol");
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("grids")) {
      const Json& g = j.at("grids");
      if (g.contains("verify"))
        c.verify_grid = int(detail::jnum(g.at("verify"), "grids.verify"));
      if (g.contains("sample"))
        c.sample_grid = int(detail::jnum(g.at("sample"), "grids.sample"));
    }
    c.mu0_spec = detail::jget(j, "mu0", "config");
    c.mu_spec = detail::jget(j, "mu", "config");
    return c;
  }

  static ExperimentConfig load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file);
    Json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw ConfigError("config parse error in " + file + ": " + e.what());
    }
    return parse(j);
  }

  Json to_json() const {
    Json j;
    j["name"] = name;
    j["dimension"] = dimension;
    j["domain"] = domain;
    if (!cover.is_null()) j["cover"] = cover;
    j["base_point"] = base_point;
    j["kappa"] = kappa;
    j["whitney"] = Json{{"min_side", min_side}};
    j["quad"] = Json{{"gauss_nodes", quad.gauss_nodes},
                     {"scan_nodes", quad.scan_nodes},
                     {"tol", quad.tol}};
    j["seed"] = seed;
    j["grids"] = Json{{"verify", verify_grid}, {"sample", sample_grid}};
    j["mu0"] = mu0_spec;
    j["mu"] = mu_spec;
    return j;
  }
};

inline DiscreteMeasure mu_from_spec(const Json& spec, const DiscreteMeasure& mu0,
                                    int dim, const Vec& base, double kappa) {
  if (spec.contains("dipole")) {
    const Json& d = spec.at("dipole");
    const int plus = int(detail::jnum(detail::jget(d, "plus", "mu.dipole"),
                                      "mu.dipole.plus"));
    const int minus = int(detail::jnum(detail::jget(d, "minus", "mu.dipole"),
                                       "mu.dipole.minus"));
    const int na = int(mu0.atoms.size());
    if (plus < 0 || plus >= na || minus < 0 || minus >= na || plus == minus)
      throw ConfigError("mu.dipole: atom indices out of range");
    double mass = kappa * std::min(mu0.atoms[size_t(plus)].w,
                                   mu0.atoms[size_t(minus)].w);
    if (d.contains("mass")) mass = detail::jnum(d.at("mass"), "mu.dipole.mass");
    DiscreteMeasure m;
    m.atoms.push_back({mu0.atoms[size_t(plus)].p, mass});
    m.atoms.push_back({mu0.atoms[size_t(minus)].p, -mass});
    return m;
  }
  return measure_from_json(spec, dim, base, "mu");
}

// -- session ------------------------------------------------------------------

class Session {
 public:
  ExperimentConfig cfg;
  DomainPair pair;
  CubeComplex cx;
  DiscreteMeasure mu0, mu;
  std::unique_ptr<PathSystem> sys;
  std::unique_ptr<WeightEvaluator> weight;
  std::unique_ptr<KernelContext> kc;
  std::unique_ptr<FieldEvaluator> field;

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  double lambda() const { return pair.lambda; }
  double scale() const { return pair.cover.bbox_diameter(); }

  // force_self_cover: ignore any configured cover and use the domain itself
  static std::unique_ptr<Session> build(ExperimentConfig cfg,
                                        bool force_self_cover = false) {
    auto s = std::unique_ptr<Session>(new Session());
    s->cfg = std::move(cfg);
    const int dim = s->cfg.dimension;
    const CsgShape omega(csg_from_json(s->cfg.domain, dim, "domain"), dim);
    CsgShape cover = omega;
    const bool own_cover = !force_self_cover && !s->cfg.cover.is_null();
    if (own_cover) cover = CsgShape(csg_from_json(s->cfg.cover, dim, "cover"), dim);
    Vec x0 = Vec::zero(dim);
    for (int d = 0; d < dim; ++d) x0[d] = s->cfg.base_point[size_t(d)];

    if (own_cover) {
      // the realized set must sit inside the cover
      Vec lo = Vec::zero(dim), hi = Vec::zero(dim);
      omega.bbox(lo, hi);
      Rng rng(s->cfg.seed ^ 0x9e3779b97f4a7c15ull);
      for (int i = 0; i < 4000; ++i) {
        const Vec p = rng.point_in_box(lo, hi);
        if (omega.contains(p) && !cover.contains(p))
          throw ConfigError("cover: realized set is not contained in the cover");
      }
    }

    s->pair = DomainPair::normalize(omega, cover, x0);

    const auto orep = DomainPair::shape_oracle_check(s->pair.cover, 400, s->cfg.seed);
    if (!orep.consistent)
      throw ConfigError("cover: clearance calculus underestimates the boundary "
                        "distance beyond sampling tolerance");

    s->cx = decompose(s->pair, s->cfg.min_side);
    s->sys = std::make_unique<PathSystem>(s->pair, s->cx);

    const double sc = s->scale();
    DiscreteMeasure m0 = measure_from_json(s->cfg.mu0_spec, dim, x0, "mu0");
    if (m0.atoms.empty()) throw ConfigError("mu0: needs at least one atom");
    for (size_t i = 0; i < m0.atoms.size(); ++i) {
      const std::string ap = "mu0.atoms[" + std::to_string(i) + "]";
      if (!(m0.atoms[i].w > 0))
        throw ConfigError(ap + ".w: reference weights must be positive");
      const Vec p = s->pair.map_to_normalized(m0.atoms[i].p);
      if (!s->pair.omega.contains(p))
        throw ConfigError(ap + ".p: atom lies outside the domain");
      if (!(s->pair.d_hat(p) > 2 * s->cx.min_side))
        throw ConfigError(ap + ".p: atom is below the working clearance scale");
      if (dist(p, s->pair.x0) <= 1e-12 * sc)
        throw ConfigError(ap + ".p: atom coincides with the base point");
      for (size_t k = 0; k < i; ++k)
        if (dist(p, s->pair.map_to_normalized(m0.atoms[k].p)) <= 1e-12 * sc)
          throw ConfigError(ap + ".p: atom coincides with atom " + std::to_string(k));
      try {
        s->sys->path(p);
      } catch (const Error& e) {
        throw ConfigError(ap + ".p: " + e.what());
      }
      s->mu0.atoms.push_back({p, m0.atoms[i].w});
    }
    s->weight = std::make_unique<WeightEvaluator>(*s->sys, s->mu0);

    DiscreteMeasure m1 = mu_from_spec(s->cfg.mu_spec, m0, dim, x0, s->cfg.kappa);
    for (const auto& a : m1.atoms)
      s->mu.atoms.push_back({s->pair.map_to_normalized(a.p), a.w});
    validate_pair(s->mu, s->mu0, s->cfg.kappa, sc);

    s->kc = std::make_unique<KernelContext>(s->pair, s->cfg.quad);
    s->field = std::make_unique<FieldEvaluator>(*s->sys, *s->weight, s->mu, *s->kc);
    return s;
  }

 private:
  Session() = default;
};

// -- artifact writers (deterministic byte output) -----------------------------

inline void write_cubes_csv(std::ostream& os, const CubeComplex& cx) {
  os << "index,generation";
  const char* ax[] = {"x", "y", "z"};
  for (int d = 0; d < cx.dim; ++d) os << ",center_" << ax[d];
  os << ",side,d_hat_center\n";
  for (const auto& c : cx.cubes) {
    os << c.index << "," << c.generation;
    for (int d = 0; d < cx.dim; ++d) os << "," << fmt_double(c.center[d]);
    os << "," << fmt_double(c.side) << "," << fmt_double(c.dhat_center) << "\n";
  }
}

struct WeightRow {
  Vec x;
  double i1 = 0, om = 0, dh = 0, w0 = 0;
};

inline std::vector<WeightRow> sample_weight(const Session& s, int grid) {
  const CsgShape& cover = s.pair.cover;
  const int n = cover.dim();
  Vec lo = Vec::zero(n), hi = Vec::zero(n);
  cover.bbox(lo, hi);
  const double sc = s.scale();
  std::vector<Vec> pts;
  std::array<int, 3> idx{0, 0, 0};
  const int kmax = n == 3 ? grid : 1;
  for (idx[0] = 0; idx[0] < grid; ++idx[0])
    for (idx[1] = 0; idx[1] < grid; ++idx[1])
      for (idx[2] = 0; idx[2] < kmax; ++idx[2]) {
        Vec p = Vec::zero(n);
        for (int d = 0; d < n; ++d)
          p[d] = lo[d] + (hi[d] - lo[d]) * (idx[size_t(d)] + 0.5) / grid;
        if (!(s.pair.d_hat(p) > s.cx.min_side)) continue;
        bool on_atom = false;
        for (const auto& a : s.mu0.atoms)
          if (dist(p, a.p) <= 1e-12 * sc) on_atom = true;
        if (!on_atom) pts.push_back(p);
      }
  std::vector<WeightRow> rows(pts.size());
  parallel_for(pts.size(), [&](size_t i) {
    WeightRow r;
    r.x = pts[i];
    r.i1 = s.weight->i1(pts[i]);
    r.om = s.weight->omega(pts[i]);
    r.dh = s.pair.d_hat(pts[i]);
    r.w0 = r.i1 + r.om * std::pow(r.dh, 1 - n);
    rows[i] = r;
  });
  return rows;
}

inline void write_weight_csv(std::ostream& os, const std::vector<WeightRow>& rows,
                             int dim) {
  const char* ax[] = {"x", "y", "z"};
  for (int d = 0; d < dim; ++d) os << (d ? "," : "") << ax[d];
  os << ",I1,omega,d_hat,w0\n";
  for (const auto& r : rows) {
    for (int d = 0; d < dim; ++d) os << (d ? "," : "") << fmt_double(r.x[d]);
    os << "," << fmt_double(r.i1) << "," << fmt_double(r.om) << ","
       << fmt_double(r.dh) << "," << fmt_double(r.w0) << "\n";
  }
}

inline void write_field_csv(std::ostream& os, const std::vector<FieldRow>& rows,
                            int dim) {
  const char* ax[] = {"x", "y", "z"};
  for (int d = 0; d < dim; ++d) os << (d ? "," : "") << ax[d];
  for (int d = 0; d < dim; ++d) os << ",u_" << ax[d];
  os << ",w0,d_hat\n";
  for (const auto& r : rows) {
    for (int d = 0; d < dim; ++d) os << (d ? "," : "") << fmt_double(r.x[d]);
    for (int d = 0; d < dim; ++d) os << "," << fmt_double(r.u[d]);
    os << "," << fmt_double(r.w0) << "," << fmt_double(r.d_hat) << "\n";
  }
}

struct PathSample {
  Vec y;
  Polyline pl;
  RadiusProfile prof;
};

inline std::vector<PathSample> sample_paths(const Session& s, int count) {
  Rng rng(s.cfg.seed);
  const int n = s.pair.dim();
  Vec lo = Vec::zero(n), hi = Vec::zero(n);
  s.pair.cover.bbox(lo, hi);
  std::vector<PathSample> out;
  const double sc = s.scale();
  for (int attempt = 0; attempt < 1000 * count && int(out.size()) < count;
       ++attempt) {
    const Vec p = rng.point_in_box(lo, hi);
    if (!(s.pair.d_hat(p) > 2 * s.cx.min_side)) continue;
    if (dist(p, s.pair.x0) <= 1e-6 * sc) continue;
    PathSample ps;
    ps.y = p;
    try {
      ps.pl = s.sys->path(p);
      ps.prof = radius_profile(*s.sys, ps.pl, p);
    } catch (const Error&) {
      continue;
    }
    out.push_back(std::move(ps));
  }
  if (int(out.size()) < count)
    throw ConfigError("paths: could not draw enough admissible sample points");
  return out;
}

inline void write_paths_csv(std::ostream& os, const std::vector<PathSample>& ps,
                            int dim) {
  const char* ax[] = {"x", "y", "z"};
  os << "sample,vertex";
  for (int d = 0; d < dim; ++d) os << "," << ax[d];
  os << ",cum_length\n";
  for (size_t i = 0; i < ps.size(); ++i)
    for (size_t v = 0; v < ps[i].pl.v.size(); ++v) {
      os << i << "," << v;
      for (int d = 0; d < dim; ++d) os << "," << fmt_double(ps[i].pl.v[v][d]);
      os << "," << fmt_double(ps[i].pl.cum[v]) << "\n";
    }
}

inline void write_path_profiles_csv(std::ostream& os,
                                    const std::vector<PathSample>& ps, int dim) {
  const char* ax[] = {"x", "y", "z"};
  os << "sample";
  for (int d = 0; d < dim; ++d) os << ",y_" << ax[d];
  os << ",case,tau,alpha,total_length,d_hat\n";
  for (size_t i = 0; i < ps.size(); ++i) {
    os << i;
    for (int d = 0; d < dim; ++d) os << "," << fmt_double(ps[i].y[d]);
    os << "," << ps[i].prof.case_id << "," << fmt_double(ps[i].prof.tau) << ","
       << fmt_double(ps[i].prof.alpha) << "," << fmt_double(ps[i].pl.total)
       << "," << fmt_double(ps[i].prof.dhat_y) << "\n";
  }
}

}  // namespace divsolve
