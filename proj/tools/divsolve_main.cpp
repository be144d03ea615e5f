// Command-line driver: builds a session from an experiment config and emits
// deterministic CSV/JSON artifacts for the decomposition, path family, weight,
// solution field, verification suites, and the comb/singular studies.

#include "divsolve/drivers.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace divsolve;

namespace {

struct CommonOpts {
  std::string experiment;
  std::string out = ".";
  int grid = 0;
  uint64_t seed = 0;
  int gauss_nodes = 0;
  int scan_nodes = 0;
  double min_side = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--experiment", o.experiment, "experiment config (JSON)")
      ->required();
  cmd->add_option("--out", o.out, "output directory (default: current)");
  cmd->add_option("--grid", o.grid, "override grid resolution");
  o.seed_opt = cmd->add_option("--seed", o.seed, "override sampling seed");
  cmd->add_option("--quad.gauss_nodes", o.gauss_nodes,
                  "override kernel quadrature order");
  cmd->add_option("--quad.scan_nodes", o.scan_nodes,
                  "override kernel support scan density");
  cmd->add_option("--whitney.min_side", o.min_side,
                  "override the smallest cube side");
}

ExperimentConfig load_config(const CommonOpts& o) {
  ExperimentConfig cfg = ExperimentConfig::load(o.experiment);
  if (o.grid > 0) {
    cfg.verify_grid = o.grid;
    cfg.sample_grid = o.grid;
  }
  if (o.seed_opt && o.seed_opt->count() > 0) cfg.seed = o.seed;
  if (o.gauss_nodes > 0) cfg.quad.gauss_nodes = o.gauss_nodes;
  if (o.scan_nodes > 0) cfg.quad.scan_nodes = o.scan_nodes;
  if (o.min_side > 0) cfg.min_side = o.min_side;
  return cfg;
}

std::ofstream open_out(const CommonOpts& o, const std::string& base,
                       const std::string& suffix) {
  fs::create_directories(o.out);
  const fs::path p = fs::path(o.out) / (base + suffix);
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write artifact: " + p.string());
  std::cout << "artifact: " << p.string() << "\n";
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constructive solution of div u = mu for atomic measures"};
  app.require_subcommand(1);
  int rc = 0;

  CommonOpts dec_o;
  auto* dec = app.add_subcommand("decompose", "emit the cube decomposition");
  add_common(dec, dec_o);
  dec->callback([&] {
    const ExperimentConfig cfg = load_config(dec_o);
    auto s = Session::build(cfg);
    auto f = open_out(dec_o, cfg.name, "-cubes.csv");
    write_cubes_csv(f, s->cx);
    std::cout << "cubes: " << s->cx.cubes.size()
              << " generations: " << s->cx.max_generation
              << " min_side: " << fmt_double(s->cx.min_side)
              << " lambda: " << fmt_double(s->lambda()) << "\n";
  });

  CommonOpts pat_o;
  int path_samples = 32, stat_samples = 100;
  auto* pat = app.add_subcommand("paths", "emit sampled paths and radius data");
  add_common(pat, pat_o);
  pat->add_option("--sample", path_samples, "number of sampled start points");
  pat->add_option("--stat-sample", stat_samples,
                  "number of start points for the statistics scan");
  pat->callback([&] {
    const ExperimentConfig cfg = load_config(pat_o);
    auto s = Session::build(cfg);
    const auto ps = sample_paths(*s, path_samples);
    auto f1 = open_out(pat_o, cfg.name, "-paths.csv");
    write_paths_csv(f1, ps, s->pair.dim());
    auto f2 = open_out(pat_o, cfg.name, "-path-profiles.csv");
    write_path_profiles_csv(f2, ps, s->pair.dim());
    const PathStatsReport st = path_statistics(*s, stat_samples);
    auto f3 = open_out(pat_o, cfg.name, "-path-stats.json");
    f3 << st.to_json().dump(2) << "\n";
    std::cout << "paths: " << ps.size()
              << " tube_violations: " << st.tube_violations
              << " alpha_max: " << fmt_double(st.alpha_max)
              << " c_path: " << fmt_double(st.c_path)
              << " ahlfors_max: " << fmt_double(st.ahlfors_max) << "\n";
  });

  CommonOpts wgt_o;
  auto* wgt = app.add_subcommand("weight", "emit the weight on a sample grid");
  add_common(wgt, wgt_o);
  wgt->callback([&] {
    const ExperimentConfig cfg = load_config(wgt_o);
    auto s = Session::build(cfg);
    const auto rows = sample_weight(*s, cfg.sample_grid);
    auto f = open_out(wgt_o, cfg.name, "-weight.csv");
    write_weight_csv(f, rows, s->pair.dim());
    std::cout << "weight rows: " << rows.size() << "\n";
  });

  CommonOpts sol_o;
  auto* sol = app.add_subcommand("solve", "emit the solution field on a grid");
  add_common(sol, sol_o);
  sol->callback([&] {
    const ExperimentConfig cfg = load_config(sol_o);
    auto s = Session::build(cfg);
    size_t skips = 0;
    const auto rows = s->field->sample_field(cfg.sample_grid, &skips);
    auto f = open_out(sol_o, cfg.name, "-field.csv");
    write_field_csv(f, rows, s->pair.dim());
    std::cout << "field rows: " << rows.size() << " near_atom_skips: " << skips
              << " weighted_sup: "
              << fmt_double(s->field->weighted_sup(rows, cfg.kappa)) << "\n";
  });

  CommonOpts ver_o;
  std::string suite = "weak";
  auto* ver = app.add_subcommand("verify", "run a verification suite");
  add_common(ver, ver_o);
  ver->add_option(
      "--suite", suite,
      "weak | lipschitz | poincare | weights | comb | singular | full");
  ver->callback([&] {
    const ExperimentConfig cfg = load_config(ver_o);
    // the comb and singular suites build their own session pairs
    VerifyOutcome out;
    if (suite == "comb") {
      const CombReport rep = comb_experiment(cfg);
      out = {rep.to_json(), rep.pass()};
    } else if (suite == "singular") {
      const SingularReport rep = singular_probe(cfg);
      out = {rep.to_json(), rep.pass()};
    } else {
      auto s = Session::build(cfg);
      out = run_verify(*s, cfg.verify_grid, suite);
    }
    auto f = open_out(ver_o, cfg.name, "-verify.json");
    f << out.report.dump(2) << "\n";
    std::cout << "verify[" << suite << "] "
              << (out.pass ? "pass" : "FAIL") << "\n";
    if (!out.pass) rc = 1;
  });

  CommonOpts cmb_o;
  auto* cmb = app.add_subcommand("comb", "comb-domain weight comparison");
  add_common(cmb, cmb_o);
  cmb->callback([&] {
    const ExperimentConfig cfg = load_config(cmb_o);
    const CombReport rep = comb_experiment(cfg);
    auto f = open_out(cmb_o, cfg.name, "-comb.json");
    f << rep.to_json().dump(2) << "\n";
    auto c = open_out(cmb_o, cfg.name, "-comb.csv");
    c << "channel,h_top,h_bot,predicted,measured_self,measured_square\n";
    for (const auto& ch : rep.channels)
      c << ch.k << "," << fmt_double(ch.h_top) << "," << fmt_double(ch.h_bot)
        << "," << fmt_double(ch.predicted) << ","
        << fmt_double(ch.measured_self) << ","
        << fmt_double(ch.measured_square) << "\n";
    std::cout << "comb fit_self: " << fmt_double(rep.fit_self)
              << " fit_square: " << fmt_double(rep.fit_square)
              << " max_cover_ratio: " << fmt_double(rep.max_cover_ratio)
              << " " << (rep.pass() ? "pass" : "FAIL") << "\n";
    if (!rep.pass()) rc = 1;
  });

  CommonOpts sng_o;
  auto* sng = app.add_subcommand("singular", "graded-mass weight probe");
  add_common(sng, sng_o);
  sng->callback([&] {
    const ExperimentConfig cfg = load_config(sng_o);
    const SingularReport rep = singular_probe(cfg);
    auto f = open_out(sng_o, cfg.name, "-singular.json");
    f << rep.to_json().dump(2) << "\n";
    auto c = open_out(sng_o, cfg.name, "-singular.csv");
    c << "level,radius,max_graded,max_uniform\n";
    for (const auto& sh : rep.shells)
      c << sh.level << "," << fmt_double(sh.radius) << ","
        << fmt_double(sh.max_graded) << "," << fmt_double(sh.max_uniform)
        << "\n";
    std::cout << "singular slope_graded: " << fmt_double(rep.slope_graded)
              << " slope_uniform: " << fmt_double(rep.slope_uniform) << " "
              << (rep.pass() ? "pass" : "FAIL") << "\n";
    if (!rep.pass()) rc = 1;
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
