// cellavg command-line tool.
//
// Subcommands:
//   discretize  build a piecewise-constant cell-average field and dump it
//   bound       evaluate a convergence bound from norms and geometry
//   truncate    find the truncation half-width L for a given tail budget
//   study       run a convergence study config and write the CSV report
//   selftest    run built-in structural identity checks (no fixtures needed)
//
// Exit codes: 0 success, 1 domain error or failed check, 2 usage error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cellavg/bounds.hpp"
#include "cellavg/builtins.hpp"
#include "cellavg/discretize.hpp"
#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"
#include "cellavg/harness.hpp"
#include "cellavg/io.hpp"
#include "cellavg/truncation.hpp"

namespace {

using namespace cellavg;

struct DiscretizeOptions {
  std::string rho_spec;
  std::vector<double> box;
  int n = 0;
  std::string output;
  int threads = 1;
};

int run_discretize(const DiscretizeOptions& opt) {
  ScalarField rho = parse_field_spec(opt.rho_spec);
  std::optional<BoxDomain> box;
  if (!opt.box.empty()) {
    box = BoxDomain(opt.box[0], opt.box[1], opt.box[2], opt.box[3]);
  } else if (rho.support) {
    box = rho.support;
  } else {
    throw ConfigError(
        "no discretization box: pass --box or use a field with a known "
        "support box");
  }
  const Grid grid = make_grid(*box, opt.n);
  const PiecewiseConstantField pc =
      build_density_approx(rho, grid, QuadratureSpec{}, opt.threads);
  write_cell_field_file(opt.output, pc);

  double min_v = pc.values.v.front(), max_v = pc.values.v.front();
  for (double v : pc.values.v) {
    min_v = std::min(min_v, v);
    max_v = std::max(max_v, v);
  }
  std::cout << "n=" << grid.n << "\n";
  std::cout << "mass=" << fmt_double(pc.mass()) << "\n";
  std::cout << "min=" << fmt_double(min_v) << "\n";
  std::cout << "max=" << fmt_double(max_v) << "\n";
  std::cout << "output=" << opt.output << "\n";
  return 0;
}

struct BoundOptions {
  std::string regime_text;
  std::string variant_text = "density";
  int n = 0;
  std::optional<double> delta1, delta2, half_width, eps;
  std::optional<double> rho_l1, rho_sup, rho_dx, rho_dy;
  std::optional<double> phi_sup, phi_dx, phi_dy;
  std::optional<double> omega_sup, omega_dx, omega_dy;
};

int run_bound(const BoundOptions& opt) {
  const Regime regime = regime_from_name(opt.regime_text);
  BoundVariant variant;
  if (opt.variant_text == "density") {
    variant = BoundVariant::density;
  } else if (opt.variant_text == "quantity") {
    variant = BoundVariant::quantity;
  } else {
    throw ConfigError("unknown variant '" + opt.variant_text +
                      "' (expected density or quantity)");
  }

  BoundInputs in;
  in.n = opt.n;
  if (regime_truncated(regime)) {
    if (opt.delta1 || opt.delta2) {
      throw ConfigError(
          "truncated regimes derive the box extents from --L; do not pass "
          "--delta1/--delta2");
    }
    if (!opt.half_width) {
      throw ConfigError("truncated regimes require --L");
    }
    in.half_width = opt.half_width;
    in.eps = opt.eps;  // validated by theorem_bound
    in.delta1 = in.delta2 = 2.0 * *opt.half_width;
  } else {
    if (opt.half_width) {
      throw ConfigError("compact regimes take --delta1/--delta2, not --L");
    }
    if (!opt.delta1 || !opt.delta2) {
      throw ConfigError("compact regimes require --delta1 and --delta2");
    }
    in.delta1 = *opt.delta1;
    in.delta2 = *opt.delta2;
    in.eps = opt.eps;  // theorem_bound rejects eps for compact regimes
  }
  in.rho_norms.l1 = opt.rho_l1;
  in.rho_norms.sup = opt.rho_sup;
  in.rho_norms.dx_sup = opt.rho_dx;
  in.rho_norms.dy_sup = opt.rho_dy;
  in.phi_norms.sup = opt.phi_sup;
  in.phi_norms.dx_sup = opt.phi_dx;
  in.phi_norms.dy_sup = opt.phi_dy;
  in.omega_norms.sup = opt.omega_sup;
  in.omega_norms.dx_sup = opt.omega_dx;
  in.omega_norms.dy_sup = opt.omega_dy;

  const BoundReport report = theorem_bound(regime, variant, in);
  std::cout << "regime=" << regime_name(report.regime) << "\n";
  std::cout << "variant="
            << (report.variant == BoundVariant::density ? "density"
                                                        : "quantity")
            << "\n";
  std::cout << "n=" << report.n << "\n";
  for (const auto& [key, value] : report.constants) {
    std::cout << key << "=" << fmt_double(value) << "\n";
  }
  std::cout << "bound=" << fmt_double(report.bound_value) << "\n";
  return 0;
}

struct TruncateOptions {
  std::string rho_spec;
  double eps = 0.0;
  double resolution = 1e-3;
  std::optional<double> total_mass;
};

int run_truncate(const TruncateOptions& opt) {
  ScalarField rho = parse_field_spec(opt.rho_spec);
  double total_mass;
  if (opt.total_mass) {
    total_mass = *opt.total_mass;
  } else if (rho.norms.l1) {
    total_mass = *rho.norms.l1;
  } else if (rho.support) {
    rho.norms = resolve_norms(rho, *rho.support);
    total_mass = *rho.norms.l1;
  } else {
    throw ConfigError(
        "total mass unknown: pass --total-mass or use a field with an "
        "integral norm or a support box");
  }
  const TruncationResult res =
      find_truncation_L(rho, opt.eps, total_mass, opt.resolution);
  std::cout << "half_width=" << fmt_double(res.half_width) << "\n";
  std::cout << "achieved_tail=" << fmt_double(res.achieved_tail) << "\n";
  std::cout << "eps=" << fmt_double(res.eps) << "\n";
  std::cout << "bracket_lo=" << fmt_double(res.bracket_lo) << "\n";
  std::cout << "bracket_hi=" << fmt_double(res.bracket_hi) << "\n";
  return 0;
}

struct StudyOptions {
  std::string config_path;
  std::optional<int> threads;
};

int run_studies(const StudyOptions& opt) {
  StudyConfig config = load_study_config(opt.config_path);
  if (opt.threads) {
    for (StudyCase& c : config.cases) c.threads = *opt.threads;
  }

  std::vector<StudyResult> results;
  results.reserve(config.cases.size());
  for (const StudyCase& c : config.cases) {
    results.push_back(run_study(c));
  }

  std::ofstream out(config.output);
  if (!out) {
    throw Error("cannot open '" + config.output + "' for writing");
  }
  write_study_csv(out, results);
  out.flush();
  if (!out) throw Error("write to '" + config.output + "' failed");
  std::cout << "wrote " << config.output << "\n";

  bool all_pass = true;
  const auto report_variant = [&](const std::string& name,
                                  const char* variant,
                                  const std::vector<ConvergenceRecord>& recs) {
    if (recs.empty()) return;
    const BoundCheckReport check = verify_bounds(recs, config.slack);
    double worst = 0.0;
    for (const BoundCheck& b : check.checks) {
      worst = std::max(worst, b.limit > 0.0 ? b.measured_error / b.limit : 0.0);
    }
    std::cout << name << " " << variant << ": "
              << (check.all_pass ? "PASS" : "FAIL")
              << " (worst error/limit " << fmt_double(worst) << ")\n";
    all_pass = all_pass && check.all_pass;
  };
  for (const StudyResult& r : results) {
    report_variant(r.name, "density", r.density);
    report_variant(r.name, "quantity", r.quantity);
  }
  std::cout << "study: " << (all_pass ? "PASS" : "FAIL") << "\n";
  return all_pass ? 0 : 1;
}

struct SelftestOptions {
  double residual_tol = 1e-9;
  int threads = 1;
};

int run_selftest(const SelftestOptions& opt) {
  if (!(opt.residual_tol >= 0.0)) {
    throw ConfigError("--residual-tol must be nonnegative");
  }
  const double smooth_tol = opt.residual_tol;
  const double indicator_tol = 100.0 * opt.residual_tol;

  const ScalarField bump = make_cos2_bump();
  const ScalarField wave = make_cos2_wave();
  const ScalarField disk = make_disk_indicator(0.7);
  const BoxDomain box(-1.0, 1.0, -1.0, 1.0);
  const Grid grid = make_grid(box, 4);

  bool all_pass = true;
  const auto check = [&](const char* name, double value, double tol) {
    const bool pass = value <= tol;
    std::cout << "selftest " << name << ": " << (pass ? "PASS" : "FAIL")
              << " (value " << fmt_double(value) << ", tolerance "
              << fmt_double(tol) << ")\n";
    all_pass = all_pass && pass;
  };

  check("density residual, smooth field",
        decomposition_residual(bump, grid, wave, QuadratureSpec{}, opt.threads),
        smooth_tol);
  check("quantity residual, smooth fields",
        quantity_decomposition_residual(bump, wave, grid, wave,
                                        QuadratureSpec{}, opt.threads),
        smooth_tol);
  check("density residual, disk indicator",
        decomposition_residual(disk, grid, wave, QuadratureSpec{}, opt.threads),
        indicator_tol);

  // The same integral evaluated under two unrelated quadrature setups must
  // agree to well below the target tolerance.
  QuadratureSpec coarse;
  coarse.points_per_axis_per_panel = 6;
  coarse.panels_per_axis = 2;
  QuadratureSpec fine;
  fine.points_per_axis_per_panel = 10;
  fine.panels_per_axis = 3;
  const double i_coarse = integrate_product_box(bump, wave, box, coarse);
  const double i_fine = integrate_product_box(bump, wave, box, fine);
  check("quadrature setup independence", std::abs(i_coarse - i_fine),
        1e-10 * std::max(1.0, std::abs(i_fine)));

  std::cout << "selftest: " << (all_pass ? "PASS" : "FAIL") << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cell-average approximation toolkit for conservation-law initial "
      "data"};
  app.require_subcommand(1);

  DiscretizeOptions dopt;
  CLI::App* discretize = app.add_subcommand(
      "discretize", "build a cell-average field and write its dump");
  discretize->add_option("--rho", dopt.rho_spec,
                         "density field spec (builtin or 'file <path>')")
      ->required();
  discretize->add_option("--box", dopt.box,
                         "grid box: x_lo x_hi y_lo y_hi (default: field "
                         "support)")
      ->expected(4);
  discretize->add_option("--n", dopt.n, "cells per axis")->required();
  discretize->add_option("--output", dopt.output, "cell-field dump path")
      ->required();
  discretize->add_option("--threads", dopt.threads, "worker thread cap")
      ->check(CLI::PositiveNumber);

  BoundOptions bopt;
  CLI::App* bound = app.add_subcommand(
      "bound", "evaluate a convergence bound from norms and geometry");
  bound->add_option("--regime", bopt.regime_text,
                    "smooth_compact | smooth_truncated | bounded_compact | "
                    "bounded_truncated")
      ->required();
  bound->add_option("--variant", bopt.variant_text, "density | quantity");
  bound->add_option("--n", bopt.n, "cells per axis")->required();
  bound->add_option("--delta1", bopt.delta1, "box extent along x (compact)");
  bound->add_option("--delta2", bopt.delta2, "box extent along y (compact)");
  bound->add_option("--L", bopt.half_width, "truncation half-width");
  bound->add_option("--eps", bopt.eps, "tail budget (truncated regimes)");
  bound->add_option("--rho-l1", bopt.rho_l1, "integral norm of rho");
  bound->add_option("--rho-sup", bopt.rho_sup, "sup norm of rho");
  bound->add_option("--rho-dx-sup", bopt.rho_dx, "sup norm of drho/dx");
  bound->add_option("--rho-dy-sup", bopt.rho_dy, "sup norm of drho/dy");
  bound->add_option("--phi-sup", bopt.phi_sup, "sup norm of phi");
  bound->add_option("--phi-dx-sup", bopt.phi_dx, "sup norm of dphi/dx");
  bound->add_option("--phi-dy-sup", bopt.phi_dy, "sup norm of dphi/dy");
  bound->add_option("--omega-sup", bopt.omega_sup, "sup norm of omega");
  bound->add_option("--omega-dx-sup", bopt.omega_dx, "sup norm of domega/dx");
  bound->add_option("--omega-dy-sup", bopt.omega_dy, "sup norm of domega/dy");

  TruncateOptions topt;
  CLI::App* truncate = app.add_subcommand(
      "truncate", "find the truncation half-width for a tail budget");
  truncate->add_option("--rho", topt.rho_spec, "density field spec")
      ->required();
  truncate->add_option("--eps", topt.eps, "tail budget")->required();
  truncate->add_option("--resolution", topt.resolution,
                       "half-width search resolution");
  truncate->add_option("--total-mass", topt.total_mass,
                       "total integral of |rho| (default: field norm data)");

  StudyOptions sopt;
  CLI::App* study = app.add_subcommand(
      "study", "run a convergence study config and write the CSV report");
  study->add_option("config", sopt.config_path, "study config path")
      ->required();
  study->add_option("--threads", sopt.threads, "worker thread cap")
      ->check(CLI::PositiveNumber);

  SelftestOptions fopt;
  CLI::App* selftest = app.add_subcommand(
      "selftest", "run built-in structural identity checks");
  selftest->add_option("--residual-tol", fopt.residual_tol,
                       "smooth-field residual tolerance (indicator fields "
                       "get 100x)");
  selftest->add_option("--threads", fopt.threads, "worker thread cap")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*discretize) return run_discretize(dopt);
    if (*bound) return run_bound(bopt);
    if (*truncate) return run_truncate(topt);
    if (*study) return run_studies(sopt);
    if (*selftest) return run_selftest(fopt);
  } catch (const cellavg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cellavg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
