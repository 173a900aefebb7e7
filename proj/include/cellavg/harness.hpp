#pragma once

// Convergence-study harness: sweep N, measure weak-form errors against
// quadrature references, evaluate the regime bounds, and regress empirical
// convergence order.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cellavg/bounds.hpp"
#include "cellavg/discretize.hpp"
#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"
#include "cellavg/quadrature.hpp"
#include "cellavg/truncation.hpp"

namespace cellavg {

struct StudyCase {
  std::string name;
  ScalarField rho;
  ScalarField phi;
  std::optional<ScalarField> omega;
  Regime regime = Regime::smooth_compact;
  std::optional<double> eps;  // truncated regimes only
  std::vector<int> n_values{4, 8, 16, 32, 64};
  QuadratureSpec quad{};
  double truncation_resolution = 1e-3;
  std::map<std::string, double> overrides;  // pinned bound constants
  int threads = 1;
};

struct ConvergenceRecord {
  int n = 0;
  double measured_error = 0.0;
  double bound = 0.0;
  double ratio = 0.0;  // measured / bound; 0 when both vanish
};

struct OrderEstimate {
  double slope = 0.0;      // least-squares slope of log(error) vs log(N)
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_used = 0;
};

struct StudyResult {
  std::string name;
  Regime regime = Regime::smooth_compact;
  std::optional<BoxDomain> box;          // approximation box actually used
  std::optional<double> half_width;      // truncated regimes
  std::optional<double> eps;
  bool norms_estimated = false;          // any needed norm filled by estimators
  std::vector<ConvergenceRecord> density;
  std::vector<ConvergenceRecord> quantity;  // empty without omega
  std::vector<std::pair<std::string, double>> constants;  // from bound reports
};

inline void validate_study_case(const StudyCase& c) {
  if (c.name.empty()) {
    throw ConfigError("study case needs a nonempty name");
  }
  if (c.n_values.empty()) {
    throw ConfigError("study case '" + c.name + "' has an empty N list");
  }
  for (size_t k = 0; k < c.n_values.size(); ++k) {
    if (c.n_values[k] < 1) {
      throw ConfigError("study case '" + c.name +
                        "' has a nonpositive N value");
    }
    if (k > 0 && c.n_values[k] <= c.n_values[k - 1]) {
      throw ConfigError("study case '" + c.name +
                        "' needs strictly ascending N values");
    }
  }
  if (regime_truncated(c.regime)) {
    if (!c.eps) {
      throw ConfigError("study case '" + c.name +
                        "': truncated regimes require eps");
    }
    if (!(*c.eps > 0.0) || !std::isfinite(*c.eps)) {
      throw ConfigError("study case '" + c.name +
                        "': eps must be positive and finite");
    }
  } else {
    if (c.eps) {
      throw ConfigError("study case '" + c.name +
                        "': compact regimes take no eps");
    }
    if (!c.rho.support) {
      throw ConfigError(
          "study case '" + c.name +
          "': compact regimes require a declared support box on rho");
    }
  }
  validate_quadrature_spec(c.quad);
}

namespace detail {

// Norm entries each bound formula consumes, per field role.  Entries beyond
// these may stay unresolved without marking the study as estimator-based.
struct NeededNorms {
  bool rho_l1 = false, rho_sup = false, rho_dx = false, rho_dy = false;
  bool phi_sup = false, phi_dx = true, phi_dy = true;
  bool omega_sup = false, omega_dx = false, omega_dy = false;
};

inline NeededNorms needed_norms(Regime regime, bool has_omega) {
  NeededNorms need;
  if (regime_smooth(regime)) {
    need.rho_dx = need.rho_dy = true;
  } else {
    need.rho_l1 = need.rho_sup = true;
  }
  if (regime_truncated(regime)) need.phi_sup = true;
  if (has_omega) {
    need.rho_l1 = true;  // quantity coefficient uses the density mass
    need.phi_sup = true;
    need.omega_sup = need.omega_dx = need.omega_dy = true;
  }
  return need;
}

inline bool norms_missing(const NormData& have, bool l1, bool sup, bool dx,
                          bool dy) {
  return (l1 && !have.l1) || (sup && !have.sup) || (dx && !have.dx_sup) ||
         (dy && !have.dy_sup);
}

}  // namespace detail

// Runs one study case: fixes the approximation box (declared support for
// compact regimes, truncation search for truncated ones), resolves norms,
// and produces one record per N for the density (and quantity, when a
// quantity field is present).
inline StudyResult run_study(const StudyCase& c) {
  validate_study_case(c);

  StudyResult result;
  result.name = c.name;
  result.regime = c.regime;
  result.eps = c.eps;

  // Approximation box.  Truncated regimes find L once per case; N then
  // refines the fixed box.
  if (regime_truncated(c.regime)) {
    double total_mass;
    if (c.rho.norms.l1) {
      total_mass = *c.rho.norms.l1;
    } else if (c.rho.support) {
      ScalarField abs_rho([e = c.rho.eval](double x, double y) {
        return std::abs(e(x, y));
      });
      abs_rho.support = c.rho.support;
      abs_rho.slices = c.rho.slices;
      total_mass = integrate_box(abs_rho, *c.rho.support, c.quad);
    } else {
      throw ConfigError("study case '" + c.name +
                        "': truncated regimes need rho's l1 norm (or a "
                        "declared covering box to compute it)");
    }
    const TruncationResult tr = find_truncation_L(
        c.rho, *c.eps, total_mass, c.truncation_resolution, c.quad);
    result.half_width = tr.half_width;
    result.box = BoxDomain::centered_square(tr.half_width);
  } else {
    result.box = *c.rho.support;
  }
  const BoxDomain box = *result.box;

  // Norm resolution.  The study is flagged as estimator-based when any norm
  // entry a bound formula needs was not supplied analytically.
  const detail::NeededNorms need = detail::needed_norms(c.regime,
                                                        c.omega.has_value());
  result.norms_estimated =
      detail::norms_missing(c.rho.norms, need.rho_l1, need.rho_sup,
                            need.rho_dx, need.rho_dy) ||
      detail::norms_missing(c.phi.norms, false, need.phi_sup, need.phi_dx,
                            need.phi_dy) ||
      (c.omega && detail::norms_missing(c.omega->norms, false, need.omega_sup,
                                        need.omega_dx, need.omega_dy));

  BoundInputs inputs;
  inputs.delta1 = box.delta1();
  inputs.delta2 = box.delta2();
  inputs.half_width = result.half_width;
  inputs.eps = c.eps;
  inputs.rho_norms = resolve_norms(c.rho, box, {}, c.quad);
  inputs.phi_norms = resolve_norms(c.phi, box, {}, c.quad);
  if (c.omega) inputs.omega_norms = resolve_norms(*c.omega, box, {}, c.quad);
  inputs.overrides = c.overrides;

  // Reference integrals are N-independent; compute them once.
  const BoxDomain ref_box_density = covering_box(box, {&c.rho, &c.phi});
  const double ref_density =
      integrate_product_box(c.rho, c.phi, ref_box_density, c.quad);
  double ref_quantity = 0.0;
  if (c.omega) {
    const BoxDomain ref_box_quantity =
        covering_box(box, {&c.rho, &*c.omega, &c.phi});
    ref_quantity = integrate_product_box(c.rho, *c.omega, c.phi,
                                         ref_box_quantity, c.quad);
  }

  const auto make_ratio = [](double measured, double bound) {
    if (bound > 0.0) return measured / bound;
    return measured == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };

  for (int n : c.n_values) {
    try {
      const Grid grid = make_grid(box, n);
      const PiecewiseConstantField pc =
          build_density_approx(c.rho, grid, c.quad, c.threads);
      const double measured_density = std::abs(
          weak_integral(pc, c.phi, c.quad, c.threads) - ref_density);
      inputs.n = n;
      const BoundReport density_report =
          theorem_bound(c.regime, BoundVariant::density, inputs);
      result.density.push_back(
          {n, measured_density, density_report.bound_value,
           make_ratio(measured_density, density_report.bound_value)});

      std::optional<BoundReport> quantity_report;
      if (c.omega) {
        const CellMatrix w = cell_averages(*c.omega, grid, c.quad, c.threads);
        const PiecewiseConstantField pcq =
            build_quantity_approx(pc.values, w, grid);
        const double measured_quantity = std::abs(
            weak_integral(pcq, c.phi, c.quad, c.threads) - ref_quantity);
        quantity_report = theorem_bound(c.regime, BoundVariant::quantity,
                                        inputs);
        result.quantity.push_back(
            {n, measured_quantity, quantity_report->bound_value,
             make_ratio(measured_quantity, quantity_report->bound_value)});
      }

      if (result.constants.empty()) {
        result.constants = density_report.constants;
        if (quantity_report) {
          for (const auto& entry : quantity_report->constants) {
            const bool known =
                std::any_of(result.constants.begin(), result.constants.end(),
                            [&](const auto& e) { return e.first == entry.first; });
            if (!known) result.constants.push_back(entry);
          }
        }
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      std::ostringstream os;
      os << "study '" << c.name << "' failed at N=" << n << ": " << e.what();
      throw Error(os.str());
    }
  }
  return result;
}

// Least-squares fit of log(measured_error) against log(N).  Records at or
// below min_error are excluded (they sit at the quadrature noise floor);
// fewer than 3 usable records is an error.
inline OrderEstimate estimate_order(const std::vector<ConvergenceRecord>& records,
                                    double min_error = 1e-12) {
  std::vector<double> xs, ys;
  for (const ConvergenceRecord& r : records) {
    if (r.measured_error > min_error) {
      xs.push_back(std::log(static_cast<double>(r.n)));
      ys.push_back(std::log(r.measured_error));
    }
  }
  const int k = static_cast<int>(xs.size());
  if (k < 3) {
    std::ostringstream os;
    os << "order estimate needs at least 3 records with measured_error above "
       << min_error << " (got " << k
       << "); widen the N range, or the field is represented exactly and no "
          "rate is observable";
    throw Error(os.str());
  }
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < k; ++i) {
    sx += xs[static_cast<size_t>(i)];
    sy += ys[static_cast<size_t>(i)];
  }
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < k; ++i) {
    const double dx = xs[static_cast<size_t>(i)] - mx;
    const double dy = ys[static_cast<size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  OrderEstimate est;
  est.n_used = k;
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  if (syy <= 0.0) {
    est.r_squared = 1.0;
  } else {
    const double ss_res = syy - est.slope * sxy;
    est.r_squared = 1.0 - std::max(0.0, ss_res) / syy;
  }
  return est;
}

struct BoundCheck {
  int n = 0;
  double measured_error = 0.0;
  double bound = 0.0;
  double limit = 0.0;  // (1 + slack) * bound + floor
  bool pass = false;
};

struct BoundCheckReport {
  std::vector<BoundCheck> checks;
  bool all_pass = true;
};

// Checks measured <= (1 + slack) * bound + abs_floor per record.  The floor
// forgives quadrature noise only; the bounds themselves are exact.
inline BoundCheckReport verify_bounds(const std::vector<ConvergenceRecord>& records,
                                      double slack = 0.0,
                                      double abs_floor = 1e-9) {
  if (slack < 0.0 || !std::isfinite(slack)) {
    throw Error("bound verification slack must be nonnegative and finite");
  }
  BoundCheckReport report;
  for (const ConvergenceRecord& r : records) {
    BoundCheck check;
    check.n = r.n;
    check.measured_error = r.measured_error;
    check.bound = r.bound;
    check.limit = (1.0 + slack) * r.bound + abs_floor;
    check.pass = r.measured_error <= check.limit;
    report.all_pass = report.all_pass && check.pass;
    report.checks.push_back(check);
  }
  return report;
}

}  // namespace cellavg
