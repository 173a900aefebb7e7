#pragma once

// Explicit convergence-bound constants and right-hand-side bounds for the
// four supported regimes, density and quantity variants.
//
// Regimes combine the density's regularity with the support handling:
//  * smooth_compact    — differentiable density, compactly supported: the
//                        density error is second order (coeff / N^2);
//  * smooth_truncated  — differentiable density on the plane, mass-truncated
//                        to [-L, L]^2: second order plus an eps floor;
//  * bounded_compact   — merely bounded and integrable density, compact
//                        support: first order (coeff / N);
//  * bounded_truncated — bounded and integrable, truncated: first order plus
//                        an eps floor.
// Quantity variants add a first-order transport coefficient built from the
// quantity field's derivative norms.

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"

namespace cellavg {

enum class Regime { smooth_compact, smooth_truncated, bounded_compact,
                    bounded_truncated };
enum class BoundVariant { density, quantity };

inline bool regime_truncated(Regime r) {
  return r == Regime::smooth_truncated || r == Regime::bounded_truncated;
}

inline bool regime_smooth(Regime r) {
  return r == Regime::smooth_compact || r == Regime::smooth_truncated;
}

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::smooth_compact: return "smooth_compact";
    case Regime::smooth_truncated: return "smooth_truncated";
    case Regime::bounded_compact: return "bounded_compact";
    case Regime::bounded_truncated: return "bounded_truncated";
  }
  return "unknown";
}

inline Regime regime_from_name(const std::string& name) {
  if (name == "smooth_compact") return Regime::smooth_compact;
  if (name == "smooth_truncated") return Regime::smooth_truncated;
  if (name == "bounded_compact") return Regime::bounded_compact;
  if (name == "bounded_truncated") return Regime::bounded_truncated;
  throw ConfigError("unknown regime '" + name +
                    "' (expected smooth_compact, smooth_truncated, "
                    "bounded_compact, or bounded_truncated)");
}

// Inputs to the bound formulas.  Compact regimes use the box extents
// (delta1, delta2); truncated regimes use half_width L (extents are then
// 2L by construction) and the truncation mass bound eps.  eps = 0 is allowed
// so truncated bounds degenerate cleanly to their compact counterparts.
struct BoundInputs {
  double delta1 = 0.0;
  double delta2 = 0.0;
  std::optional<double> half_width;
  std::optional<double> eps;
  int n = 0;
  NormData rho_norms;
  NormData omega_norms;
  NormData phi_norms;
  // Pins a constant (by report key, e.g. "c_density") to a fixed value in
  // place of its formula; used for sensitivity checks.
  std::map<std::string, double> overrides;
};

struct BoundReport {
  Regime regime = Regime::smooth_compact;
  BoundVariant variant = BoundVariant::density;
  int n = 0;
  // Insertion-ordered so reports serialize deterministically.
  std::vector<std::pair<std::string, double>> constants;
  double bound_value = 0.0;

  double constant(const std::string& key) const {
    for (const auto& [k, v] : constants) {
      if (k == key) return v;
    }
    throw Error("bound report has no constant named '" + key + "'");
  }
};

namespace detail {

inline double need_norm(const std::optional<double>& v, const char* owner,
                        const char* entry) {
  if (!v) {
    std::ostringstream os;
    os << "bound computation requires " << owner << " " << entry << " norm";
    throw ConfigError(os.str());
  }
  if (!std::isfinite(*v) || *v < 0.0) {
    std::ostringstream os;
    os << owner << " " << entry << " norm must be finite and nonnegative (got "
       << *v << ")";
    throw Error(os.str());
  }
  return *v;
}

inline void check_deltas(const BoundInputs& in) {
  if (!(in.delta1 > 0.0) || !(in.delta2 > 0.0) ||
      !std::isfinite(in.delta1) || !std::isfinite(in.delta2)) {
    throw ConfigError("bound computation requires positive finite box extents");
  }
}

inline double need_half_width(const BoundInputs& in) {
  if (!in.half_width) {
    throw ConfigError("truncated-regime bound requires the half-width L");
  }
  if (!(*in.half_width > 0.0) || !std::isfinite(*in.half_width)) {
    throw ConfigError("truncation half-width must be positive and finite");
  }
  return *in.half_width;
}

}  // namespace detail

// Second-order density coefficient (smooth density, compact support):
//   max(D1, D2)^4 * (sup|drho/dx| + sup|drho/dy|) * (sup|dphi/dx| + sup|dphi/dy|).
inline double c_density(const BoundInputs& in) {
  detail::check_deltas(in);
  const double m = std::max(in.delta1, in.delta2);
  const double rho_d = detail::need_norm(in.rho_norms.dx_sup, "rho", "dx_sup") +
                       detail::need_norm(in.rho_norms.dy_sup, "rho", "dy_sup");
  const double phi_d = detail::need_norm(in.phi_norms.dx_sup, "phi", "dx_sup") +
                       detail::need_norm(in.phi_norms.dy_sup, "phi", "dy_sup");
  return m * m * m * m * rho_d * phi_d;
}

// First-order quantity (transport) coefficient:
//   max(D1, D2) * (sup|domega/dx| + sup|domega/dy|) * sup|phi| * l1(rho).
inline double k_quantity(const BoundInputs& in) {
  detail::check_deltas(in);
  const double m = std::max(in.delta1, in.delta2);
  const double omega_d =
      detail::need_norm(in.omega_norms.dx_sup, "omega", "dx_sup") +
      detail::need_norm(in.omega_norms.dy_sup, "omega", "dy_sup");
  return m * omega_d * detail::need_norm(in.phi_norms.sup, "phi", "sup") *
         detail::need_norm(in.rho_norms.l1, "rho", "l1");
}

// First-order density coefficient (bounded density, compact support):
//   max(D1, D2) * (sup|dphi/dx| + sup|dphi/dy|) * (l1(rho) + sup(rho)*D1*D2).
inline double d_density(const BoundInputs& in) {
  detail::check_deltas(in);
  const double m = std::max(in.delta1, in.delta2);
  const double phi_d = detail::need_norm(in.phi_norms.dx_sup, "phi", "dx_sup") +
                       detail::need_norm(in.phi_norms.dy_sup, "phi", "dy_sup");
  return m * phi_d *
         (detail::need_norm(in.rho_norms.l1, "rho", "l1") +
          detail::need_norm(in.rho_norms.sup, "rho", "sup") * in.delta1 *
              in.delta2);
}

namespace detail {

// A truncated-regime input evaluated on the square [-L, L]^2 has extents 2L
// on both axes; the truncated constants are the compact formulas at that
// geometry (16 L^4 = (2L)^4, 2L = max extent, 4L^2 = area).
inline BoundInputs with_truncated_geometry(const BoundInputs& in) {
  BoundInputs out = in;
  const double ext = 2.0 * need_half_width(in);
  out.delta1 = ext;
  out.delta2 = ext;
  return out;
}

}  // namespace detail

// Truncated-regime versions of the three coefficients: the same formulas on
// the square of half-width L (extent 2L per axis).
inline double c_density_truncated(const BoundInputs& in) {
  return c_density(detail::with_truncated_geometry(in));
}
inline double k_quantity_truncated(const BoundInputs& in) {
  return k_quantity(detail::with_truncated_geometry(in));
}
inline double d_density_truncated(const BoundInputs& in) {
  return d_density(detail::with_truncated_geometry(in));
}

namespace detail {

struct ReportBuilder {
  BoundReport report;
  const std::map<std::string, double>* overrides;

  // Records the constant under `key`, honoring a pinned override.
  double add(const std::string& key, double formula_value) {
    double v = formula_value;
    if (overrides) {
      const auto it = overrides->find(key);
      if (it != overrides->end()) v = it->second;
    }
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream os;
      os << "bound constant " << key << " must be finite and nonnegative (got "
         << v << ")";
      throw Error(os.str());
    }
    report.constants.emplace_back(key, v);
    return v;
  }
};

}  // namespace detail

// Assembles the full bound for one regime and variant.  The report carries
// every contributing constant so CSV output can expose them.
inline BoundReport theorem_bound(Regime regime, BoundVariant variant,
                                 const BoundInputs& in) {
  if (in.n < 1) {
    std::ostringstream os;
    os << "bound evaluation requires a positive N (got " << in.n << ")";
    throw ConfigError(os.str());
  }
  const bool truncated = regime_truncated(regime);
  if (truncated) {
    detail::need_half_width(in);
    if (!in.eps) {
      throw ConfigError("truncated-regime bound requires eps");
    }
    if (!std::isfinite(*in.eps) || *in.eps < 0.0) {
      throw ConfigError("eps must be finite and nonnegative");
    }
  } else if (in.eps) {
    throw ConfigError(
        "compact-regime bound forbids eps (truncation does not apply)");
  }

  const BoundInputs geo = truncated ? detail::with_truncated_geometry(in) : in;
  const double n_d = static_cast<double>(in.n);
  const bool quantity = variant == BoundVariant::quantity;

  detail::ReportBuilder rb;
  rb.report.regime = regime;
  rb.report.variant = variant;
  rb.report.n = in.n;
  rb.overrides = &in.overrides;

  double bound = 0.0;
  if (truncated) {
    const double phi_sup = detail::need_norm(geo.phi_norms.sup, "phi", "sup");
    double eps_term = *in.eps * phi_sup;
    if (quantity) {
      eps_term *= detail::need_norm(geo.omega_norms.sup, "omega", "sup");
    }
    bound += rb.add("eps_term", eps_term);
  }

  if (regime_smooth(regime)) {
    const double c = rb.add("c_density", c_density(geo));
    if (!quantity) {
      bound += c / (n_d * n_d);
    } else {
      const double k = rb.add("k_quantity", k_quantity(geo));
      const double omega_sup =
          rb.add("omega_sup",
                 detail::need_norm(geo.omega_norms.sup, "omega", "sup"));
      bound += k / n_d + c * omega_sup / (n_d * n_d);
    }
  } else {
    const double d = rb.add("d_density", d_density(geo));
    if (!quantity) {
      bound += d / n_d;
    } else {
      const double k = rb.add("k_quantity", k_quantity(geo));
      const double omega_sup =
          rb.add("omega_sup",
                 detail::need_norm(geo.omega_norms.sup, "omega", "sup"));
      bound += (k + d * omega_sup) / n_d;
    }
  }

  rb.report.bound_value = bound;
  return rb.report;
}

}  // namespace cellavg
