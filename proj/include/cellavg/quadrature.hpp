#pragma once

// Composite Gauss-Legendre quadrature over axis-aligned boxes, with dyadic
// panel refinement and a difference-based stopping rule.
//
// Two evaluation paths share the same refinement control:
//  * tensor path: p-point Gauss-Legendre per axis on K x K uniform panels,
//    for fields that are smooth across the whole box;
//  * sliced path: when a factor carries exact support slices, the outer
//    x-sweep runs composite Gauss-Legendre over the clipped x-support (split
//    at declared kink abscissas, with a u^2 substitution on endpoint panels
//    to tame square-root edge behavior) and the inner integral runs over the
//    exact clamped y-slice.  This keeps support edges out of panel interiors,
//    which uniform panels cannot do for discontinuous or edge-kinked fields.
//
// The stopping rule compares consecutive refinement levels against
// max(target_rel_tol * |estimate|, target_rel_tol * area * sup_seen), the
// second term acting as an absolute fallback scaled by the largest sampled
// magnitude, so near-zero integrals of small-support fields still converge.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"

namespace cellavg {

struct QuadratureSpec {
  int points_per_axis_per_panel = 8;  // Gauss-Legendre order per panel, 1..16
  int panels_per_axis = 2;            // initial composite subdivision
  double target_rel_tol = 1e-12;      // relative stopping tolerance
  int max_panels_per_axis = 4096;     // refinement cap
};

inline void validate_quadrature_spec(const QuadratureSpec& spec) {
  if (spec.points_per_axis_per_panel < 1 ||
      spec.points_per_axis_per_panel > 16) {
    std::ostringstream os;
    os << "quadrature points per axis per panel must be in [1, 16] (got "
       << spec.points_per_axis_per_panel << ")";
    throw Error(os.str());
  }
  if (spec.panels_per_axis < 1) {
    throw Error("quadrature needs at least one panel per axis");
  }
  if (!(spec.target_rel_tol > 0.0) || !std::isfinite(spec.target_rel_tol)) {
    throw Error("quadrature target_rel_tol must be positive and finite");
  }
  if (spec.max_panels_per_axis < spec.panels_per_axis) {
    throw Error("quadrature panel cap is below the initial panel count");
  }
}

// Thrown when refinement hits the panel cap before the stopping rule is met;
// carries the best available estimate and the achieved level difference.
struct QuadratureError : Error {
  double best_estimate;
  double achieved_diff;
  QuadratureError(const std::string& msg, double estimate, double diff)
      : Error(msg), best_estimate(estimate), achieved_diff(diff) {}
};

// One-dimensional Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline GaussRule compute_gauss_rule(int p) {
  GaussRule rule;
  rule.nodes.resize(static_cast<size_t>(p));
  rule.weights.resize(static_cast<size_t>(p));
  // Newton iteration on the Legendre polynomial from the Chebyshev initial
  // guess; deterministic and accurate to machine precision for p <= 16.
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (p + 1) / 2; ++i) {
    double x = std::cos(pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(p) + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= p; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double value = (p == 1) ? x : p1;
      const double prev = (p == 1) ? 1.0 : p0;
      dp = (p == 1) ? 1.0
                    : static_cast<double>(p) * (x * value - prev) /
                          (x * x - 1.0);
      const double dx = value / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Roots from the cosine guess come out descending; mirror into place.
    rule.nodes[static_cast<size_t>(p - 1 - i)] = x;
    rule.weights[static_cast<size_t>(p - 1 - i)] = w;
    rule.nodes[static_cast<size_t>(i)] = -x;
    rule.weights[static_cast<size_t>(i)] = w;
  }
  if (p % 2 == 1) rule.nodes[static_cast<size_t>(p / 2)] = 0.0;
  return rule;
}

}  // namespace detail

inline const GaussRule& gauss_rule(int p) {
  if (p < 1 || p > 16) {
    std::ostringstream os;
    os << "Gauss-Legendre order must be in [1, 16] (got " << p << ")";
    throw Error(os.str());
  }
  static const std::array<GaussRule, 17> rules = [] {
    std::array<GaussRule, 17> r;
    for (int q = 1; q <= 16; ++q) r[static_cast<size_t>(q)] =
        detail::compute_gauss_rule(q);
    return r;
  }();
  return rules[static_cast<size_t>(p)];
}

namespace detail {

// Neumaier-compensated accumulator: deterministic, order-fixed summation
// with O(eps) error independent of term count.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Integrand for the internal engine: raw pointwise evaluation plus combined
// support slices (when any factor declares them) and a running max of
// sampled magnitudes for the absolute stopping fallback.
struct Integrand {
  std::function<double(double, double)> f;
  std::optional<double> x_lo, x_hi;  // combined slice x-support
  std::vector<const SliceGeometry*> slice_parts;
  mutable double sup_seen = 0.0;

  bool sliced() const { return !slice_parts.empty(); }

  double operator()(double x, double y) const {
    const double v = f(x, y);
    const double a = std::abs(v);
    if (a > sup_seen) sup_seen = a;
    return v;
  }

  Interval y_slice(double x) const {
    Interval iv = slice_parts.front()->y_interval(x);
    for (size_t k = 1; k < slice_parts.size(); ++k) {
      if (iv.empty()) return iv;
      iv = intersect(iv, slice_parts[k]->y_interval(x));
    }
    return iv;
  }

  void collect_breaks(double y_lo, double y_hi, std::vector<double>& out) const {
    for (const SliceGeometry* s : slice_parts) {
      if (s->x_breaks) s->x_breaks(y_lo, y_hi, out);
    }
  }
};

inline void attach_slices(Integrand& ig, const ScalarField& f) {
  if (!f.slices) return;
  ig.slice_parts.push_back(f.slices.get());
  ig.x_lo = ig.x_lo ? std::max(*ig.x_lo, f.slices->x_lo) : f.slices->x_lo;
  ig.x_hi = ig.x_hi ? std::min(*ig.x_hi, f.slices->x_hi) : f.slices->x_hi;
}

// Inner integral of ig(x, .) over the clipped slice at fixed x: composite
// Gauss-Legendre with panels sized to keep smooth integrands at machine
// accuracy.  The slice bounds are exact, so the integrand is smooth inside.
inline double inner_slice_integral(const Integrand& ig, double x,
                                   const Interval& y_window, int points) {
  Interval iv = intersect(ig.y_slice(x), y_window);
  if (iv.empty()) return 0.0;
  const double len = iv.length();
  const int panels = std::clamp(static_cast<int>(std::ceil(len / 0.5)), 1, 64);
  const GaussRule& rule = gauss_rule(points);
  const double w = len / panels;
  KahanSum acc;
  for (int p = 0; p < panels; ++p) {
    const double a = iv.lo + p * w;
    const double mid = a + 0.5 * w;
    const double half = 0.5 * w;
    for (size_t q = 0; q < rule.nodes.size(); ++q) {
      acc.add(rule.weights[q] * half * ig(x, mid + half * rule.nodes[q]));
    }
  }
  return acc.value();
}

// Composite 1-D pass over [a, b] with K panels.  The first and last panels
// use the substitution x = a + u^2 (resp. b - u^2), which turns sqrt-type
// edge behavior of clipped slices into a smooth integrand in u.
inline double composite_1d_slices(const Integrand& ig, double a, double b,
                                  int panels, const Interval& y_window,
                                  int points_outer, int points_inner) {
  const GaussRule& rule = gauss_rule(points_outer);
  const int k_count = std::max(2, panels);
  const double w = (b - a) / k_count;
  KahanSum acc;
  for (int k = 0; k < k_count; ++k) {
    const double p_lo = a + k * w;
    const double p_hi = (k == k_count - 1) ? b : p_lo + w;
    if (k == 0 || k == k_count - 1) {
      // Endpoint panel in substituted coordinates.
      const double root_w = std::sqrt(p_hi - p_lo);
      const double mid = 0.5 * root_w;
      for (size_t q = 0; q < rule.nodes.size(); ++q) {
        const double u = mid + mid * rule.nodes[q];
        const double x = (k == 0) ? p_lo + u * u : p_hi - u * u;
        const double g = inner_slice_integral(ig, x, y_window, points_inner);
        acc.add(rule.weights[q] * mid * 2.0 * u * g);
      }
    } else {
      const double mid = 0.5 * (p_lo + p_hi);
      const double half = 0.5 * (p_hi - p_lo);
      for (size_t q = 0; q < rule.nodes.size(); ++q) {
        const double x = mid + half * rule.nodes[q];
        const double g = inner_slice_integral(ig, x, y_window, points_inner);
        acc.add(rule.weights[q] * half * g);
      }
    }
  }
  return acc.value();
}

// Tensor-product composite pass with K x K panels.
inline double composite_2d_tensor(const Integrand& ig, const BoxDomain& box,
                                  int panels, int points) {
  const GaussRule& rule = gauss_rule(points);
  const double wx = box.delta1() / panels;
  const double wy = box.delta2() / panels;
  KahanSum acc;
  for (int i = 0; i < panels; ++i) {
    const double x_mid = box.l1_lo + (i + 0.5) * wx;
    for (int j = 0; j < panels; ++j) {
      const double y_mid = box.l2_lo + (j + 0.5) * wy;
      for (size_t qx = 0; qx < rule.nodes.size(); ++qx) {
        const double x = x_mid + 0.5 * wx * rule.nodes[qx];
        const double cwx = rule.weights[qx] * 0.5 * wx;
        for (size_t qy = 0; qy < rule.nodes.size(); ++qy) {
          const double y = y_mid + 0.5 * wy * rule.nodes[qy];
          acc.add(cwx * rule.weights[qy] * 0.5 * wy * ig(x, y));
        }
      }
    }
  }
  return acc.value();
}

[[noreturn]] inline void throw_cap_hit(double estimate, double diff,
                                       const QuadratureSpec& spec) {
  std::ostringstream os;
  os << "quadrature did not meet target_rel_tol=" << spec.target_rel_tol
     << " within the panel cap " << spec.max_panels_per_axis
     << " (best estimate " << estimate << ", last refinement difference "
     << diff << ")";
  throw QuadratureError(os.str(), estimate, diff);
}

// Dyadic refinement driver shared by both paths.  `level(K)` evaluates one
// composite pass with K panels; `area_scale` converts sup_seen into the
// absolute stopping fallback.
template <typename LevelFn>
inline double refine_dyadic(const Integrand& ig, const QuadratureSpec& spec,
                            double area_scale, LevelFn&& level) {
  int k_panels = spec.panels_per_axis;
  double prev = level(k_panels);
  double last_diff = std::numeric_limits<double>::quiet_NaN();
  while (2 * k_panels <= spec.max_panels_per_axis) {
    k_panels *= 2;
    const double cur = level(k_panels);
    const double diff = std::abs(cur - prev);
    const double tol = std::max(spec.target_rel_tol * std::abs(cur),
                                spec.target_rel_tol * area_scale * ig.sup_seen);
    if (diff <= tol) return cur;
    prev = cur;
    last_diff = diff;
  }
  throw_cap_hit(prev, last_diff, spec);
}

inline double integrate_impl(const Integrand& ig, const BoxDomain& box,
                             const QuadratureSpec& spec) {
  validate_quadrature_spec(spec);
  const int points = spec.points_per_axis_per_panel;
  if (!ig.sliced()) {
    return refine_dyadic(ig, spec, box.area(), [&](int k) {
      return composite_2d_tensor(ig, box, k, points);
    });
  }

  // Sliced path: clip the x-sweep to the combined support, split at declared
  // kink abscissas, and refine each smooth subrange independently.
  const double x_lo = std::max(box.l1_lo, ig.x_lo.value_or(box.l1_lo));
  const double x_hi = std::min(box.l1_hi, ig.x_hi.value_or(box.l1_hi));
  if (!(x_lo < x_hi)) return 0.0;

  std::vector<double> cuts;
  ig.collect_breaks(box.l2_lo, box.l2_hi, cuts);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> edges;
  edges.push_back(x_lo);
  const double dedupe = 1e-12 * (x_hi - x_lo);
  for (double c : cuts) {
    if (c > edges.back() + dedupe && c < x_hi - dedupe) edges.push_back(c);
  }
  edges.push_back(x_hi);

  const int points_inner = std::clamp(points, 12, 16);
  const Interval y_window = box.y_range();
  KahanSum total;
  for (size_t s = 0; s + 1 < edges.size(); ++s) {
    const double a = edges[s];
    const double b = edges[s + 1];
    const double area_scale = (b - a) * box.delta2();
    total.add(refine_dyadic(ig, spec, area_scale, [&](int k) {
      return composite_1d_slices(ig, a, b, k, y_window, points, points_inner);
    }));
  }
  return total.value();
}

inline Integrand make_integrand(const ScalarField& f) {
  Integrand ig;
  ig.f = [&f](double x, double y) { return f(x, y); };
  attach_slices(ig, f);
  return ig;
}

inline Integrand make_integrand(const ScalarField& f, const ScalarField& g) {
  Integrand ig;
  ig.f = [&f, &g](double x, double y) { return f(x, y) * g(x, y); };
  attach_slices(ig, f);
  attach_slices(ig, g);
  return ig;
}

inline Integrand make_integrand(const ScalarField& f, const ScalarField& g,
                                const ScalarField& h) {
  Integrand ig;
  ig.f = [&f, &g, &h](double x, double y) {
    return f(x, y) * g(x, y) * h(x, y);
  };
  attach_slices(ig, f);
  attach_slices(ig, g);
  attach_slices(ig, h);
  return ig;
}

}  // namespace detail

// Integral of f over the box.
inline double integrate_box(const ScalarField& f, const BoxDomain& box,
                            const QuadratureSpec& spec = {}) {
  return detail::integrate_impl(detail::make_integrand(f), box, spec);
}

// Integral of the pointwise product f*g over the box.
inline double integrate_product_box(const ScalarField& f, const ScalarField& g,
                                    const BoxDomain& box,
                                    const QuadratureSpec& spec = {}) {
  return detail::integrate_impl(detail::make_integrand(f, g), box, spec);
}

// Integral of the pointwise product f*g*h over the box (density * quantity *
// test function).
inline double integrate_product_box(const ScalarField& f, const ScalarField& g,
                                    const ScalarField& h, const BoxDomain& box,
                                    const QuadratureSpec& spec = {}) {
  return detail::integrate_impl(detail::make_integrand(f, g, h), box, spec);
}

// Mass of rho outside the centered square [-L, L]^2, measured inside
// outer_box: integral over outer_box minus integral over the square.  Tiny
// negative results from quadrature roundoff (within 10 * target_rel_tol *
// mass) are clamped to zero; anything more negative indicates inconsistent
// quadrature and raises an error.
inline double tail_mass(const ScalarField& rho, double half_width,
                        const BoxDomain& outer_box,
                        const QuadratureSpec& spec = {}) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error("tail mass requires a positive finite half-width");
  }
  const BoxDomain inner = BoxDomain::centered_square(half_width);
  if (!outer_box.contains(inner)) {
    std::ostringstream os;
    os << "outer box must contain the centered square of half-width "
       << half_width;
    throw Error(os.str());
  }
  const double outer_mass = integrate_box(rho, outer_box, spec);
  const double inner_mass = integrate_box(rho, inner, spec);
  const double tail = outer_mass - inner_mass;
  if (tail >= 0.0) return tail;
  const double clamp_threshold =
      10.0 * spec.target_rel_tol * std::max(std::abs(outer_mass), 1.0);
  if (tail > -clamp_threshold) return 0.0;
  std::ostringstream os;
  os << "tail mass came out negative (" << tail
     << ") beyond the roundoff clamp threshold " << clamp_threshold
     << "; quadrature results are inconsistent";
  throw Error(os.str());
}

// Fills the missing entries of f's norm data: sup and derivative sups via the
// lattice estimators, l1 by quadrature of |f| over the box.  Entries already
// present are kept untouched (idempotent).  Estimates are taken over `box`,
// so for unbounded fields they are estimates over that window only.
inline NormData resolve_norms(const ScalarField& f, const BoxDomain& box,
                              const SamplingDefaults& defaults = {},
                              const QuadratureSpec& spec = {}) {
  validate_norms(f.norms);
  NormData out = f.norms;
  if (!out.sup) {
    out.sup = estimate_sup_norm(f, box, defaults.samples_per_axis);
  }
  if (!out.dx_sup || !out.dy_sup) {
    const DerivativeSups d = estimate_derivative_sup_norms(
        f, box, defaults.samples_per_axis, 0.0, defaults.fd_step_scale);
    if (!out.dx_sup) out.dx_sup = d.dx_sup;
    if (!out.dy_sup) out.dy_sup = d.dy_sup;
  }
  if (!out.l1) {
    ScalarField abs_f([e = f.eval](double x, double y) {
      return std::abs(e(x, y));
    });
    abs_f.support = f.support;
    abs_f.slices = f.slices;
    out.l1 = integrate_box(abs_f, box, spec);
  }
  return out;
}

}  // namespace cellavg
