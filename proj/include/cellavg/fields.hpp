#pragma once

// Scalar-field abstractions: evaluators over the plane, axis-aligned box
// domains, norm bookkeeping, and lattice-based norm estimators.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cellavg/error.hpp"

namespace cellavg {

// Closed interval [lo, hi]; empty when lo >= hi (zero length counts as empty
// for integration purposes).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(lo < hi); }
  double length() const { return empty() ? 0.0 : hi - lo; }
};

inline Interval intersect(const Interval& a, const Interval& b) {
  return Interval{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

// Axis-aligned box [l1_lo, l1_hi] x [l2_lo, l2_hi] with positive extent on
// both axes.  Axis 1 is x, axis 2 is y.
struct BoxDomain {
  double l1_lo, l1_hi, l2_lo, l2_hi;

  BoxDomain(double x_lo, double x_hi, double y_lo, double y_hi)
      : l1_lo(x_lo), l1_hi(x_hi), l2_lo(y_lo), l2_hi(y_hi) {
    if (!std::isfinite(x_lo) || !std::isfinite(x_hi) || !std::isfinite(y_lo) ||
        !std::isfinite(y_hi)) {
      throw Error("box domain bounds must be finite");
    }
    if (!(x_lo < x_hi) || !(y_lo < y_hi)) {
      std::ostringstream os;
      os << "box domain requires lo < hi on both axes (got [" << x_lo << ", "
         << x_hi << "] x [" << y_lo << ", " << y_hi << "])";
      throw Error(os.str());
    }
  }

  double delta1() const { return l1_hi - l1_lo; }
  double delta2() const { return l2_hi - l2_lo; }
  double area() const { return delta1() * delta2(); }

  bool contains(double x, double y) const {
    return x >= l1_lo && x <= l1_hi && y >= l2_lo && y <= l2_hi;
  }

  bool contains(const BoxDomain& inner) const {
    return inner.l1_lo >= l1_lo && inner.l1_hi <= l1_hi &&
           inner.l2_lo >= l2_lo && inner.l2_hi <= l2_hi;
  }

  Interval x_range() const { return Interval{l1_lo, l1_hi}; }
  Interval y_range() const { return Interval{l2_lo, l2_hi}; }

  static BoxDomain hull(const BoxDomain& a, const BoxDomain& b) {
    return BoxDomain(std::min(a.l1_lo, b.l1_lo), std::max(a.l1_hi, b.l1_hi),
                     std::min(a.l2_lo, b.l2_lo), std::max(a.l2_hi, b.l2_hi));
  }

  // Empty result when the boxes overlap in at most a line segment.
  static std::optional<BoxDomain> intersection(const BoxDomain& a,
                                               const BoxDomain& b) {
    const double x_lo = std::max(a.l1_lo, b.l1_lo);
    const double x_hi = std::min(a.l1_hi, b.l1_hi);
    const double y_lo = std::max(a.l2_lo, b.l2_lo);
    const double y_hi = std::min(a.l2_hi, b.l2_hi);
    if (!(x_lo < x_hi) || !(y_lo < y_hi)) return std::nullopt;
    return BoxDomain(x_lo, x_hi, y_lo, y_hi);
  }

  // Centered square [-h, h]^2.
  static BoxDomain centered_square(double half_width) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
      throw Error("centered square requires a positive finite half-width");
    }
    return BoxDomain(-half_width, half_width, -half_width, half_width);
  }
};

// Norm bookkeeping for a field.  Entries are optional: builtin fields carry
// exact analytic values, user fields may leave gaps to be filled by the
// estimators (see resolve_norms in quadrature.hpp).
struct NormData {
  std::optional<double> l1;      // integral of |f| over the plane
  std::optional<double> sup;     // sup of |f|
  std::optional<double> dx_sup;  // sup of |df/dx|
  std::optional<double> dy_sup;  // sup of |df/dy|

  bool complete() const {
    return l1.has_value() && sup.has_value() && dx_sup.has_value() &&
           dy_sup.has_value();
  }
};

inline void validate_norm_entry(const std::optional<double>& v,
                                const char* name) {
  if (v && (!std::isfinite(*v) || *v < 0.0)) {
    std::ostringstream os;
    os << "norm entry " << name << " must be finite and nonnegative (got "
       << *v << ")";
    throw Error(os.str());
  }
}

inline void validate_norms(const NormData& n) {
  validate_norm_entry(n.l1, "l1");
  validate_norm_entry(n.sup, "sup");
  validate_norm_entry(n.dx_sup, "dx_sup");
  validate_norm_entry(n.dy_sup, "dy_sup");
}

// Exact support description for compactly supported fields, used by the
// quadrature to clip integration ranges to the region where the field is
// nonzero (and smooth inside).  For each x in [x_lo, x_hi], y_interval(x)
// is the y-interval where the field may be nonzero; outside it the field is
// exactly zero.  x_breaks(y_lo, y_hi) optionally reports interior abscissas
// where the clipped slice length y_interval(x) ∩ [y_lo, y_hi] loses
// smoothness (e.g. where a disk boundary crosses a horizontal window edge);
// the integrator splits its outer sweep at these points.
struct SliceGeometry {
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::function<Interval(double)> y_interval;
  std::function<void(double y_lo, double y_hi, std::vector<double>&)> x_breaks;
};

// A scalar field on the plane: a pure evaluator plus optional metadata.
// The evaluator must be deterministic and side-effect free; all algorithms
// assume repeat evaluation at the same point yields the same value.
struct ScalarField {
  using Evaluator = std::function<double(double, double)>;

  Evaluator eval;
  std::optional<BoxDomain> support;  // declared compact support, if any
  NormData norms;
  std::shared_ptr<const SliceGeometry> slices;  // exact support slices, if any

  ScalarField() = default;
  explicit ScalarField(Evaluator e) : eval(std::move(e)) {}

  double operator()(double x, double y) const { return eval(x, y); }
};

// Defaults for the sampling-based norm estimators.
struct SamplingDefaults {
  int samples_per_axis = 257;   // lattice nodes per axis, endpoints included
  double fd_step_scale = 1e-5;  // finite-difference step = extent * scale
};

inline void check_samples_per_axis(int samples_per_axis) {
  if (samples_per_axis < 2) {
    std::ostringstream os;
    os << "sup/derivative estimation needs at least 2 samples per axis (got "
       << samples_per_axis << ")";
    throw Error(os.str());
  }
}

namespace detail {

// Uniform lattice over [lo, hi] with `count` nodes including both endpoints;
// endpoints are assigned exactly so nested power-of-two refinements share
// nodes bit-for-bit.
inline std::vector<double> uniform_nodes(double lo, double hi, int count) {
  std::vector<double> nodes(static_cast<size_t>(count));
  const double extent = hi - lo;
  for (int i = 0; i < count; ++i) {
    nodes[static_cast<size_t>(i)] =
        lo + static_cast<double>(i) * extent / static_cast<double>(count - 1);
  }
  nodes.front() = lo;
  nodes.back() = hi;
  return nodes;
}

}  // namespace detail

// Lattice maximum of |f| over the box (corners included).  Never exceeds the
// true sup; monotone nondecreasing under power-of-two lattice refinement
// (2^k + 1 nodes nest).
inline double estimate_sup_norm(const ScalarField& f, const BoxDomain& box,
                                int samples_per_axis = 257) {
  check_samples_per_axis(samples_per_axis);
  const auto xs = detail::uniform_nodes(box.l1_lo, box.l1_hi, samples_per_axis);
  const auto ys = detail::uniform_nodes(box.l2_lo, box.l2_hi, samples_per_axis);
  double best = 0.0;
  for (double x : xs) {
    for (double y : ys) {
      const double v = f(x, y);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "field evaluation is not finite at (" << x << ", " << y << ")";
        throw Error(os.str());
      }
      best = std::max(best, std::abs(v));
    }
  }
  return best;
}

struct DerivativeSups {
  double dx_sup = 0.0;
  double dy_sup = 0.0;
};

// Central-difference estimate of sup|df/dx| and sup|df/dy| on the sampling
// lattice.  A nonpositive step selects the default extent * fd_step_scale.
inline DerivativeSups estimate_derivative_sup_norms(
    const ScalarField& f, const BoxDomain& box, int samples_per_axis = 257,
    double step = 0.0, double fd_step_scale = 1e-5) {
  check_samples_per_axis(samples_per_axis);
  if (step < 0.0 || !std::isfinite(step)) {
    throw Error("finite-difference step must be nonnegative and finite");
  }
  const double hx = step > 0.0 ? step : box.delta1() * fd_step_scale;
  const double hy = step > 0.0 ? step : box.delta2() * fd_step_scale;
  const auto xs = detail::uniform_nodes(box.l1_lo, box.l1_hi, samples_per_axis);
  const auto ys = detail::uniform_nodes(box.l2_lo, box.l2_hi, samples_per_axis);
  DerivativeSups out;
  for (double x : xs) {
    for (double y : ys) {
      const double dx = (f(x + hx, y) - f(x - hx, y)) / (2.0 * hx);
      const double dy = (f(x, y + hy) - f(x, y - hy)) / (2.0 * hy);
      if (!std::isfinite(dx) || !std::isfinite(dy)) {
        std::ostringstream os;
        os << "difference quotient is not finite at (" << x << ", " << y
           << ")";
        throw Error(os.str());
      }
      out.dx_sup = std::max(out.dx_sup, std::abs(dx));
      out.dy_sup = std::max(out.dy_sup, std::abs(dy));
    }
  }
  return out;
}

}  // namespace cellavg
