#pragma once

// Builtin analytic fields with exact norm data.  Each builtin documents how
// its norms are derived; compactly supported builtins also carry exact
// support slices so the quadrature can clip to the support instead of
// straddling its edge with uniform panels.

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"

namespace cellavg {

namespace detail {

inline double pi() { return std::acos(-1.0); }

// Slices for a field supported on (and smooth inside) a box: the y-interval
// is constant over the x-support and the clipped slice length has no
// interior kinks, so no break abscissas are needed.
inline std::shared_ptr<const SliceGeometry> box_slices(const BoxDomain& box) {
  auto s = std::make_shared<SliceGeometry>();
  s->x_lo = box.l1_lo;
  s->x_hi = box.l1_hi;
  s->y_interval = [y_lo = box.l2_lo, y_hi = box.l2_hi](double) {
    return Interval{y_lo, y_hi};
  };
  return s;
}

}  // namespace detail

// f = c everywhere.  sup = |c|; both derivatives 0; no finite l1 (unless
// c = 0), left unset.
inline ScalarField make_constant(double c) {
  if (!std::isfinite(c)) throw ConfigError("constant field needs a finite value");
  ScalarField f([c](double, double) { return c; });
  f.norms.sup = std::abs(c);
  f.norms.dx_sup = 0.0;
  f.norms.dy_sup = 0.0;
  if (c == 0.0) f.norms.l1 = 0.0;
  return f;
}

// f = a + b x + c y everywhere.  Derivative sups are |b| and |c|; sup and l1
// are unbounded on the plane and left unset.
inline ScalarField make_linear(double a, double b, double c) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    throw ConfigError("linear field needs finite coefficients");
  }
  ScalarField f([a, b, c](double x, double y) { return a + b * x + c * y; });
  f.norms.dx_sup = std::abs(b);
  f.norms.dy_sup = std::abs(c);
  return f;
}

// f = cos^2(pi x / 2) cos^2(pi y / 2) on [-1, 1]^2, zero outside.
// Norms: sup = 1 at the origin; df/dx = -(pi/2) sin(pi x) cos^2(pi y / 2),
// so sup|df/dx| = pi/2 (at |x| = 1/2, y = 0), likewise dy by symmetry;
// l1 = (int_{-1}^{1} cos^2(pi t / 2) dt)^2 = 1^2 = 1.  The field is C^1
// across the support edge (value and gradient vanish there).
inline ScalarField make_cos2_bump() {
  const double half_pi = 0.5 * detail::pi();
  ScalarField f([half_pi](double x, double y) {
    if (std::abs(x) >= 1.0 || std::abs(y) >= 1.0) return 0.0;
    const double cx = std::cos(half_pi * x);
    const double cy = std::cos(half_pi * y);
    return cx * cx * cy * cy;
  });
  const BoxDomain box(-1.0, 1.0, -1.0, 1.0);
  f.support = box;
  f.slices = detail::box_slices(box);
  f.norms.sup = 1.0;
  f.norms.dx_sup = half_pi;
  f.norms.dy_sup = half_pi;
  f.norms.l1 = 1.0;
  return f;
}

// The bump formula extended by its expression to the whole plane (periodic,
// bounded, C^1).  Same sup and derivative sups as the bump; no finite l1.
inline ScalarField make_cos2_wave() {
  const double half_pi = 0.5 * detail::pi();
  ScalarField f([half_pi](double x, double y) {
    const double cx = std::cos(half_pi * x);
    const double cy = std::cos(half_pi * y);
    return cx * cx * cy * cy;
  });
  f.norms.sup = 1.0;
  f.norms.dx_sup = half_pi;
  f.norms.dy_sup = half_pi;
  return f;
}

// f = exp(-x^2 - y^2) on the plane.
// Norms: sup = 1; df/dx = -2x exp(-x^2) exp(-y^2) peaks at x = 1/sqrt(2),
// y = 0 with value sqrt(2) e^{-1/2}; l1 = pi (polar integral).
inline ScalarField make_gaussian() {
  ScalarField f([](double x, double y) { return std::exp(-x * x - y * y); });
  f.norms.sup = 1.0;
  const double d = std::sqrt(2.0) * std::exp(-0.5);
  f.norms.dx_sup = d;
  f.norms.dy_sup = d;
  f.norms.l1 = detail::pi();
  return f;
}

// f = 1 / (1 + x^2 + y^2)^2 on the plane.
// Norms: sup = 1 at the origin; l1 = 2 pi int_0^inf r (1+r^2)^{-2} dr = pi;
// df/dx = -4x (1 + x^2 + y^2)^{-3} peaks at y = 0, x = 1/sqrt(5) with value
// (4/sqrt(5)) (5/6)^3 = 25 sqrt(5) / 54, likewise dy.
inline ScalarField make_inverse_quartic() {
  ScalarField f([](double x, double y) {
    const double s = 1.0 + x * x + y * y;
    return 1.0 / (s * s);
  });
  f.norms.sup = 1.0;
  f.norms.l1 = detail::pi();
  const double d = 25.0 * std::sqrt(5.0) / 54.0;
  f.norms.dx_sup = d;
  f.norms.dy_sup = d;
  return f;
}

// Indicator of the closed disk of radius r centered at the origin.
// Norms: sup = 1, l1 = pi r^2; derivative sups do not exist (jump) and are
// left unset.  Slices: at x the field is nonzero for |y| <= sqrt(r^2 - x^2);
// the clipped slice length kinks where that curve crosses a window edge,
// reported via x_breaks.
inline ScalarField make_disk_indicator(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("disk indicator needs a positive radius");
  }
  const double r2 = radius * radius;
  ScalarField f([r2](double x, double y) {
    return x * x + y * y <= r2 ? 1.0 : 0.0;
  });
  f.support = BoxDomain(-radius, radius, -radius, radius);
  auto s = std::make_shared<SliceGeometry>();
  s->x_lo = -radius;
  s->x_hi = radius;
  s->y_interval = [r2](double x) {
    const double t = r2 - x * x;
    if (t <= 0.0) return Interval{0.0, 0.0};
    const double h = std::sqrt(t);
    return Interval{-h, h};
  };
  s->x_breaks = [radius, r2](double y_lo, double y_hi,
                             std::vector<double>& out) {
    for (double y : {y_lo, y_hi}) {
      if (std::abs(y) < radius) {
        const double t = std::sqrt(r2 - y * y);
        out.push_back(-t);
        out.push_back(t);
      }
    }
  };
  f.slices = std::move(s);
  f.norms.sup = 1.0;
  f.norms.l1 = detail::pi() * r2;
  return f;
}

// value * indicator of a closed box.  Norms: sup = |value|, l1 = |value| *
// area; derivative sups do not exist (jump) and are left unset.
inline ScalarField make_box_indicator(const BoxDomain& box, double value = 1.0) {
  if (!std::isfinite(value)) {
    throw ConfigError("box indicator needs a finite value");
  }
  ScalarField f([box, value](double x, double y) {
    return box.contains(x, y) ? value : 0.0;
  });
  f.support = box;
  f.slices = detail::box_slices(box);
  f.norms.sup = std::abs(value);
  f.norms.l1 = std::abs(value) * box.area();
  return f;
}

// Names accepted by make_builtin, with their parameter lists.
inline const std::vector<std::pair<std::string, std::string>>&
builtin_catalog() {
  static const std::vector<std::pair<std::string, std::string>> catalog = {
      {"constant", "constant <value>"},
      {"linear", "linear <a> <b> <c>  (a + b*x + c*y)"},
      {"cos2_bump", "cos2_bump  (cos^2 bump on [-1,1]^2, zero outside)"},
      {"cos2_wave", "cos2_wave  (cos^2 formula extended to the plane)"},
      {"gaussian", "gaussian  (exp(-x^2-y^2))"},
      {"inverse_quartic", "inverse_quartic  (1/(1+x^2+y^2)^2)"},
      {"disk_indicator", "disk_indicator <radius>"},
      {"box_indicator", "box_indicator <x_lo> <x_hi> <y_lo> <y_hi> [value]"},
  };
  return catalog;
}

inline ScalarField make_builtin(const std::string& name,
                                const std::vector<double>& args) {
  const auto expect = [&](size_t count) {
    if (args.size() != count) {
      std::ostringstream os;
      os << "builtin field '" << name << "' takes " << count
         << " parameter(s), got " << args.size();
      throw ConfigError(os.str());
    }
  };
  if (name == "constant") {
    expect(1);
    return make_constant(args[0]);
  }
  if (name == "linear") {
    expect(3);
    return make_linear(args[0], args[1], args[2]);
  }
  if (name == "cos2_bump") {
    expect(0);
    return make_cos2_bump();
  }
  if (name == "cos2_wave") {
    expect(0);
    return make_cos2_wave();
  }
  if (name == "gaussian") {
    expect(0);
    return make_gaussian();
  }
  if (name == "inverse_quartic") {
    expect(0);
    return make_inverse_quartic();
  }
  if (name == "disk_indicator") {
    expect(1);
    return make_disk_indicator(args[0]);
  }
  if (name == "box_indicator") {
    if (args.size() != 4 && args.size() != 5) {
      throw ConfigError(
          "builtin field 'box_indicator' takes 4 or 5 parameters (x_lo x_hi "
          "y_lo y_hi [value])");
    }
    try {
      const BoxDomain box(args[0], args[1], args[2], args[3]);
      return make_box_indicator(box, args.size() == 5 ? args[4] : 1.0);
    } catch (const Error& e) {
      throw ConfigError(std::string("box_indicator: ") + e.what());
    }
  }
  std::ostringstream os;
  os << "unknown builtin field '" << name << "'; available:";
  for (const auto& [n, usage] : builtin_catalog()) os << " " << n;
  throw ConfigError(os.str());
}

}  // namespace cellavg
