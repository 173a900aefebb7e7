#pragma once

// Support truncation for densities without compact support: find the
// half-width L such that the mass of rho outside [-L, L]^2 is at most eps.

#include <cmath>
#include <sstream>

#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"
#include "cellavg/quadrature.hpp"

namespace cellavg {

struct TruncationResult {
  double half_width = 0.0;    // L: approximation box is [-L, L]^2
  double achieved_tail = 0.0; // mass outside the box, <= eps
  double eps = 0.0;
  double bracket_lo = 0.0;    // final search interval (width <= resolution)
  double bracket_hi = 0.0;
};

// Finds the smallest half-width on the search lattice whose outside mass is
// at most eps: geometric doubling from L = 1 up to a 2^20 cap to bracket,
// then bisection down to `resolution`.  The tail at L is computed as
// total_mass - (mass inside [-L, L]^2), with total_mass = l1 norm of rho
// supplied by the caller (analytic when available, else quadrature over a
// declared covering box); this avoids integrating over enormous outer boxes
// for slowly decaying densities.  Tiny negative tails within quadrature
// roundoff are clamped to zero, mirroring tail_mass.
inline TruncationResult find_truncation_L(const ScalarField& rho, double eps,
                                          double total_mass,
                                          double resolution = 1e-3,
                                          const QuadratureSpec& spec = {}) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ConfigError("truncation search requires eps > 0");
  }
  if (!(total_mass >= 0.0) || !std::isfinite(total_mass)) {
    throw ConfigError(
        "truncation search requires a finite nonnegative total mass");
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw ConfigError("truncation search requires a positive resolution");
  }

  const auto tail_at = [&](double half_width) {
    const double inside =
        integrate_box(rho, BoxDomain::centered_square(half_width), spec);
    const double tail = total_mass - inside;
    if (tail >= 0.0) return tail;
    const double clamp_threshold =
        10.0 * spec.target_rel_tol * std::max(total_mass, 1.0);
    if (tail > -clamp_threshold) return 0.0;
    std::ostringstream os;
    os << "mass inside half-width " << half_width << " (" << inside
       << ") exceeds the declared total mass " << total_mass
       << " beyond quadrature roundoff; check the total mass";
    throw Error(os.str());
  };

  // Doubling phase from the scale-free starting point L = 1.
  constexpr double kCap = 1048576.0;  // 2^20
  double lo = 1.0;
  double lo_tail = tail_at(lo);
  if (lo_tail <= eps) {
    return TruncationResult{lo, lo_tail, eps, lo, lo};
  }
  double hi = lo;
  double hi_tail = lo_tail;
  while (hi_tail > eps) {
    if (hi >= kCap) {
      std::ostringstream os;
      os << "outside mass still exceeds eps=" << eps << " at half-width "
         << hi << " (tail " << hi_tail
         << "); the mass is not concentrated enough or the total mass is off";
      throw Error(os.str());
    }
    lo = hi;
    hi *= 2.0;
    hi_tail = tail_at(hi);
  }

  // Bisection: tail(lo) > eps >= tail(hi) is maintained throughout, so the
  // returned hi is lattice-minimal (the point one resolution below fails).
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    const double mid_tail = tail_at(mid);
    if (mid_tail <= eps) {
      hi = mid;
      hi_tail = mid_tail;
    } else {
      lo = mid;
    }
  }
  return TruncationResult{hi, hi_tail, eps, lo, hi};
}

}  // namespace cellavg
