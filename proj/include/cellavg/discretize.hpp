#pragma once

// Uniform-grid cell-average discretization of scalar fields and the weak-form
// error measurements against quadrature references.

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"
#include "cellavg/quadrature.hpp"

namespace cellavg {

// Uniform N x N grid over a box.  Nodes follow lo + k*extent/N with both
// endpoints assigned exactly (not accumulated), so the first and last nodes
// equal the box bounds bit-for-bit.
struct Grid {
  BoxDomain box;
  int n;
  std::vector<double> x_nodes;  // size n+1, ascending
  std::vector<double> y_nodes;  // size n+1, ascending

  double cell_width1() const { return box.delta1() / n; }
  double cell_width2() const { return box.delta2() / n; }
  double cell_area() const { return box.area() / (static_cast<double>(n) * n); }

  BoxDomain cell(int i, int j) const {
    return BoxDomain(x_nodes[static_cast<size_t>(i)],
                     x_nodes[static_cast<size_t>(i) + 1],
                     y_nodes[static_cast<size_t>(j)],
                     y_nodes[static_cast<size_t>(j) + 1]);
  }

  // Lower-left cell corner (the anchor point of the error decomposition).
  double corner_x(int i) const { return x_nodes[static_cast<size_t>(i)]; }
  double corner_y(int j) const { return y_nodes[static_cast<size_t>(j)]; }
};

inline Grid make_grid(const BoxDomain& box, int n) {
  if (n < 1) {
    std::ostringstream os;
    os << "grid needs at least one cell per axis (got n=" << n << ")";
    throw Error(os.str());
  }
  Grid g{box, n, {}, {}};
  g.x_nodes.resize(static_cast<size_t>(n) + 1);
  g.y_nodes.resize(static_cast<size_t>(n) + 1);
  const double d1 = box.delta1();
  const double d2 = box.delta2();
  for (int k = 0; k <= n; ++k) {
    g.x_nodes[static_cast<size_t>(k)] = box.l1_lo + k * d1 / n;
    g.y_nodes[static_cast<size_t>(k)] = box.l2_lo + k * d2 / n;
  }
  g.x_nodes.front() = box.l1_lo;
  g.x_nodes.back() = box.l1_hi;
  g.y_nodes.front() = box.l2_lo;
  g.y_nodes.back() = box.l2_hi;
  return g;
}

// Square matrix of per-cell values, row-major with (i, j) = (x-cell, y-cell).
struct CellMatrix {
  int n = 0;
  std::vector<double> v;

  CellMatrix() = default;
  explicit CellMatrix(int size)
      : n(size), v(static_cast<size_t>(size) * static_cast<size_t>(size), 0.0) {}

  double& at(int i, int j) {
    return v[static_cast<size_t>(i) * static_cast<size_t>(n) +
             static_cast<size_t>(j)];
  }
  double at(int i, int j) const {
    return v[static_cast<size_t>(i) * static_cast<size_t>(n) +
             static_cast<size_t>(j)];
  }
};

namespace detail {

// Runs fn(k) for k in [0, count) over up to `threads` workers on contiguous
// index ranges.  Each k writes only its own output slot, so results are
// identical for any thread count.
template <typename Fn>
inline void parallel_for(size_t count, int threads, Fn&& fn) {
  const int usable = std::max(1, threads);
  if (usable == 1 || count < 2) {
    for (size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  const size_t workers =
      std::min<size_t>(static_cast<size_t>(usable), count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const size_t chunk = (count + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    const size_t lo = w * chunk;
    const size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (size_t k = lo; k < hi; ++k) fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// Per-cell averages of f: entry (i,j) = N^2/(D1*D2) * integral of f over cell
// (i,j).  Computes density averages (f = rho) and quantity averages (f =
// omega) alike.
inline CellMatrix cell_averages(const ScalarField& f, const Grid& grid,
                                const QuadratureSpec& spec = {},
                                int threads = 1) {
  CellMatrix out(grid.n);
  const double inv_area = 1.0 / grid.cell_area();
  detail::parallel_for(
      static_cast<size_t>(grid.n) * static_cast<size_t>(grid.n), threads,
      [&](size_t k) {
        const int i = static_cast<int>(k) / grid.n;
        const int j = static_cast<int>(k) % grid.n;
        try {
          out.at(i, j) = integrate_box(f, grid.cell(i, j), spec) * inv_area;
        } catch (const Error& e) {
          std::ostringstream os;
          os << "cell average failed at cell (" << i << ", " << j
             << "): " << e.what();
          throw Error(os.str());
        }
      });
  return out;
}

enum class CellFieldKind { density, quantity_product };

// Piecewise-constant field over a grid: constant on each half-open cell
// [x_i, x_{i+1}) x [y_j, y_{j+1}) with the last row/column closed so the
// upper-right box corner is covered; identically zero outside the box.
struct PiecewiseConstantField {
  Grid grid;
  CellMatrix values;
  CellFieldKind kind = CellFieldKind::density;

  double cell_value(int i, int j) const { return values.at(i, j); }

  double operator()(double x, double y) const {
    if (x < grid.box.l1_lo || x > grid.box.l1_hi || y < grid.box.l2_lo ||
        y > grid.box.l2_hi) {
      return 0.0;
    }
    return values.at(locate(grid.x_nodes, x), locate(grid.y_nodes, y));
  }

  // Total mass: sum of values times the uniform cell area.
  double mass() const {
    detail::KahanSum acc;
    for (double a : values.v) acc.add(a);
    return acc.value() * grid.cell_area();
  }

 private:
  // Index of the cell whose half-open span contains v; binary search on the
  // exact node values keeps corner evaluations on the correct cell.
  int locate(const std::vector<double>& nodes, double v) const {
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
    const int k = static_cast<int>(it - nodes.begin()) - 1;
    return std::clamp(k, 0, grid.n - 1);
  }
};

// Builds the piecewise-constant density approximation.  A nonnegative source
// density must yield nonnegative averages up to quadrature roundoff; a cell
// average below that slack raises an error.
inline PiecewiseConstantField build_density_approx(const ScalarField& rho,
                                                   const Grid& grid,
                                                   const QuadratureSpec& spec = {},
                                                   int threads = 1) {
  PiecewiseConstantField pc{grid, cell_averages(rho, grid, spec, threads),
                            CellFieldKind::density};
  double max_abs = 0.0;
  for (double a : pc.values.v) max_abs = std::max(max_abs, std::abs(a));
  const double slack = 10.0 * spec.target_rel_tol * std::max(1.0, max_abs);
  for (int i = 0; i < grid.n; ++i) {
    for (int j = 0; j < grid.n; ++j) {
      if (pc.values.at(i, j) < -slack) {
        std::ostringstream os;
        os << "cell (" << i << ", " << j << ") has negative average "
           << pc.values.at(i, j)
           << "; density approximation requires a nonnegative source";
        throw Error(os.str());
      }
    }
  }
  return pc;
}

// Builds the piecewise-constant quantity field with per-cell values
// a_{i,j} * W_{i,j} from separately computed density and quantity averages.
inline PiecewiseConstantField build_quantity_approx(const CellMatrix& rho_avgs,
                                                    const CellMatrix& omega_avgs,
                                                    const Grid& grid) {
  if (rho_avgs.n != grid.n || omega_avgs.n != grid.n) {
    std::ostringstream os;
    os << "average matrices must match the grid (grid n=" << grid.n
       << ", density n=" << rho_avgs.n << ", quantity n=" << omega_avgs.n
       << ")";
    throw Error(os.str());
  }
  PiecewiseConstantField pc{grid, CellMatrix(grid.n),
                            CellFieldKind::quantity_product};
  for (int i = 0; i < grid.n; ++i) {
    for (int j = 0; j < grid.n; ++j) {
      pc.values.at(i, j) = rho_avgs.at(i, j) * omega_avgs.at(i, j);
    }
  }
  return pc;
}

// Weak-form integral of the piecewise-constant field against phi:
// sum over cells of value * (integral of phi over the cell), quadrature
// panels aligned per cell.  Cells with an exactly zero value are skipped.
inline double weak_integral(const PiecewiseConstantField& pc,
                            const ScalarField& phi,
                            const QuadratureSpec& spec = {}, int threads = 1) {
  const int n = pc.grid.n;
  std::vector<double> terms(static_cast<size_t>(n) * static_cast<size_t>(n),
                            0.0);
  detail::parallel_for(terms.size(), threads, [&](size_t k) {
    const int i = static_cast<int>(k) / n;
    const int j = static_cast<int>(k) % n;
    const double a = pc.values.at(i, j);
    if (a == 0.0) return;
    terms[k] = a * integrate_box(phi, pc.grid.cell(i, j), spec);
  });
  detail::KahanSum acc;
  for (double t : terms) acc.add(t);
  return acc.value();
}

// Smallest box covering the approximation box and the declared supports of
// the reference integrand's factors: the reference integral over the plane
// reduces to this box because the integrand vanishes outside every declared
// support.  Factors without a declared support contribute no constraint.
inline BoxDomain covering_box(const BoxDomain& grid_box,
                              const std::vector<const ScalarField*>& factors) {
  std::optional<BoxDomain> common;
  bool any_declared = false;
  for (const ScalarField* f : factors) {
    if (!f->support) continue;
    if (!any_declared) {
      common = *f->support;
      any_declared = true;
    } else if (common) {
      common = BoxDomain::intersection(*common, *f->support);
    }
  }
  // Declared supports that intersect in at most a line mean the integrand is
  // identically zero; the approximation box alone then covers everything.
  if (!common) return grid_box;
  return BoxDomain::hull(grid_box, *common);
}

// |weak integral of the approximation - reference integral of rho * phi|.
inline double weak_error_density(const ScalarField& rho,
                                 const PiecewiseConstantField& pc,
                                 const ScalarField& phi,
                                 const QuadratureSpec& spec = {},
                                 int threads = 1) {
  const BoxDomain ref_box = covering_box(pc.grid.box, {&rho, &phi});
  const double reference = integrate_product_box(rho, phi, ref_box, spec);
  return std::abs(weak_integral(pc, phi, spec, threads) - reference);
}

// |weak integral of the quantity approximation - reference of rho*omega*phi|.
inline double weak_error_quantity(const ScalarField& rho,
                                  const ScalarField& omega,
                                  const PiecewiseConstantField& pcq,
                                  const ScalarField& phi,
                                  const QuadratureSpec& spec = {},
                                  int threads = 1) {
  const BoxDomain ref_box = covering_box(pcq.grid.box, {&rho, &omega, &phi});
  const double reference = integrate_product_box(rho, omega, phi, ref_box, spec);
  return std::abs(weak_integral(pcq, phi, spec, threads) - reference);
}

// Residual of the exact error decomposition for the density approximation:
//   weak error = -(mass of rho*phi outside the box)
//                + sum over cells of integral of (a_{i,j} - rho) *
//                  (phi - phi(corner)),
// with the test function anchored at each cell's lower-left corner.  Both
// sides are assembled from independent quadrature passes; the result should
// vanish up to quadrature accuracy regardless of field regularity.
inline double decomposition_residual(const ScalarField& rho, const Grid& grid,
                                     const ScalarField& phi,
                                     const QuadratureSpec& spec = {},
                                     int threads = 1) {
  const PiecewiseConstantField pc =
      build_density_approx(rho, grid, spec, threads);
  const BoxDomain ref_box = covering_box(grid.box, {&rho, &phi});
  const double reference = integrate_product_box(rho, phi, ref_box, spec);
  const double inside = integrate_product_box(rho, phi, grid.box, spec);
  const double tail = reference - inside;
  const double lhs = weak_integral(pc, phi, spec, threads) - reference;

  const size_t cells = static_cast<size_t>(grid.n) * static_cast<size_t>(grid.n);
  std::vector<double> terms(cells, 0.0);
  const double cell_area = grid.cell_area();
  detail::parallel_for(cells, threads, [&](size_t k) {
    const int i = static_cast<int>(k) / grid.n;
    const int j = static_cast<int>(k) % grid.n;
    const BoxDomain cell = grid.cell(i, j);
    const double corner = phi(grid.corner_x(i), grid.corner_y(j));
    const double a = pc.values.at(i, j);
    const double phi_int = integrate_box(phi, cell, spec);
    const double rho_phi_int = integrate_product_box(rho, phi, cell, spec);
    const double rho_int = integrate_box(rho, cell, spec);
    // integral of (a - rho)(phi - corner) split into exactly equivalent
    // pieces that keep the support-clipped quadrature paths applicable.
    terms[k] = a * (phi_int - corner * cell_area) -
               (rho_phi_int - corner * rho_int);
  });
  detail::KahanSum acc;
  acc.add(-tail);
  for (double t : terms) acc.add(t);
  return std::abs(lhs - acc.value());
}

// Residual of the exact error decomposition for the quantity approximation:
//   weak error = -(tail of rho*omega*phi)
//                + sum of phi(corner) * (W_{i,j} * cell rho - cell rho*omega)
//                + sum of integral of (a_{i,j} W_{i,j} - rho omega)(phi - corner).
inline double quantity_decomposition_residual(const ScalarField& rho,
                                              const ScalarField& omega,
                                              const Grid& grid,
                                              const ScalarField& phi,
                                              const QuadratureSpec& spec = {},
                                              int threads = 1) {
  const PiecewiseConstantField pc =
      build_density_approx(rho, grid, spec, threads);
  const CellMatrix w = cell_averages(omega, grid, spec, threads);
  const PiecewiseConstantField pcq = build_quantity_approx(pc.values, w, grid);

  const BoxDomain ref_box = covering_box(grid.box, {&rho, &omega, &phi});
  const double reference =
      integrate_product_box(rho, omega, phi, ref_box, spec);
  const double inside = integrate_product_box(rho, omega, phi, grid.box, spec);
  const double tail = reference - inside;
  const double lhs = weak_integral(pcq, phi, spec, threads) - reference;

  const size_t cells = static_cast<size_t>(grid.n) * static_cast<size_t>(grid.n);
  std::vector<double> terms(cells, 0.0);
  const double cell_area = grid.cell_area();
  detail::parallel_for(cells, threads, [&](size_t k) {
    const int i = static_cast<int>(k) / grid.n;
    const int j = static_cast<int>(k) % grid.n;
    const BoxDomain cell = grid.cell(i, j);
    const double corner = phi(grid.corner_x(i), grid.corner_y(j));
    const double a = pc.values.at(i, j);
    const double wij = w.at(i, j);
    const double phi_int = integrate_box(phi, cell, spec);
    const double rho_int = integrate_box(rho, cell, spec);
    const double rho_omega_int = integrate_product_box(rho, omega, cell, spec);
    const double rho_omega_phi_int =
        integrate_product_box(rho, omega, phi, cell, spec);
    terms[k] = corner * (wij * rho_int - rho_omega_int) +
               a * wij * (phi_int - corner * cell_area) -
               (rho_omega_phi_int - corner * rho_omega_int);
  });
  detail::KahanSum acc;
  acc.add(-tail);
  for (double t : terms) acc.add(t);
  return std::abs(lhs - acc.value());
}

}  // namespace cellavg
