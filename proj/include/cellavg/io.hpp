#pragma once

// Persistence and interchange: sampled-field files, piecewise-constant field
// dumps, study configuration parsing, and CSV study reports.
//
// All formats are decimal text.  Numbers serialize with shortest
// round-trip decimal encoding, so write/read/write cycles are bit-identical
// and CSV output is deterministic.
//
// Sampled-field file ("gridfield"):
//     gridfield 1
//     <x_lo> <x_hi> <y_lo> <y_hi>
//     <nx> <ny>
//     nx lines of ny values     (line i = x node i, entry j = y node j)
// The loaded field evaluates by bilinear interpolation on the node lattice
// and is zero outside the box.
//
// Piecewise-constant dump ("cellfield"):
//     cellfield 1
//     <x_lo> <x_hi> <y_lo> <y_hi>
//     <n>
//     <density|quantity_product>
//     n lines of n values       (line i = x cell i, entry j = y cell j)
//
// Study configuration: line-based "key = value" with [case <name>] sections;
// see parse_study_config below for the schema.
//
// Study CSV: the fixed header kStudyCsvHeader, one data row per (case, N),
// then per case one comment row
//     # constants <name> regime=<regime> norms=<analytic|estimated> k=v ...
// carrying the N-independent bound constants.

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "cellavg/builtins.hpp"
#include "cellavg/discretize.hpp"
#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"
#include "cellavg/harness.hpp"

namespace cellavg {

// Shortest decimal string that round-trips to the same double.
inline std::string fmt_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline double parse_double_token(const std::string& token, int line_no) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    std::ostringstream os;
    os << "line " << line_no << ": expected a number, got '" << token << "'";
    throw ConfigError(os.str());
  }
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "line " << line_no << ": non-finite value '" << token << "'";
    throw ConfigError(os.str());
  }
  return v;
}

inline int parse_int_token(const std::string& token, int line_no) {
  int v = 0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    std::ostringstream os;
    os << "line " << line_no << ": expected an integer, got '" << token << "'";
    throw ConfigError(os.str());
  }
  return v;
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Splits on whitespace, treating commas as separators too (so N lists accept
// both "4 8 16" and "4,8,16").
inline std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == ',') {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sampled-field files

inline void write_field_file(const std::string& path, const ScalarField& f,
                             const BoxDomain& box, int nx, int ny) {
  if (nx < 2 || ny < 2) {
    throw Error("field files need at least 2 samples per axis");
  }
  const auto xs = detail::uniform_nodes(box.l1_lo, box.l1_hi, nx);
  const auto ys = detail::uniform_nodes(box.l2_lo, box.l2_hi, ny);
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "gridfield 1\n";
  out << fmt_double(box.l1_lo) << " " << fmt_double(box.l1_hi) << " "
      << fmt_double(box.l2_lo) << " " << fmt_double(box.l2_hi) << "\n";
  out << nx << " " << ny << "\n";
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double v = f(xs[static_cast<size_t>(i)], ys[static_cast<size_t>(j)]);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "field sample at node (" << i << ", " << j << ") is not finite";
        throw Error(os.str());
      }
      if (j > 0) out << " ";
      out << fmt_double(v);
    }
    out << "\n";
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

namespace detail {

struct SampledGrid {
  BoxDomain box;
  int nx, ny;
  std::vector<double> x_nodes, y_nodes;
  std::vector<double> values;  // x-major: values[i * ny + j]

  double at(int i, int j) const {
    return values[static_cast<size_t>(i) * static_cast<size_t>(ny) +
                  static_cast<size_t>(j)];
  }

  // Index of the lattice interval containing v (binary search on the exact
  // node values, so node evaluations land on interval boundaries exactly).
  static int locate(const std::vector<double>& nodes, double v) {
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
    const int k = static_cast<int>(it - nodes.begin()) - 1;
    return std::clamp(k, 0, static_cast<int>(nodes.size()) - 2);
  }

  double bilinear(double x, double y) const {
    if (x < box.l1_lo || x > box.l1_hi || y < box.l2_lo || y > box.l2_hi) {
      return 0.0;
    }
    const int i = locate(x_nodes, x);
    const int j = locate(y_nodes, y);
    const double tx = (x - x_nodes[static_cast<size_t>(i)]) /
                      (x_nodes[static_cast<size_t>(i) + 1] -
                       x_nodes[static_cast<size_t>(i)]);
    const double ty = (y - y_nodes[static_cast<size_t>(j)]) /
                      (y_nodes[static_cast<size_t>(j) + 1] -
                       y_nodes[static_cast<size_t>(j)]);
    return (1.0 - tx) * (1.0 - ty) * at(i, j) + tx * (1.0 - ty) * at(i + 1, j) +
           (1.0 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
  }
};

}  // namespace detail

inline ScalarField read_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open field file '" + path + "'");

  std::string line;
  int line_no = 0;
  const auto next_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = detail::trim(line);
      if (!t.empty()) return t;
    }
    std::ostringstream os;
    os << "'" << path << "': unexpected end of file at line " << line_no;
    throw ConfigError(os.str());
  };

  const auto header = detail::tokenize(next_line());
  if (header.size() != 2 || header[0] != "gridfield" || header[1] != "1") {
    std::ostringstream os;
    os << "'" << path << "' line " << line_no
       << ": expected header 'gridfield 1'";
    throw ConfigError(os.str());
  }
  const auto bounds = detail::tokenize(next_line());
  if (bounds.size() != 4) {
    std::ostringstream os;
    os << "'" << path << "' line " << line_no << ": expected 4 box bounds";
    throw ConfigError(os.str());
  }
  std::array<double, 4> b{};
  for (size_t k = 0; k < 4; ++k) {
    b[k] = detail::parse_double_token(bounds[k], line_no);
  }
  const auto counts = detail::tokenize(next_line());
  if (counts.size() != 2) {
    std::ostringstream os;
    os << "'" << path << "' line " << line_no << ": expected 'nx ny'";
    throw ConfigError(os.str());
  }
  const int nx = detail::parse_int_token(counts[0], line_no);
  const int ny = detail::parse_int_token(counts[1], line_no);
  if (nx < 2 || ny < 2) {
    std::ostringstream os;
    os << "'" << path << "' line " << line_no
       << ": sample counts must be at least 2 per axis";
    throw ConfigError(os.str());
  }

  auto grid = std::make_shared<detail::SampledGrid>(detail::SampledGrid{
      BoxDomain(b[0], b[1], b[2], b[3]), nx, ny, {}, {}, {}});
  grid->x_nodes = detail::uniform_nodes(b[0], b[1], nx);
  grid->y_nodes = detail::uniform_nodes(b[2], b[3], ny);

  const size_t expected =
      static_cast<size_t>(nx) * static_cast<size_t>(ny);
  grid->values.reserve(expected);
  while (std::getline(in, line)) {
    ++line_no;
    for (const std::string& token : detail::tokenize(detail::trim(line))) {
      const double v = detail::parse_double_token(token, line_no);
      if (grid->values.size() == expected) {
        std::ostringstream os;
        os << "'" << path << "' line " << line_no << ": expected " << expected
           << " values, found more";
        throw ConfigError(os.str());
      }
      grid->values.push_back(v);
    }
  }
  if (grid->values.size() != expected) {
    std::ostringstream os;
    os << "'" << path << "': expected " << expected << " values (nx*ny), found "
       << grid->values.size();
    throw ConfigError(os.str());
  }

  ScalarField f([grid](double x, double y) { return grid->bilinear(x, y); });
  f.support = grid->box;
  f.slices = detail::box_slices(grid->box);
  return f;
}

// ---------------------------------------------------------------------------
// Piecewise-constant dumps

inline const char* cell_field_kind_name(CellFieldKind kind) {
  return kind == CellFieldKind::density ? "density" : "quantity_product";
}

inline void write_cell_field(std::ostream& out,
                             const PiecewiseConstantField& pc) {
  const BoxDomain& box = pc.grid.box;
  out << "cellfield 1\n";
  out << fmt_double(box.l1_lo) << " " << fmt_double(box.l1_hi) << " "
      << fmt_double(box.l2_lo) << " " << fmt_double(box.l2_hi) << "\n";
  out << pc.grid.n << "\n";
  out << cell_field_kind_name(pc.kind) << "\n";
  for (int i = 0; i < pc.grid.n; ++i) {
    for (int j = 0; j < pc.grid.n; ++j) {
      if (j > 0) out << " ";
      out << fmt_double(pc.values.at(i, j));
    }
    out << "\n";
  }
}

inline void write_cell_field_file(const std::string& path,
                                  const PiecewiseConstantField& pc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_cell_field(out, pc);
  if (!out) throw Error("write to '" + path + "' failed");
}

inline PiecewiseConstantField read_cell_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open cell field file '" + path + "'");
  std::string line;
  int line_no = 0;
  const auto next_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = detail::trim(line);
      if (!t.empty()) return t;
    }
    std::ostringstream os;
    os << "'" << path << "': unexpected end of file at line " << line_no;
    throw ConfigError(os.str());
  };

  const auto header = detail::tokenize(next_line());
  if (header.size() != 2 || header[0] != "cellfield" || header[1] != "1") {
    std::ostringstream os;
    os << "'" << path << "' line " << line_no
       << ": expected header 'cellfield 1'";
    throw ConfigError(os.str());
  }
  const auto bounds = detail::tokenize(next_line());
  if (bounds.size() != 4) {
    std::ostringstream os;
    os << "'" << path << "' line " << line_no << ": expected 4 box bounds";
    throw ConfigError(os.str());
  }
  std::array<double, 4> b{};
  for (size_t k = 0; k < 4; ++k) {
    b[k] = detail::parse_double_token(bounds[k], line_no);
  }
  const int n = detail::parse_int_token(detail::tokenize(next_line()).at(0),
                                        line_no);
  if (n < 1) {
    std::ostringstream os;
    os << "'" << path << "' line " << line_no << ": n must be positive";
    throw ConfigError(os.str());
  }
  const std::string kind_name = next_line();
  CellFieldKind kind;
  if (kind_name == "density") {
    kind = CellFieldKind::density;
  } else if (kind_name == "quantity_product") {
    kind = CellFieldKind::quantity_product;
  } else {
    std::ostringstream os;
    os << "'" << path << "' line " << line_no << ": unknown field kind '"
       << kind_name << "'";
    throw ConfigError(os.str());
  }

  PiecewiseConstantField pc{make_grid(BoxDomain(b[0], b[1], b[2], b[3]), n),
                            CellMatrix(n), kind};
  const size_t expected = static_cast<size_t>(n) * static_cast<size_t>(n);
  size_t count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (const std::string& token : detail::tokenize(detail::trim(line))) {
      if (count == expected) {
        std::ostringstream os;
        os << "'" << path << "' line " << line_no << ": expected " << expected
           << " values, found more";
        throw ConfigError(os.str());
      }
      pc.values.v[count++] = detail::parse_double_token(token, line_no);
    }
  }
  if (count != expected) {
    std::ostringstream os;
    os << "'" << path << "': expected " << expected << " values (n*n), found "
       << count;
    throw ConfigError(os.str());
  }
  return pc;
}

// ---------------------------------------------------------------------------
// Field specs ("cos2_bump", "disk_indicator 0.7", "file fields/rho.gf", ...)

inline ScalarField parse_field_spec(const std::string& value, int line_no = 0) {
  const auto tokens = detail::tokenize(value);
  if (tokens.empty()) {
    std::ostringstream os;
    os << "line " << line_no << ": empty field definition";
    throw ConfigError(os.str());
  }
  if (tokens[0] == "file") {
    if (tokens.size() != 2) {
      std::ostringstream os;
      os << "line " << line_no << ": field files are declared as 'file <path>'";
      throw ConfigError(os.str());
    }
    return read_field_file(tokens[1]);
  }
  std::vector<double> args;
  for (size_t k = 1; k < tokens.size(); ++k) {
    args.push_back(detail::parse_double_token(tokens[k], line_no));
  }
  return make_builtin(tokens[0], args);
}

// ---------------------------------------------------------------------------
// Study configuration

struct StudyConfig {
  std::string output = "study.csv";
  double slack = 0.0;
  std::vector<StudyCase> cases;
};

namespace detail {

struct PendingCase {
  StudyCase study;
  bool has_rho = false, has_phi = false, has_regime = false;
  std::map<std::string, double> norm_overrides;  // e.g. "rho_l1" -> value
  std::optional<std::array<double, 4>> rho_support;
};

inline void apply_norm_override(NormData& norms, const std::string& entry,
                                double value, const std::string& key) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ConfigError("norm override " + key +
                      " must be finite and nonnegative");
  }
  if (entry == "l1") {
    norms.l1 = value;
  } else if (entry == "sup") {
    norms.sup = value;
  } else if (entry == "dx_sup") {
    norms.dx_sup = value;
  } else if (entry == "dy_sup") {
    norms.dy_sup = value;
  } else {
    throw ConfigError("unknown norm entry in override " + key);
  }
}

inline void finalize_case(PendingCase& pending, std::vector<StudyCase>& out) {
  StudyCase& c = pending.study;
  if (!pending.has_rho) {
    throw ConfigError("study case '" + c.name + "' does not define rho");
  }
  if (!pending.has_phi) {
    throw ConfigError("study case '" + c.name + "' does not define phi");
  }
  if (!pending.has_regime) {
    throw ConfigError("study case '" + c.name + "' does not select a regime");
  }
  if (pending.rho_support) {
    const auto& s = *pending.rho_support;
    try {
      c.rho.support = BoxDomain(s[0], s[1], s[2], s[3]);
    } catch (const Error& e) {
      throw ConfigError("study case '" + c.name + "': rho_support: " +
                        e.what());
    }
  }
  for (const auto& [key, value] : pending.norm_overrides) {
    const auto underscore = key.find('_');
    const std::string role = key.substr(0, underscore);
    const std::string entry = key.substr(underscore + 1);
    if (role == "rho") {
      apply_norm_override(c.rho.norms, entry, value, key);
    } else if (role == "phi") {
      apply_norm_override(c.phi.norms, entry, value, key);
    } else {
      if (!c.omega) {
        throw ConfigError("study case '" + c.name + "': " + key +
                          " given but no omega field is defined");
      }
      apply_norm_override(c.omega->norms, entry, value, key);
    }
  }
  validate_study_case(c);
  out.push_back(c);
}

}  // namespace detail

// Parses a study configuration document.
//
// Top-level keys:
//   output = <csv path>           (default study.csv)
//   slack  = <real >= 0>          (bound-check slack, default 0)
// Case sections start with "[case <name>]"; keys inside a section:
//   regime = smooth_compact | smooth_truncated | bounded_compact |
//            bounded_truncated                                (required)
//   rho = <field spec>                                        (required)
//   phi = <field spec>                                        (required)
//   omega = <field spec>                 (optional quantity field)
//   eps = <real>                         (truncated regimes only)
//   n_values = 4 8 16 32 64              (default shown)
//   quad_points / quad_panels / quad_rel_tol / quad_max_panels
//   truncation_resolution = <real>       (default 1e-3)
//   threads = <int>
//   rho_support = x_lo x_hi y_lo y_hi    (declared-support override)
//   {rho,phi,omega}_{l1,sup,dx_sup,dy_sup} = <real>  (norm overrides)
//   override_{c_density,k_quantity,d_density} = <real>  (pin a constant)
// Field specs name a builtin with parameters ("disk_indicator 0.7") or load
// a sampled file ("file <path>").  Unknown keys are rejected.
inline StudyConfig parse_study_config(const std::string& text) {
  StudyConfig config;
  std::optional<detail::PendingCase> pending;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;

  const auto fail = [&](const std::string& msg) {
    std::ostringstream os;
    os << "line " << line_no << ": " << msg;
    throw ConfigError(os.str());
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      const auto tokens = detail::tokenize(line.substr(1, line.size() - 2));
      if (tokens.size() != 2 || tokens[0] != "case") {
        fail("expected section header '[case <name>]'");
      }
      if (pending) detail::finalize_case(*pending, config.cases);
      pending.emplace();
      pending->study.name = tokens[1];
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) fail("missing key before '='");
    if (value.empty()) fail("missing value for key '" + key + "'");

    if (!pending) {
      if (key == "output") {
        config.output = value;
      } else if (key == "slack") {
        config.slack = detail::parse_double_token(value, line_no);
        if (config.slack < 0.0) fail("slack must be nonnegative");
      } else {
        fail("unknown top-level key '" + key +
             "' (cases start with '[case <name>]')");
      }
      continue;
    }

    StudyCase& c = pending->study;
    if (key == "regime") {
      c.regime = regime_from_name(value);
      pending->has_regime = true;
    } else if (key == "rho") {
      c.rho = parse_field_spec(value, line_no);
      pending->has_rho = true;
    } else if (key == "phi") {
      c.phi = parse_field_spec(value, line_no);
      pending->has_phi = true;
    } else if (key == "omega") {
      c.omega = parse_field_spec(value, line_no);
    } else if (key == "eps") {
      c.eps = detail::parse_double_token(value, line_no);
    } else if (key == "n_values") {
      c.n_values.clear();
      for (const std::string& token : detail::tokenize(value)) {
        c.n_values.push_back(detail::parse_int_token(token, line_no));
      }
    } else if (key == "quad_points") {
      c.quad.points_per_axis_per_panel = detail::parse_int_token(value, line_no);
    } else if (key == "quad_panels") {
      c.quad.panels_per_axis = detail::parse_int_token(value, line_no);
    } else if (key == "quad_rel_tol") {
      c.quad.target_rel_tol = detail::parse_double_token(value, line_no);
    } else if (key == "quad_max_panels") {
      c.quad.max_panels_per_axis = detail::parse_int_token(value, line_no);
    } else if (key == "truncation_resolution") {
      c.truncation_resolution = detail::parse_double_token(value, line_no);
    } else if (key == "threads") {
      c.threads = detail::parse_int_token(value, line_no);
      if (c.threads < 1) fail("threads must be at least 1");
    } else if (key == "rho_support") {
      const auto tokens = detail::tokenize(value);
      if (tokens.size() != 4) fail("rho_support needs 4 bounds");
      std::array<double, 4> s{};
      for (size_t k = 0; k < 4; ++k) {
        s[k] = detail::parse_double_token(tokens[k], line_no);
      }
      pending->rho_support = s;
    } else if (key.rfind("override_", 0) == 0) {
      const std::string constant = key.substr(9);
      if (constant != "c_density" && constant != "k_quantity" &&
          constant != "d_density") {
        fail("unknown constant override '" + key + "'");
      }
      c.overrides[constant] = detail::parse_double_token(value, line_no);
    } else if (key.rfind("rho_", 0) == 0 || key.rfind("phi_", 0) == 0 ||
               key.rfind("omega_", 0) == 0) {
      const std::string entry = key.substr(key.find('_') + 1);
      if (entry != "l1" && entry != "sup" && entry != "dx_sup" &&
          entry != "dy_sup") {
        fail("unknown case key '" + key + "'");
      }
      pending->norm_overrides[key] =
          detail::parse_double_token(value, line_no);
    } else {
      fail("unknown case key '" + key + "'");
    }
  }

  if (pending) detail::finalize_case(*pending, config.cases);
  if (config.cases.empty()) {
    throw ConfigError("study config declares no cases");
  }
  return config;
}

inline StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open study config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_study_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError("'" + path + "' " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Study CSV

inline constexpr const char* kStudyCsvHeader =
    "name,regime,N,L,eps,measured_error_density,bound_density,ratio_density,"
    "measured_error_quantity,bound_quantity,ratio_quantity";

inline void write_study_csv(std::ostream& out,
                            const std::vector<StudyResult>& results) {
  out << kStudyCsvHeader << "\n";
  for (const StudyResult& r : results) {
    const std::string l_text =
        r.half_width ? fmt_double(*r.half_width) : std::string();
    const std::string eps_text = r.eps ? fmt_double(*r.eps) : std::string();
    for (size_t k = 0; k < r.density.size(); ++k) {
      const ConvergenceRecord& d = r.density[k];
      out << r.name << "," << regime_name(r.regime) << "," << d.n << ","
          << l_text << "," << eps_text << "," << fmt_double(d.measured_error)
          << "," << fmt_double(d.bound) << "," << fmt_double(d.ratio) << ",";
      if (k < r.quantity.size()) {
        const ConvergenceRecord& q = r.quantity[k];
        out << fmt_double(q.measured_error) << "," << fmt_double(q.bound)
            << "," << fmt_double(q.ratio);
      } else {
        out << ",,";
      }
      out << "\n";
    }
    out << "# constants " << r.name << " regime=" << regime_name(r.regime)
        << " norms=" << (r.norms_estimated ? "estimated" : "analytic");
    for (const auto& [key, value] : r.constants) {
      out << " " << key << "=" << fmt_double(value);
    }
    out << "\n";
  }
}

}  // namespace cellavg
