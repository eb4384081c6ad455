#ifndef DCFLOW_CONE_PROGRAM_HPP_
#define DCFLOW_CONE_PROGRAM_HPP_

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dcflow/error.hpp"

namespace dcflow
{

/// sum_k coef_k * x[var_k] + constant
struct AffineExpr
{
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  static AffineExpr variable(int index, double coef = 1.0) { return {{{index, coef}}, 0.0}; }
  static AffineExpr fixed(double value) { return {{}, value}; }

  double eval(const std::vector<double>& x) const
  {
    double r = constant;
    for (const auto& [j, a] : terms) r += a * x[static_cast<std::size_t>(j)];
    return r;
  }
  bool operator==(const AffineExpr&) const = default;
};

enum class ConeKind
{
  nonneg,  // every coordinate >= 0
  soc,     // c0 >= ||(c1, ..., ck)||
  rsoc,    // c0 * c1 >= ||(c2, ..., ck)||^2, c0 >= 0, c1 >= 0
};

constexpr const char* to_string(ConeKind k)
{
  switch (k) {
    case ConeKind::nonneg: return "nonneg";
    case ConeKind::soc: return "soc";
    case ConeKind::rsoc: return "rsoc";
  }
  return "?";
}

/// A cone membership over affine expressions of the program variables.
/// Coordinates may share variables with other blocks.
struct ConeBlock
{
  ConeKind kind = ConeKind::nonneg;
  std::vector<AffineExpr> coords;
  std::string label;

  bool operator==(const ConeBlock&) const = default;
};

struct Triplet
{
  int row = 0;
  int col = 0;
  double value = 0.0;
  bool operator==(const Triplet&) const = default;
};

/// min c'x + c0  s.t.  A x = b,  lower <= x <= upper,  blocks in their cones.
struct ConeProgram
{
  int n_vars = 0;
  std::vector<double> objective;
  double objective_constant = 0.0;
  std::vector<Triplet> eq_entries;
  std::vector<double> eq_rhs;
  std::vector<std::optional<double>> lower;
  std::vector<std::optional<double>> upper;
  std::vector<ConeBlock> cones;
  std::vector<std::string> var_names;

  int n_rows() const { return static_cast<int>(eq_rhs.size()); }

  int add_variable(std::string name = {}, std::optional<double> lo = std::nullopt,
                   std::optional<double> hi = std::nullopt, double cost = 0.0)
  {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    var_names.push_back(std::move(name));
    return n_vars++;
  }

  int add_row(const std::vector<std::pair<int, double>>& coefs, double rhs)
  {
    int r = n_rows();
    for (const auto& [j, a] : coefs) eq_entries.push_back({r, j, a});
    eq_rhs.push_back(rhs);
    return r;
  }

  int add_cone(ConeKind kind, std::vector<AffineExpr> coords, std::string label = {})
  {
    cones.push_back({kind, std::move(coords), std::move(label)});
    return static_cast<int>(cones.size()) - 1;
  }

  double objective_value(const std::vector<double>& x) const
  {
    double r = objective_constant;
    for (int j = 0; j < n_vars; ++j) r += objective[j] * x[j];
    return r;
  }

  /// max_i |(Ax - b)_i|
  double equality_residual(const std::vector<double>& x) const
  {
    std::vector<double> r(eq_rhs.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = -eq_rhs[i];
    for (const auto& t : eq_entries) r[t.row] += t.value * x[t.col];
    double m = 0.0;
    for (double v : r) m = std::max(m, std::abs(v));
    return m;
  }

  /// Largest violation of any bound or cone membership at x (0 when feasible).
  double cone_violation(const std::vector<double>& x) const
  {
    double m = 0.0;
    for (int j = 0; j < n_vars; ++j) {
      if (lower[j]) m = std::max(m, *lower[j] - x[j]);
      if (upper[j]) m = std::max(m, x[j] - *upper[j]);
    }
    for (const auto& cb : cones) {
      std::vector<double> v;
      for (const auto& e : cb.coords) v.push_back(e.eval(x));
      switch (cb.kind) {
        case ConeKind::nonneg:
          for (double c : v) m = std::max(m, -c);
          break;
        case ConeKind::soc: {
          double t = 0.0;
          for (std::size_t k = 1; k < v.size(); ++k) t += v[k] * v[k];
          m = std::max(m, std::sqrt(t) - v[0]);
          break;
        }
        case ConeKind::rsoc: {
          double t = 0.0;
          for (std::size_t k = 2; k < v.size(); ++k) t += v[k] * v[k];
          // distance-like measure of the equivalent SOC form
          double a = 0.5 * (v[0] + v[1]);
          double b = 0.5 * (v[0] - v[1]);
          m = std::max(m, std::sqrt(b * b + t) - a);
          break;
        }
      }
    }
    return m;
  }

  /// Throws InvalidProgram when the structure is inconsistent.
  void validate() const
  {
    auto bad = [](const std::string& what, long subject = -1) {
      throw Error(ErrorCode::invalid_program, what, subject);
    };
    const auto n = static_cast<std::size_t>(n_vars);
    if (n_vars < 0) bad("negative variable count");
    if (objective.size() != n || lower.size() != n || upper.size() != n)
      bad("per-variable arrays do not match n_vars");
    if (!var_names.empty() && var_names.size() != n) bad("var_names size mismatch");
    for (const auto& t : eq_entries)
      if (t.row < 0 || t.row >= n_rows() || t.col < 0 || t.col >= n_vars || !std::isfinite(t.value))
        bad("equality entry out of range", t.row);
    for (int j = 0; j < n_vars; ++j) {
      if (!std::isfinite(objective[j])) bad("non-finite objective", j);
      if (lower[j] && !std::isfinite(*lower[j])) bad("non-finite lower bound", j);
      if (upper[j] && !std::isfinite(*upper[j])) bad("non-finite upper bound", j);
    }
    for (std::size_t k = 0; k < cones.size(); ++k) {
      const auto& cb = cones[k];
      std::size_t need = cb.kind == ConeKind::rsoc ? 3 : 1;
      if (cb.coords.size() < need) bad("cone block has too few coordinates", static_cast<long>(k));
      for (const auto& e : cb.coords)
        for (const auto& [j, a] : e.terms)
          if (j < 0 || j >= n_vars || !std::isfinite(a))
            bad("cone coordinate references a missing variable", static_cast<long>(k));
    }
  }

  bool operator==(const ConeProgram&) const = default;
};

// Plain-text dump. Header line, then one record per line:
//   c <j> <coef>         objective coefficient
//   c0 <value>           objective constant
//   a <row> <col> <val>  equality entry
//   b <row> <rhs>
//   l <j> <lo> / u <j> <hi>
//   k <kind> <ncoords> <label>
//   e <constant> <nterms> (<j> <coef>)*   one per coordinate of the preceding k
inline void write_cone_program(std::ostream& os, const ConeProgram& p)
{
  os << "DCFLOW-CONE 1 " << p.n_vars << ' ' << p.n_rows() << ' ' << p.cones.size() << '\n';
  os << std::setprecision(17);
  for (int j = 0; j < p.n_vars; ++j)
    if (p.objective[j] != 0.0) os << "c " << j << ' ' << p.objective[j] << '\n';
  if (p.objective_constant != 0.0) os << "c0 " << p.objective_constant << '\n';
  for (const auto& t : p.eq_entries) os << "a " << t.row << ' ' << t.col << ' ' << t.value << '\n';
  for (int i = 0; i < p.n_rows(); ++i) os << "b " << i << ' ' << p.eq_rhs[i] << '\n';
  for (int j = 0; j < p.n_vars; ++j) {
    if (p.lower[j]) os << "l " << j << ' ' << *p.lower[j] << '\n';
    if (p.upper[j]) os << "u " << j << ' ' << *p.upper[j] << '\n';
  }
  for (const auto& cb : p.cones) {
    os << "k " << to_string(cb.kind) << ' ' << cb.coords.size() << ' '
       << (cb.label.empty() ? "-" : cb.label) << '\n';
    for (const auto& e : cb.coords) {
      os << "e " << e.constant << ' ' << e.terms.size();
      for (const auto& [j, a] : e.terms) os << ' ' << j << ' ' << a;
      os << '\n';
    }
  }
}

inline ConeProgram read_cone_program(std::istream& is)
{
  auto fail = [](const std::string& what, long line) {
    throw Error(ErrorCode::syntax_error, what, line);
  };
  std::string line;
  long lineno = 1;
  if (!std::getline(is, line)) fail("empty cone dump", lineno);
  std::istringstream hs(line);
  std::string magic;
  int version = 0, n = 0, m = 0;
  std::size_t k = 0;
  if (!(hs >> magic >> version >> n >> m >> k) || magic != "DCFLOW-CONE" || version != 1)
    fail("bad header", lineno);
  ConeProgram p;
  for (int j = 0; j < n; ++j) p.add_variable();
  p.eq_rhs.assign(static_cast<std::size_t>(m), 0.0);
  ConeBlock* current = nullptr;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    bool ok = true;
    if (tag == "c") {
      int j;
      double v;
      ok = static_cast<bool>(ls >> j >> v) && j >= 0 && j < n;
      if (ok) p.objective[j] = v;
    } else if (tag == "c0") {
      ok = static_cast<bool>(ls >> p.objective_constant);
    } else if (tag == "a") {
      Triplet t;
      ok = static_cast<bool>(ls >> t.row >> t.col >> t.value);
      if (ok) p.eq_entries.push_back(t);
    } else if (tag == "b") {
      int i;
      double v;
      ok = static_cast<bool>(ls >> i >> v) && i >= 0 && i < m;
      if (ok) p.eq_rhs[i] = v;
    } else if (tag == "l" || tag == "u") {
      int j;
      double v;
      ok = static_cast<bool>(ls >> j >> v) && j >= 0 && j < n;
      if (ok) (tag == "l" ? p.lower : p.upper)[j] = v;
    } else if (tag == "k") {
      std::string kind, label;
      std::size_t nc;
      ok = static_cast<bool>(ls >> kind >> nc >> label);
      ConeBlock cb;
      if (kind == "nonneg")
        cb.kind = ConeKind::nonneg;
      else if (kind == "soc")
        cb.kind = ConeKind::soc;
      else if (kind == "rsoc")
        cb.kind = ConeKind::rsoc;
      else
        ok = false;
      cb.label = label == "-" ? std::string() : label;
      cb.coords.reserve(nc);
      p.cones.push_back(std::move(cb));
      current = &p.cones.back();
    } else if (tag == "e") {
      AffineExpr e;
      std::size_t nt;
      ok = current != nullptr && static_cast<bool>(ls >> e.constant >> nt);
      for (std::size_t t = 0; ok && t < nt; ++t) {
        int j;
        double a;
        ok = static_cast<bool>(ls >> j >> a);
        e.terms.emplace_back(j, a);
      }
      if (ok) current->coords.push_back(std::move(e));
    } else {
      ok = false;
    }
    if (!ok) fail("malformed record '" + line + "'", lineno);
  }
  if (p.cones.size() != k) fail("cone count does not match header", lineno);
  p.validate();
  return p;
}

}  // namespace dcflow

#endif  // DCFLOW_CONE_PROGRAM_HPP_
