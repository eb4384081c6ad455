#ifndef DCFLOW_FORMULATIONS_HPP_
#define DCFLOW_FORMULATIONS_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dcflow/cone_program.hpp"
#include "dcflow/error.hpp"
#include "dcflow/netmodel.hpp"
#include "dcflow/solutions.hpp"

namespace dcflow
{

enum class ModelShape
{
  rl1,   // lifted (p, v, W)
  rls1,  // branch flow (p, v, P, l)
};

enum class Quantity
{
  p,
  v,
  W,
  P_from,
  P_to,
  l,
  cost_epigraph,
  epsilon,
};

struct VarKey
{
  Quantity quantity;
  int index;  // bus or line
  bool operator==(const VarKey&) const = default;
};

/// A compiled model plus the map between program variables and the
/// quantities they stand for. Index vectors hold -1 where a quantity has no
/// variable in this shape.
struct ModelBuild
{
  ModelShape shape = ModelShape::rl1;
  bool line_limits = false;
  ConeProgram program;
  std::vector<VarKey> keys;
  std::vector<int> p, v, W, P_from, P_to, l, epigraph, epsilon;

  int index_of(Quantity q, int i) const
  {
    const std::vector<int>* table = nullptr;
    switch (q) {
      case Quantity::p: table = &p; break;
      case Quantity::v: table = &v; break;
      case Quantity::W: table = &W; break;
      case Quantity::P_from: table = &P_from; break;
      case Quantity::P_to: table = &P_to; break;
      case Quantity::l: table = &l; break;
      case Quantity::cost_epigraph: table = &epigraph; break;
      case Quantity::epsilon: table = &epsilon; break;
    }
    if (i < 0 || static_cast<std::size_t>(i) >= table->size()) return -1;
    return (*table)[static_cast<std::size_t>(i)];
  }

  int add_variable(VarKey key, const std::string& name, std::optional<double> lo = std::nullopt,
                   std::optional<double> hi = std::nullopt, double cost = 0.0)
  {
    keys.push_back(key);
    return program.add_variable(name, lo, hi, cost);
  }
};

namespace detail
{

inline std::string indexed(const char* base, int i) { return std::string(base) + "[" + std::to_string(i) + "]"; }

// p and v variables, slack pinning and the cost terms common to both shapes
inline void add_bus_variables(ModelBuild& mb, const Network& net)
{
  const int n = net.bus_count();
  mb.p.assign(static_cast<std::size_t>(n), -1);
  mb.v.assign(static_cast<std::size_t>(n), -1);
  mb.epigraph.assign(static_cast<std::size_t>(n), -1);
  mb.epsilon.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    if (b.is_slack())
      mb.p[i] = mb.add_variable({Quantity::p, i}, indexed("p", i), std::nullopt, std::nullopt, b.cost.linear);
    else
      mb.p[i] = mb.add_variable({Quantity::p, i}, indexed("p", i), b.p_min, b.p_max, b.cost.linear);
    mb.program.objective_constant += b.cost.constant;
  }
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    if (b.is_slack()) {
      mb.v[i] = mb.add_variable({Quantity::v, i}, indexed("v", i));
    } else {
      mb.v[i] = mb.add_variable({Quantity::v, i}, indexed("v", i), b.v_min * b.v_min, b.v_max * b.v_max);
    }
  }
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    if (b.cost.kind != CostKind::quadratic || b.cost.quadratic == 0.0) continue;
    int t = mb.add_variable({Quantity::cost_epigraph, i}, indexed("t", i), std::nullopt, std::nullopt, 1.0);
    mb.epigraph[i] = t;
    // t * 1 >= a p^2
    mb.program.add_cone(ConeKind::rsoc,
                        {AffineExpr::variable(t), AffineExpr::fixed(1.0),
                         AffineExpr::variable(mb.p[i], std::sqrt(b.cost.quadratic))},
                        indexed("cost", i));
  }
}

inline void pin_slack_voltages(ModelBuild& mb, const Network& net)
{
  for (int i = 0; i < net.bus_count(); ++i) {
    const Bus& b = net.bus(i);
    if (b.is_slack()) mb.program.add_row({{mb.v[i], 1.0}}, b.v_max * b.v_max);
  }
}

}  // namespace detail

/// Lifted SOCP relaxation: injection rows, voltage boxes, W >= 0 and one
/// rotated cone W^2 <= v_i v_j per line.
inline ModelBuild build_rl1(const Network& net)
{
  ModelBuild mb;
  mb.shape = ModelShape::rl1;
  detail::add_bus_variables(mb, net);
  const int m = net.line_count();
  mb.W.assign(static_cast<std::size_t>(m), -1);
  for (int k = 0; k < m; ++k) mb.W[k] = mb.add_variable({Quantity::W, k}, detail::indexed("W", k), 0.0);

  for (int i = 0; i < net.bus_count(); ++i) {
    // p_i - sum_j y_ij (v_i - W_ij) = 0
    std::vector<std::pair<int, double>> row{{mb.p[i], 1.0}, {mb.v[i], -net.total_conductance(i)}};
    for (int k : net.incident_lines(i)) row.emplace_back(mb.W[k], net.line(k).y);
    mb.program.add_row(row, 0.0);
  }
  detail::pin_slack_voltages(mb, net);
  for (int k = 0; k < m; ++k) {
    const Line& ln = net.line(k);
    // v_i v_j - W^2 = (v_i + v_j - 2W) v_i - (v_i - W)^2, so this cone is
    // W^2 <= v_i v_j written in coordinates that stay well away from
    // cancellation when W is close to v.
    const int vi = mb.v[ln.from], vj = mb.v[ln.to], w = mb.W[k];
    mb.program.add_cone(ConeKind::rsoc,
                        {AffineExpr{{{vi, 1.0}, {vj, 1.0}, {w, -2.0}}, 0.0}, AffineExpr::variable(vi),
                         AffineExpr{{{vi, 1.0}, {w, -1.0}}, 0.0}},
                        detail::indexed("rank", k));
  }
  return mb;
}

/// Branch flow relaxation over (p, v, P, l). One rotated cone l v_i >= P_ij^2
/// per line: given the two linear line rows, l v_j - P_ji^2 equals
/// l v_i - P_ij^2, so the reverse orientation adds nothing.
inline ModelBuild build_rls1(const Network& net)
{
  ModelBuild mb;
  mb.shape = ModelShape::rls1;
  detail::add_bus_variables(mb, net);
  const int m = net.line_count();
  mb.P_from.assign(static_cast<std::size_t>(m), -1);
  mb.P_to.assign(static_cast<std::size_t>(m), -1);
  mb.l.assign(static_cast<std::size_t>(m), -1);
  for (int k = 0; k < m; ++k) {
    mb.P_from[k] = mb.add_variable({Quantity::P_from, k}, detail::indexed("Pf", k));
    mb.P_to[k] = mb.add_variable({Quantity::P_to, k}, detail::indexed("Pt", k));
  }
  for (int k = 0; k < m; ++k) mb.l[k] = mb.add_variable({Quantity::l, k}, detail::indexed("l", k));

  for (int i = 0; i < net.bus_count(); ++i) {
    std::vector<std::pair<int, double>> row{{mb.p[i], 1.0}};
    for (int k : net.incident_lines(i))
      row.emplace_back(net.line(k).from == i ? mb.P_from[k] : mb.P_to[k], -1.0);
    mb.program.add_row(row, 0.0);
  }
  for (int k = 0; k < m; ++k) {
    const Line& ln = net.line(k);
    mb.program.add_row({{mb.P_from[k], 1.0}, {mb.P_to[k], 1.0}, {mb.l[k], -ln.z()}}, 0.0);
  }
  for (int k = 0; k < m; ++k) {
    const Line& ln = net.line(k);
    mb.program.add_row({{mb.v[ln.from], 1.0}, {mb.v[ln.to], -1.0}, {mb.P_from[k], -ln.z()}, {mb.P_to[k], ln.z()}},
                       0.0);
  }
  detail::pin_slack_voltages(mb, net);
  for (int k = 0; k < m; ++k) {
    const Line& ln = net.line(k);
    mb.program.add_cone(ConeKind::rsoc,
                        {AffineExpr::variable(mb.l[k]), AffineExpr::variable(mb.v[ln.from]),
                         AffineExpr::variable(mb.P_from[k])},
                        detail::indexed("flow", k));
  }
  return mb;
}

/// Adds the current limits of every limited line. Throws a warning-class
/// NoLimitsPresent when no line carries a limit.
inline ModelBuild add_line_limits(ModelBuild build, const Network& net)
{
  if (!net.has_line_limits())
    throw Error(ErrorCode::no_limits_present, "no line has a current limit", -1, Severity::warning);
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    if (!ln.i_max) continue;
    const double cap = *ln.i_max * *ln.i_max;
    if (build.shape == ModelShape::rls1) {
      auto& up = build.program.upper[build.l[k]];
      up = up ? std::min(*up, cap) : cap;
    } else {
      // I^2 - y^2 (v_i - 2 W + v_j) >= 0
      const double y2 = ln.y * ln.y;
      AffineExpr e{{{build.v[ln.from], -y2}, {build.v[ln.to], -y2}, {build.W[k], 2.0 * y2}}, cap};
      build.program.add_cone(ConeKind::nonneg, {e}, detail::indexed("limit", k));
    }
  }
  build.line_limits = true;
  return build;
}

/// p_i = sum_j V_i (V_i - V_j) y_ij, evaluated directly.
inline std::vector<double> injections_from_voltages(std::span<const double> V, const Network& net)
{
  std::vector<double> p(static_cast<std::size_t>(net.bus_count()), 0.0);
  for (const Line& ln : net.lines()) {
    double d = V[ln.from] - V[ln.to];
    p[ln.from] += V[ln.from] * d * ln.y;
    p[ln.to] -= V[ln.to] * d * ln.y;
  }
  return p;
}

inline LiftedSolution lift_f(std::span<const double> V, const Network& net)
{
  LiftedSolution s;
  for (int i = 0; i < net.bus_count(); ++i)
    if (!(V[i] > 0.0)) throw Error(ErrorCode::nonpositive_voltage, "voltage must be positive", i);
  s.v.resize(V.size());
  for (std::size_t i = 0; i < V.size(); ++i) s.v[i] = V[i] * V[i];
  for (const Line& ln : net.lines()) s.W.push_back(V[ln.from] * V[ln.to]);
  s.p = injections_from_voltages(V, net);
  return s;
}

/// D_ij = v_i v_j - W_ij^2 per line.
inline std::vector<double> rank_gaps(const LiftedSolution& sol, const Network& net)
{
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(net.line_count()));
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    d.push_back(sol.v[ln.from] * sol.v[ln.to] - sol.W[k] * sol.W[k]);
  }
  return d;
}

inline VoltageSolution unlift_f_inv(const LiftedSolution& sol, const Network& net, double tol = 1e-6)
{
  for (int i = 0; i < net.bus_count(); ++i)
    if (!(sol.v[i] > 0.0)) throw Error(ErrorCode::nonpositive_voltage, "squared voltage must be positive", i);
  auto gaps = rank_gaps(sol, net);
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    double vv = sol.v[ln.from] * sol.v[ln.to];
    if (std::abs(gaps[k]) / vv > tol)
      throw Error(ErrorCode::rank_gap_exceeded, "line rank gap " + std::to_string(gaps[k]), k);
  }
  VoltageSolution out;
  out.V.resize(sol.v.size());
  for (std::size_t i = 0; i < sol.v.size(); ++i) out.V[i] = std::sqrt(sol.v[i]);
  out.p = sol.p;
  auto check = injections_from_voltages(out.V, net);
  for (int i = 0; i < net.bus_count(); ++i) {
    double slack = 1e-8;
    for (int k : net.incident_lines(i)) {
      const Line& ln = net.line(k);
      slack += ln.y * std::sqrt(sol.v[ln.from] * sol.v[ln.to]) * tol;
    }
    if (std::abs(check[i] - sol.p[i]) > slack)
      throw Error(ErrorCode::invalid_argument, "injection inconsistent with voltages", i);
  }
  return out;
}

inline BranchFlowSolution map_g(const LiftedSolution& sol, const Network& net)
{
  BranchFlowSolution b;
  b.p = sol.p;
  b.v = sol.v;
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    b.P_from.push_back((sol.v[ln.from] - sol.W[k]) * ln.y);
    b.P_to.push_back((sol.v[ln.to] - sol.W[k]) * ln.y);
    b.l.push_back(ln.y * ln.y * (sol.v[ln.from] - 2.0 * sol.W[k] + sol.v[ln.to]));
  }
  return b;
}

/// W_ij = v_i - z_ij P_ij, checked against the reconstruction from the j side.
inline LiftedSolution map_g_inv(const BranchFlowSolution& sol, const Network& net, double tol = 1e-7)
{
  LiftedSolution s;
  s.p = sol.p;
  s.v = sol.v;
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    double wi = sol.v[ln.from] - ln.z() * sol.P_from[k];
    double wj = sol.v[ln.to] - ln.z() * sol.P_to[k];
    if (std::abs(wi - wj) > tol * (1.0 + std::abs(wi)))
      throw Error(ErrorCode::inconsistent_branch_point, "W reconstructions disagree by " + std::to_string(wi - wj), k);
    s.W.push_back(wi);
  }
  return s;
}

/// Reads the lifted point out of a solved build. For branch flow builds W is
/// the mean of the two one-sided reconstructions.
inline LiftedSolution extract_lifted(const ModelBuild& mb, const std::vector<double>& x, const Network& net)
{
  LiftedSolution s;
  for (int i = 0; i < net.bus_count(); ++i) {
    s.p.push_back(x[mb.p[i]]);
    s.v.push_back(x[mb.v[i]]);
  }
  for (int k = 0; k < net.line_count(); ++k) {
    if (mb.shape == ModelShape::rl1) {
      s.W.push_back(x[mb.W[k]]);
    } else {
      const Line& ln = net.line(k);
      double wi = x[mb.v[ln.from]] - ln.z() * x[mb.P_from[k]];
      double wj = x[mb.v[ln.to]] - ln.z() * x[mb.P_to[k]];
      s.W.push_back(0.5 * (wi + wj));
    }
  }
  return s;
}

inline BranchFlowSolution extract_branch(const ModelBuild& mb, const std::vector<double>& x, const Network& net)
{
  if (mb.shape == ModelShape::rl1) return map_g(extract_lifted(mb, x, net), net);
  BranchFlowSolution b;
  for (int i = 0; i < net.bus_count(); ++i) {
    b.p.push_back(x[mb.p[i]]);
    b.v.push_back(x[mb.v[i]]);
  }
  for (int k = 0; k < net.line_count(); ++k) {
    b.P_from.push_back(x[mb.P_from[k]]);
    b.P_to.push_back(x[mb.P_to[k]]);
    b.l.push_back(x[mb.l[k]]);
  }
  return b;
}

/// Objective h(p) plus any epsilon terms, evaluated at a program point.
inline double model_objective(const ModelBuild& mb, const std::vector<double>& x)
{
  return mb.program.objective_value(x);
}

}  // namespace dcflow

#endif  // DCFLOW_FORMULATIONS_HPP_
