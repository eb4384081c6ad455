#ifndef DCFLOW_ORACLE_HPP_
#define DCFLOW_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dcflow/error.hpp"
#include "dcflow/formulations.hpp"
#include "dcflow/netmodel.hpp"

namespace dcflow
{

/// Per-constraint residuals of a voltage vector. Violations are >= 0;
/// voltages in V units, injections in power, line limits in current.
struct FeasibilityReport
{
  std::vector<double> p;  // injections from the power equation
  std::vector<double> voltage_violation;
  std::vector<double> injection_violation;
  std::vector<double> line_violation;
  double max_voltage_violation = 0.0;
  double max_injection_violation = 0.0;
  double max_line_violation = 0.0;
  bool feasible = true;

  double worst() const
  {
    return std::max({max_voltage_violation, max_injection_violation, max_line_violation});
  }
};

inline FeasibilityReport check_feasible(std::span<const double> V, const Network& net, double tol = 1e-8)
{
  FeasibilityReport r;
  r.p = injections_from_voltages(V, net);
  for (int i = 0; i < net.bus_count(); ++i) {
    const Bus& b = net.bus(i);
    double dv = std::max({b.v_min - V[i], V[i] - b.v_max, 0.0});
    double dp = 0.0;
    if (!b.is_slack()) {
      if (b.p_min) dp = std::max(dp, *b.p_min - r.p[i]);
      if (b.p_max) dp = std::max(dp, r.p[i] - *b.p_max);
    }
    r.voltage_violation.push_back(dv);
    r.injection_violation.push_back(dp);
    r.max_voltage_violation = std::max(r.max_voltage_violation, dv);
    r.max_injection_violation = std::max(r.max_injection_violation, dp);
  }
  for (const Line& ln : net.lines()) {
    double dl = ln.i_max ? std::max(0.0, ln.y * std::abs(V[ln.from] - V[ln.to]) - *ln.i_max) : 0.0;
    r.line_violation.push_back(dl);
    r.max_line_violation = std::max(r.max_line_violation, dl);
  }
  r.feasible = r.worst() <= tol;
  return r;
}

struct OracleResult
{
  std::vector<double> best_V;
  std::vector<double> best_p;
  double best_objective = std::numeric_limits<double>::infinity();
  double grid_step = 0.0;
  double kappa = 0.0;      // Lipschitz bound of the power equation over the box
  double tolerance = 0.0;  // kappa * grid_step, applied to injection bounds
  long long feasible_count = 0;
};

inline constexpr int kOracleMaxBuses = 4;

/// max_i 3 v_max_i sum_j y_ij, an infinity-norm Lipschitz bound of the
/// power equation over the voltage box.
inline double oracle_kappa(const Network& net)
{
  double kappa = 0.0;
  for (int i = 0; i < net.bus_count(); ++i)
    kappa = std::max(kappa, 3.0 * net.bus(i).v_max * net.total_conductance(i));
  return kappa;
}

/// Exhaustive search of the bus injection problem over a voltage grid. Grid
/// points run from v_min in steps of grid_step and always include v_max.
/// Injection bounds are checked with tolerance kappa * grid_step; line
/// limits only when enforce_line_limits is set.
inline OracleResult brute_force_opf1(const Network& net, double grid_step, bool enforce_line_limits = false)
{
  const int n = net.bus_count();
  if (n > kOracleMaxBuses)
    throw Error(ErrorCode::too_many_buses, std::to_string(n) + " buses, limit " + std::to_string(kOracleMaxBuses), n);
  if (!(grid_step > 0.0)) throw Error(ErrorCode::invalid_argument, "grid_step must be positive");

  std::vector<std::vector<double>> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    auto& g = grid[i];
    const auto steps = static_cast<long long>(std::floor((b.v_max - b.v_min) / grid_step + 1e-9));
    for (long long s = 0; s <= steps; ++s) g.push_back(b.v_min + static_cast<double>(s) * grid_step);
    if (g.back() < b.v_max - 1e-12 * b.v_max) g.push_back(b.v_max);
  }

  OracleResult r;
  r.grid_step = grid_step;
  r.kappa = oracle_kappa(net);
  r.tolerance = r.kappa * grid_step;

  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> V(static_cast<std::size_t>(n));
  double tightest = std::numeric_limits<double>::infinity();
  while (true) {
    for (int i = 0; i < n; ++i) V[i] = grid[i][idx[i]];
    std::vector<double> p = injections_from_voltages(V, net);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const Bus& b = net.bus(i);
      if (b.is_slack()) continue;
      if (b.p_min) worst = std::max(worst, *b.p_min - p[i]);
      if (b.p_max) worst = std::max(worst, p[i] - *b.p_max);
    }
    if (enforce_line_limits)
      for (const Line& ln : net.lines())
        if (ln.i_max) worst = std::max(worst, ln.y * std::abs(V[ln.from] - V[ln.to]) - *ln.i_max);
    tightest = std::min(tightest, worst);
    if (worst <= r.tolerance) {
      ++r.feasible_count;
      double h = net.objective(p);
      if (h < r.best_objective) {
        r.best_objective = h;
        r.best_V = V;
        r.best_p = std::move(p);
      }
    }
    // lexicographic: last bus varies fastest
    int d = n - 1;
    while (d >= 0 && ++idx[d] == grid[d].size()) idx[d--] = 0;
    if (d < 0) break;
  }
  if (r.feasible_count == 0)
    throw Error(ErrorCode::no_feasible_point,
                "tightest violation " + std::to_string(tightest) + " exceeds tolerance " + std::to_string(r.tolerance));
  return r;
}

}  // namespace dcflow

#endif  // DCFLOW_ORACLE_HPP_
