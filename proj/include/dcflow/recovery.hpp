#ifndef DCFLOW_RECOVERY_HPP_
#define DCFLOW_RECOVERY_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dcflow/cone_solver.hpp"
#include "dcflow/error.hpp"
#include "dcflow/exactness.hpp"
#include "dcflow/formulations.hpp"
#include "dcflow/netmodel.hpp"
#include "dcflow/oracle.hpp"
#include "dcflow/pipeline.hpp"

namespace dcflow
{

enum class RecoveryMethod
{
  direct,
  slack_iteration,
};

constexpr std::string_view to_string(RecoveryMethod m)
{
  return m == RecoveryMethod::direct ? "direct" : "slack_iteration";
}

struct RecoveryResult
{
  VoltageSolution solution;
  RecoveryMethod method = RecoveryMethod::direct;
  LiftedSolution lifted;  // relaxation optimum the solution was built from
  std::vector<double> bound_violations;  // p_min - p where positive
  std::vector<double> violation_bound;   // analytic bound on p* - p
  std::vector<std::vector<int>> rank_violating_neighbours;  // B_i, line indices
  int iterations = 0;
  std::vector<double> epsilons;  // per bus; zero where no slack was introduced
  bool exact = false;
  double objective = 0.0;  // h(p) at the recovered voltages
  ExactnessReport diagnosis;  // of `lifted`
  FeasibilityReport feasibility;  // of `solution`, injection bounds included
  std::vector<Error> warnings;
};

/// V_i = sqrt(v_i), p from the power equation. Voltage boxes and current
/// limits carry over from the lifted point; injections can only drop.
inline RecoveryResult direct_construct(const LiftedSolution& sol, const Network& net, const Tolerances& tols = {})
{
  const int n = net.bus_count();
  RecoveryResult r;
  r.method = RecoveryMethod::direct;
  r.lifted = sol;
  r.diagnosis = diagnose(sol, net, tols);
  r.exact = r.diagnosis.classification == Classification::exact;
  r.solution.V.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) r.solution.V[i] = std::sqrt(std::max(sol.v[i], 0.0));
  r.solution.p = injections_from_voltages(r.solution.V, net);
  r.objective = net.objective(r.solution.p);

  r.bound_violations.assign(static_cast<std::size_t>(n), 0.0);
  r.violation_bound.assign(static_cast<std::size_t>(n), 0.0);
  r.rank_violating_neighbours.assign(static_cast<std::size_t>(n), {});
  r.epsilons.assign(static_cast<std::size_t>(n), 0.0);
  for (int k : r.diagnosis.rank_violating_lines) {
    r.rank_violating_neighbours[net.line(k).from].push_back(k);
    r.rank_violating_neighbours[net.line(k).to].push_back(k);
  }
  // Every line with a positive gap contributes, so gaps under the rank
  // tolerance are still accounted for in the bound.
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    double slack = std::sqrt(sol.v[ln.from] * sol.v[ln.to]) - sol.W[k];
    if (slack <= 0.0) continue;
    r.violation_bound[ln.from] += slack * ln.y;
    r.violation_bound[ln.to] += slack * ln.y;
  }
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    if (!b.is_slack() && b.p_min) r.bound_violations[i] = std::max(0.0, *b.p_min - r.solution.p[i]);
  }
  r.feasibility = check_feasible(r.solution.V, net);
  return r;
}

/// Raises W to sqrt(v_i v_j) on each listed line and recomputes p. The
/// result is rank-exact on those lines, keeps every constraint of the
/// limited lifted model except the injection lower bounds, and costs less.
inline LiftedSolution close_rank_gaps(const LiftedSolution& sol, const Network& net, const std::vector<int>& lines)
{
  LiftedSolution out = sol;
  for (int k : lines) {
    const Line& ln = net.line(k);
    out.W[k] = std::sqrt(sol.v[ln.from] * sol.v[ln.to]);
  }
  out.p = lifted_injections(out.v, out.W, net);
  return out;
}

struct RecoverySettings
{
  int max_iterations = 10;
  double epsilon_weight = 1.0;
  bool keep_epsilon = true;  // once a bus gets a slack it stays in the model
  ModelKind model = ModelKind::rls2;
  Tolerances tolerances;
  SolverSettings solver;
};

namespace detail
{

// p_i >= p_min_i - eps_i with eps_i >= 0 and weight w in the objective
inline void add_lower_slacks(ModelBuild& mb, const Network& net, const std::set<int>& buses, double weight)
{
  for (int i : buses) {
    const Bus& b = net.bus(i);
    if (!b.p_min || b.is_slack()) continue;
    const int pj = mb.p[i];
    mb.program.lower[pj] = std::nullopt;
    const int e = mb.add_variable({Quantity::epsilon, i}, indexed("eps", i), 0.0, std::nullopt, weight);
    mb.epsilon[i] = e;
    AffineExpr row{{{pj, 1.0}, {e, 1.0}}, -*b.p_min};
    mb.program.add_cone(ConeKind::nonneg, {row}, indexed("relaxed_p_min", i));
  }
}

}  // namespace detail

/// Repeatedly solves the limited relaxation, relaxing the injection lower
/// bound of every bus where a rank violation meets a binding lower bound,
/// until the optimum is rank-exact. Exhausting the iteration budget is
/// reported as a warning on a non-exact result built from the last iterate.
inline RecoveryResult slack_iterate(const Network& net, const RecoverySettings& settings = {})
{
  std::set<int> relaxed;
  RecoveryResult last;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    ModelBuild mb = build_model(net, settings.model);
    detail::add_lower_slacks(mb, net, relaxed, settings.epsilon_weight);
    ModelSolution ms = solve_build(std::move(mb), net, settings.solver);
    if (!ms.optimal())
      throw Error(ErrorCode::solver_failure,
                  std::string(to_string(ms.result.report.status)) + " at iteration " + std::to_string(it), it);

    last = direct_construct(ms.lifted, net, settings.tolerances);
    last.method = RecoveryMethod::slack_iteration;
    last.iterations = it;
    for (int i = 0; i < net.bus_count(); ++i) {
      int e = ms.build.epsilon[i];
      last.epsilons[i] = e >= 0 ? ms.result.x[e] : 0.0;
    }
    if (last.exact) return last;

    if (!settings.keep_epsilon) relaxed.clear();
    const auto before = relaxed.size();
    for (int b : last.diagnosis.recovery_buses) relaxed.insert(b);
    if (relaxed.size() == before && settings.keep_epsilon) {
      last.warnings.emplace_back(ErrorCode::max_iterations_exceeded,
                                 "no new bus to relax after iteration " + std::to_string(it), it, Severity::warning);
      return last;
    }
  }
  last.warnings.emplace_back(ErrorCode::max_iterations_exceeded,
                             "not rank-exact after " + std::to_string(settings.max_iterations) + " iterations",
                             settings.max_iterations, Severity::warning);
  return last;
}

}  // namespace dcflow

#endif  // DCFLOW_RECOVERY_HPP_
