#ifndef DCFLOW_REPORT_HPP_
#define DCFLOW_REPORT_HPP_

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcflow/cone_solver.hpp"
#include "dcflow/exactness.hpp"
#include "dcflow/netmodel.hpp"
#include "dcflow/oracle.hpp"
#include "dcflow/recovery.hpp"
#include "dcflow/solutions.hpp"

namespace dcflow
{

inline constexpr const char* kReportSchema = "dcflow-report/1";

using nlohmann::json;

inline json to_json(const VoltageSolution& s) { return {{"V", s.V}, {"p", s.p}}; }

inline json to_json(const LiftedSolution& s) { return {{"p", s.p}, {"v", s.v}, {"W", s.W}}; }

inline json to_json(const BranchFlowSolution& s)
{
  return {{"p", s.p}, {"v", s.v}, {"P_from", s.P_from}, {"P_to", s.P_to}, {"l", s.l}};
}

inline json to_json(const SolveReport& r)
{
  return {{"status", to_string(r.status)},
          {"iterations", r.iterations},
          {"primal_residual", r.primal_residual},
          {"dual_residual", r.dual_residual},
          {"duality_gap", r.duality_gap},
          {"primal_objective", r.primal_objective},
          {"dual_objective", r.dual_objective},
          {"solve_seed", r.solve_seed}};
}

inline json to_json(const SolverSettings& s)
{
  return {{"tol_p", s.tol_p},
          {"tol_d", s.tol_d},
          {"tol_gap", s.tol_gap},
          {"max_iter", s.max_iter},
          {"static_reg", s.static_reg},
          {"refine_passes", s.refine_passes},
          {"step_fraction", s.step_fraction},
          {"seed", s.seed},
          {"equilibrate", s.equilibrate},
          {"presolve", s.presolve}};
}

inline json to_json(const Tolerances& t) { return {{"gap", t.gap}, {"binding", t.binding}, {"loss", t.loss}}; }

inline const char* to_string(Tristate t)
{
  switch (t) {
    case Tristate::holds: return "holds";
    case Tristate::fails: return "fails";
    case Tristate::solution_dependent: return "solution_dependent";
  }
  return "?";
}

inline json to_json(const AssumptionReport& a)
{
  json j = {{"a1_uniform_vmax", a.a1_uniform_vmax},
            {"a2_positive_loss", to_string(a.a2_positive_loss)},
            {"positive_lower_injection", a.positive_lower_injection}};
  j["total_injection"] = a.total_injection ? json(*a.total_injection) : json(nullptr);
  if (!a.note.empty()) j["note"] = a.note;
  return j;
}

inline json to_json(const ExactnessReport& r)
{
  return {{"classification", to_string(r.classification)},
          {"max_gap", r.max_gap},
          {"normalized_max_gap", r.normalized_max_gap},
          {"per_line_gap", r.per_line_gap},
          {"normalized_gap", r.normalized_gap},
          {"rank_violating_lines", r.rank_violating_lines},
          {"binding_p_lower", r.binding_p_lower},
          {"binding_line_limits", r.binding_line_limits},
          {"recovery_buses", r.recovery_buses},
          {"no_limit_binding", r.no_limit_binding},
          {"limits_clear_of_lower", r.limits_clear_of_lower},
          {"assumptions", to_json(r.assumptions)},
          {"failed_assumptions", r.failed_assumptions},
          {"tolerances", to_json(r.tolerances)}};
}

inline json to_json(const FeasibilityReport& f)
{
  return {{"feasible", f.feasible},
          {"max_voltage_violation", f.max_voltage_violation},
          {"max_injection_violation", f.max_injection_violation},
          {"max_line_violation", f.max_line_violation},
          {"voltage_violation", f.voltage_violation},
          {"injection_violation", f.injection_violation},
          {"line_violation", f.line_violation}};
}

inline json to_json(const RecoveryResult& r)
{
  json warnings = json::array();
  for (const auto& w : r.warnings) warnings.push_back(w.what());
  return {{"method", to_string(r.method)},
          {"exact", r.exact},
          {"iterations", r.iterations},
          {"objective", r.objective},
          {"solution", to_json(r.solution)},
          {"lifted", to_json(r.lifted)},
          {"bound_violations", r.bound_violations},
          {"violation_bound", r.violation_bound},
          {"rank_violating_neighbours", r.rank_violating_neighbours},
          {"epsilons", r.epsilons},
          {"feasibility", to_json(r.feasibility)},
          {"diagnosis", to_json(r.diagnosis)},
          {"warnings", warnings}};
}

inline json to_json(const OracleResult& r)
{
  return {{"best_V", r.best_V},
          {"best_p", r.best_p},
          {"best_objective", r.best_objective},
          {"grid_step", r.grid_step},
          {"kappa", r.kappa},
          {"tolerance", r.tolerance},
          {"feasible_count", r.feasible_count}};
}

inline constexpr const char* kExactnessCsvHeader =
    "line,from,to,gap,normalized_gap,rank_violating,limit_binding,from_lower_binding,to_lower_binding";

/// One row per line; bus columns use the case's bus ids.
inline std::string exactness_csv(const ExactnessReport& r, const Network& net)
{
  auto contains = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  std::ostringstream os;
  os << kExactnessCsvHeader << "\n" << std::setprecision(17);
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    os << k << "," << net.bus(ln.from).id << "," << net.bus(ln.to).id << "," << r.per_line_gap[k] << ","
       << r.normalized_gap[k] << "," << contains(r.rank_violating_lines, k) << ","
       << contains(r.binding_line_limits, k) << "," << contains(r.binding_p_lower, ln.from) << ","
       << contains(r.binding_p_lower, ln.to) << "\n";
  }
  return os.str();
}

}  // namespace dcflow

#endif  // DCFLOW_REPORT_HPP_
