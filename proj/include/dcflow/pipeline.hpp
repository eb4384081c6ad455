#ifndef DCFLOW_PIPELINE_HPP_
#define DCFLOW_PIPELINE_HPP_

#include <string_view>

#include "dcflow/cone_solver.hpp"
#include "dcflow/formulations.hpp"
#include "dcflow/netmodel.hpp"

namespace dcflow
{

enum class ModelKind
{
  rl1,
  rls1,
  rl2,
  rls2,
};

constexpr std::string_view to_string(ModelKind k)
{
  switch (k) {
    case ModelKind::rl1: return "rl1";
    case ModelKind::rls1: return "rls1";
    case ModelKind::rl2: return "rl2";
    case ModelKind::rls2: return "rls2";
  }
  return "?";
}

inline ModelBuild build_model(const Network& net, ModelKind kind)
{
  switch (kind) {
    case ModelKind::rl1: return build_rl1(net);
    case ModelKind::rls1: return build_rls1(net);
    case ModelKind::rl2: return add_line_limits(build_rl1(net), net);
    case ModelKind::rls2: return add_line_limits(build_rls1(net), net);
  }
  return build_rl1(net);
}

struct ModelSolution
{
  ModelBuild build;
  SolveResult result;
  LiftedSolution lifted;
  BranchFlowSolution branch;
  double objective = 0.0;  // h(p) plus any penalty terms of the build

  bool optimal() const { return result.report.status == SolveStatus::optimal; }
};

inline ModelSolution solve_build(ModelBuild build, const Network& net, const SolverSettings& settings = {})
{
  ModelSolution ms;
  ms.result = solve(build.program, settings);
  ms.lifted = extract_lifted(build, ms.result.x, net);
  ms.branch = extract_branch(build, ms.result.x, net);
  ms.objective = build.program.objective_value(ms.result.x);
  ms.build = std::move(build);
  return ms;
}

inline ModelSolution solve_model(const Network& net, ModelKind kind, const SolverSettings& settings = {})
{
  return solve_build(build_model(net, kind), net, settings);
}

}  // namespace dcflow

#endif  // DCFLOW_PIPELINE_HPP_
