#ifndef DCFLOW_ERROR_HPP_
#define DCFLOW_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcflow
{

enum class ErrorCode
{
  // netmodel
  disconnected,
  nonpositive_conductance,
  bad_bounds,
  non_increasing_cost,
  non_convex_cost,
  positive_lower_injection,
  bad_line,
  // caseio
  syntax_error,
  schema_error,
  unsupported_feature,
  unknown_case,
  io_error,
  // formulations
  nonpositive_voltage,
  rank_gap_exceeded,
  inconsistent_branch_point,
  no_limits_present,
  // conesolver
  invalid_program,
  proven_infeasible,
  // exactness / recovery / oracle
  construction_failed,
  solver_failure,
  max_iterations_exceeded,
  too_many_buses,
  no_feasible_point,
  invalid_argument,
};

enum class Severity
{
  error,
  warning,
};

constexpr std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::disconnected: return "Disconnected";
    case ErrorCode::nonpositive_conductance: return "NonpositiveConductance";
    case ErrorCode::bad_bounds: return "BadBounds";
    case ErrorCode::non_increasing_cost: return "NonIncreasingCost";
    case ErrorCode::non_convex_cost: return "NonConvexCost";
    case ErrorCode::positive_lower_injection: return "PositiveLowerInjection";
    case ErrorCode::bad_line: return "BadLine";
    case ErrorCode::syntax_error: return "SyntaxError";
    case ErrorCode::schema_error: return "SchemaError";
    case ErrorCode::unsupported_feature: return "UnsupportedFeature";
    case ErrorCode::unknown_case: return "UnknownCase";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::nonpositive_voltage: return "NonpositiveVoltage";
    case ErrorCode::rank_gap_exceeded: return "RankGapExceeded";
    case ErrorCode::inconsistent_branch_point: return "InconsistentBranchPoint";
    case ErrorCode::no_limits_present: return "NoLimitsPresent";
    case ErrorCode::invalid_program: return "InvalidProgram";
    case ErrorCode::proven_infeasible: return "ProvenInfeasible";
    case ErrorCode::construction_failed: return "ConstructionFailed";
    case ErrorCode::solver_failure: return "SolverFailure";
    case ErrorCode::max_iterations_exceeded: return "MaxIterationsExceeded";
    case ErrorCode::too_many_buses: return "TooManyBuses";
    case ErrorCode::no_feasible_point: return "NoFeasiblePoint";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the condition,
/// `subject()` the bus, line or field it concerns (-1 when not applicable).
class Error : public std::runtime_error
{
 public:
  Error(ErrorCode code, std::string message, long subject = -1,
        Severity severity = Severity::error)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        subject_(subject),
        severity_(severity)
  {
  }

  ErrorCode code() const noexcept { return code_; }
  long subject() const noexcept { return subject_; }
  Severity severity() const noexcept { return severity_; }
  bool is_warning() const noexcept { return severity_ == Severity::warning; }

 private:
  ErrorCode code_;
  long subject_;
  Severity severity_;
};

}  // namespace dcflow

#endif  // DCFLOW_ERROR_HPP_
