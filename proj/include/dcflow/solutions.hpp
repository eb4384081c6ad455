#ifndef DCFLOW_SOLUTIONS_HPP_
#define DCFLOW_SOLUTIONS_HPP_

#include <vector>

namespace dcflow
{

/// A point of the bus injection model: voltages V and injections p per bus.
struct VoltageSolution
{
  std::vector<double> V;
  std::vector<double> p;
};

/// A point of the lifted model. v_i = V_i^2 per bus, one W per line
/// (W_ij = W_ji is stored once, in the line's order).
struct LiftedSolution
{
  std::vector<double> p;
  std::vector<double> v;
  std::vector<double> W;
};

/// A point of the branch flow model. P_from is the flow leaving the line's
/// `from` bus towards `to`, P_to the flow leaving `to` towards `from`,
/// l the squared current magnitude.
struct BranchFlowSolution
{
  std::vector<double> p;
  std::vector<double> v;
  std::vector<double> P_from;
  std::vector<double> P_to;
  std::vector<double> l;
};

}  // namespace dcflow

#endif  // DCFLOW_SOLUTIONS_HPP_
