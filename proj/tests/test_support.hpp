#ifndef DCFLOW_TESTS_TEST_SUPPORT_HPP_
#define DCFLOW_TESTS_TEST_SUPPORT_HPP_

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "dcflow/dcflow.hpp"

namespace dcflow::testing
{

inline Bus make_bus(int id, Limit p_min, Limit p_max, double v_min = 0.95, double v_max = 1.05)
{
  Bus b;
  b.id = id;
  b.p_min = p_min;
  b.p_max = p_max;
  b.v_min = v_min;
  b.v_max = v_max;
  return b;
}

inline Bus make_slack(int id, double v_ref)
{
  Bus b;
  b.id = id;
  b.kind = BusKind::slack;
  b.v_min = b.v_max = v_ref;
  return b;
}

// Generator bus in [0, 1], fixed load of 0.196 at the far end, y = 10.
inline Network two_bus(double load = -0.196, double y = 10.0)
{
  return Network({make_bus(1, 0.0, 1.0), make_bus(2, load, load)}, {{0, 1, y, std::nullopt}}, "two_bus");
}

// Closed form for two_bus under the loss objective: V1 at its cap, V2 the
// larger root of y V2^2 - y V1 V2 - load = 0.
struct TwoBusOptimum
{
  double V1, V2, loss;
};

inline TwoBusOptimum two_bus_optimum(double load = -0.196, double y = 10.0, double v_max = 1.05)
{
  TwoBusOptimum o;
  o.V1 = v_max;
  o.V2 = 0.5 * (o.V1 + std::sqrt(o.V1 * o.V1 + 4.0 * load / y));
  o.loss = y * (o.V1 - o.V2) * (o.V1 - o.V2);
  return o;
}

inline std::vector<double> random_voltages(std::mt19937_64& rng, int n, double lo = 0.95, double hi = 1.05)
{
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> V(static_cast<std::size_t>(n));
  for (auto& v : V) v = U(rng);
  return V;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

enum class GapMove
{
  both_slack,      // lower bounds slack at both ends of the gap line
  both_binding,    // lower bounds bind at both ends
  limit_and_lower  // current limit binds on the gap line, lower bound binds at its from end
};

struct GapPoint
{
  Network net;
  LiftedSolution sol;
  int line = -1;
};

// Feasible lifted point with a rank gap on one line and no gap elsewhere,
// built from random voltages. Bounds are placed around the resulting
// injections so the requested constraints bind exactly.
inline GapPoint sample_gap_point(std::uint64_t seed, GapMove move)
{
  std::mt19937_64 rng(seed);
  RandomCaseOptions opt;
  opt.seed = seed;
  opt.buses = 3 + static_cast<int>(seed % 6);
  opt.topology = seed % 2 ? Topology::tree : Topology::mesh;
  Network shape = random_case(opt);
  const int n = shape.bus_count();

  GapPoint g;
  g.sol = lift_f(random_voltages(rng, n, 0.96, 1.04), shape);
  g.line = std::uniform_int_distribution<int>(0, shape.line_count() - 1)(rng);
  const Line& ln = shape.line(g.line);
  const double r = std::sqrt(g.sol.v[ln.from] * g.sol.v[ln.to]);
  g.sol.W[g.line] = r * (1.0 - std::uniform_real_distribution<double>(0.005, 0.05)(rng));
  g.sol.p = lifted_injections(g.sol.v, g.sol.W, shape);

  std::uniform_real_distribution<double> slope(1.0, 2.0);
  std::vector<Bus> buses = shape.buses();
  for (int i = 0; i < n; ++i) {
    buses[i].p_min = g.sol.p[i] - 0.5;
    buses[i].p_max = g.sol.p[i] + 0.5;
    buses[i].cost = CostFunction::make_linear(slope(rng));
  }
  std::vector<Line> lines = shape.lines();
  if (move == GapMove::both_binding) {
    buses[ln.from].p_min = g.sol.p[ln.from];
    buses[ln.to].p_min = g.sol.p[ln.to];
  } else if (move == GapMove::limit_and_lower) {
    buses[ln.from].p_min = g.sol.p[ln.from];
    lines[g.line].i_max = std::sqrt(line_current_squared(g.sol, ln, g.line));
  }
  g.net = Network(std::move(buses), std::move(lines), shape.name());
  return g;
}

}  // namespace dcflow::testing

#endif  // DCFLOW_TESTS_TEST_SUPPORT_HPP_
