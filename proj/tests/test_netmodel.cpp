#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace dcflow;
using dcflow::testing::make_bus;
using dcflow::testing::make_slack;

namespace
{

ErrorCode code_of(const Network& net)
{
  try {
    validate_network(net);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected validate_network to throw";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(ValidateNetwork, TwoBusIsValid)
{
  auto warnings = validate_network(dcflow::testing::two_bus());
  EXPECT_TRUE(warnings.empty());
}

TEST(ValidateNetwork, IsolatedBusIsDisconnected)
{
  Network net({make_bus(1, 0.0, 1.0), make_bus(2, -1.0, 0.0), make_bus(3, -1.0, 0.0)}, {{0, 1, 10.0, {}}});
  EXPECT_EQ(code_of(net), ErrorCode::disconnected);
}

TEST(ValidateNetwork, NegativeConductance)
{
  Network net({make_bus(1, 0.0, 1.0), make_bus(2, -1.0, 0.0)}, {{0, 1, -1.0, {}}});
  EXPECT_EQ(code_of(net), ErrorCode::nonpositive_conductance);
}

TEST(ValidateNetwork, BoundProblems)
{
  EXPECT_EQ(code_of(Network({make_bus(1, 1.0, 0.0), make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})),
            ErrorCode::bad_bounds);
  EXPECT_EQ(code_of(Network({make_bus(1, 0.0, 1.0, 1.1, 1.0), make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})),
            ErrorCode::bad_bounds);
  EXPECT_EQ(code_of(Network({make_bus(1, 0.0, 1.0, 0.0, 1.0), make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})),
            ErrorCode::bad_bounds);
  Bus slack = make_slack(1, 1.05);
  slack.p_max = 2.0;
  EXPECT_EQ(code_of(Network({slack, make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})), ErrorCode::bad_bounds);
  Bus loose = make_slack(1, 1.05);
  loose.v_min = 1.0;
  EXPECT_EQ(code_of(Network({loose, make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})), ErrorCode::bad_bounds);
}

TEST(ValidateNetwork, CostMustIncrease)
{
  Bus b = make_bus(1, 0.0, 1.0);
  b.cost = CostFunction::make_linear(-1.0);
  EXPECT_EQ(code_of(Network({b, make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})), ErrorCode::non_increasing_cost);
  // derivative 2*1*(-1) + 1 < 0 at p_min
  b = make_bus(1, -1.0, 1.0);
  b.cost = CostFunction::make_quadratic(1.0, 1.0);
  EXPECT_EQ(code_of(Network({b, make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})), ErrorCode::non_increasing_cost);
  b.cost = CostFunction::make_quadratic(-1.0, 5.0);
  EXPECT_EQ(code_of(Network({b, make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})), ErrorCode::non_convex_cost);
  b.cost = CostFunction::make_quadratic(1.0, 3.0);
  EXPECT_NO_THROW(validate_network(Network({b, make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0, {}}})));
}

TEST(ValidateNetwork, LineShapes)
{
  auto two = [](std::vector<Line> lines) {
    return Network({make_bus(1, 0.0, 1.0), make_bus(2, -1.0, 0.0)}, std::move(lines));
  };
  EXPECT_EQ(code_of(two({{0, 0, 1.0, {}}, {0, 1, 1.0, {}}})), ErrorCode::bad_line);
  EXPECT_EQ(code_of(two({{0, 1, 1.0, {}}, {1, 0, 2.0, {}}})), ErrorCode::bad_line);
  EXPECT_EQ(code_of(two({{0, 2, 1.0, {}}})), ErrorCode::bad_line);
  EXPECT_EQ(code_of(two({{0, 1, 1.0, 0.0}})), ErrorCode::bad_line);
}

TEST(ValidateNetwork, PositiveLowerInjectionIsAWarning)
{
  Network net({make_bus(1, 0.1, 1.0), make_bus(2, -1.0, 0.0)}, {{0, 1, 10.0, {}}});
  auto warnings = validate_network(net);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0].code(), ErrorCode::positive_lower_injection);
  EXPECT_TRUE(warnings[0].is_warning());
  EXPECT_EQ(warnings[0].subject(), 0);
}

TEST(CheckAssumptions, UniformVmax)
{
  EXPECT_TRUE(check_assumptions(dcflow::testing::two_bus()).a1_uniform_vmax);
  Network uneven({make_bus(1, 0.0, 1.0, 0.95, 1.05), make_bus(2, -1.0, 0.0, 0.95, 1.04)}, {{0, 1, 10.0, {}}});
  EXPECT_FALSE(check_assumptions(uneven).a1_uniform_vmax);
  // slack buses do not count
  Network grid({make_slack(1, 1.0), make_bus(2, -1.0, 0.0)}, {{0, 1, 10.0, {}}});
  EXPECT_TRUE(check_assumptions(grid).a1_uniform_vmax);
}

TEST(CheckAssumptions, PositiveLossFromSolution)
{
  auto net = dcflow::testing::two_bus();
  LiftedSolution sol{{0.2, -0.196}, {1.0, 0.9604}, {0.98}};
  auto r = check_assumptions(net, sol);
  EXPECT_EQ(r.a2_positive_loss, Tristate::holds);
  EXPECT_NEAR(*r.total_injection, 0.004, 1e-15);
  sol.p = {0.0, 0.0};
  EXPECT_EQ(check_assumptions(net, sol).a2_positive_loss, Tristate::fails);
  auto without = check_assumptions(net);
  EXPECT_EQ(without.a2_positive_loss, Tristate::solution_dependent);
  EXPECT_FALSE(without.note.empty());
}

TEST(CheckAssumptions, IsPure)
{
  auto net = builtin_case("dc16_sm");
  EXPECT_EQ(check_assumptions(net), check_assumptions(net));
}

TEST(LossIdentity, SumOfInjectionsIsLineLoss)
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    RandomCaseOptions opt;
    opt.buses = 2 + trial % 10;
    opt.topology = trial % 2 ? Topology::mesh : Topology::tree;
    opt.seed = static_cast<std::uint64_t>(trial + 1);
    if (opt.topology == Topology::mesh && opt.buses < 3) opt.buses = 3;
    Network net = random_case(opt);
    auto V = dcflow::testing::random_voltages(rng, net.bus_count(), 0.5, 1.5);
    auto p = injections_from_voltages(V, net);
    double sum = 0.0, loss = 0.0;
    for (double x : p) sum += x;
    for (const Line& ln : net.lines()) loss += ln.y * (V[ln.from] - V[ln.to]) * (V[ln.from] - V[ln.to]);
    EXPECT_LE(std::abs(sum - loss), 1e-12 * std::max(1.0, loss) + 1e-13 * net.line_count());
  }
}

TEST(CostFunction, Evaluation)
{
  auto q = CostFunction::make_quadratic(2.0, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(q(2.0), 15.0);
  EXPECT_DOUBLE_EQ(q.derivative(2.0), 11.0);
  Network net = dcflow::testing::two_bus();
  std::vector<double> p = {0.3, -0.2};
  EXPECT_DOUBLE_EQ(net.objective(p), 0.1);
}
