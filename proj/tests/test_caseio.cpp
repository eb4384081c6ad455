#include <gtest/gtest.h>

#include <string>

#include "test_support.hpp"

using namespace dcflow;

namespace
{

const char* kTwoBus = R"({
  "schema": "dcflow-case/1",
  "name": "two",
  "buses": [
    {"id": 1, "p_min": 0.0, "p_max": 1.0, "v_min": 0.95, "v_max": 1.05},
    {"id": 2, "p_min": -0.196, "p_max": -0.196, "v_min": 0.95, "v_max": 1.05}
  ],
  "lines": [{"i": 1, "j": 2, "y": 10}]
})";

ErrorCode json_code(const std::string& text)
{
  try {
    parse_case_json(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected parse_case_json to throw";
  return ErrorCode::invalid_argument;
}

ErrorCode matpower_code(const std::string& text)
{
  try {
    parse_matpower_subset(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected parse_matpower_subset to throw";
  return ErrorCode::invalid_argument;
}

// Three buses in a line; branch 1-2 has r = 0.02, x = 0.06 and 2-3 has r = 0.
std::string matpower_case(const std::string& branch_rows)
{
  return R"(function mpc = case3
mpc.version = '2';
mpc.baseMVA = 100;
% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin
mpc.bus = [
	1	3	0	0	0	0	1	1	0	12.66	1	1.1	0.9;
	2	1	20	0	0	0	1	1	0	12.66	1	1.1	0.9;
	3	1	10	0	0	0	1	1	0	12.66	1	1.1	0.9;
];
% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin
mpc.gen = [
	1	0	0	10	-10	1	100	1	50	0;
];
mpc.branch = [
)" + branch_rows +
         R"(];
mpc.gencost = [
	2	0	0	3	0.01	40	0;
];
)";
}

const char* kBranches = "\t1\t2\t0.02\t0.06\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n"
                        "\t2\t3\t0\t0.01\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n";

}  // namespace

TEST(CaseJson, MinimalTwoBus)
{
  Network net = parse_case_json(kTwoBus);
  EXPECT_EQ(net.bus_count(), 2);
  EXPECT_EQ(net.line_count(), 1);
  EXPECT_EQ(net.name(), "two");
  EXPECT_DOUBLE_EQ(net.line(0).y, 10.0);
  EXPECT_DOUBLE_EQ(*net.bus(1).p_min, -0.196);
  EXPECT_EQ(net.bus(0).cost, CostFunction::make_linear(1.0));
}

TEST(CaseJson, MissingVmaxIsSchemaError)
{
  std::string text = kTwoBus;
  text.replace(text.find(", \"v_max\": 1.05"), 15, "");
  EXPECT_EQ(json_code(text), ErrorCode::schema_error);
}

TEST(CaseJson, ResistanceBecomesConductance)
{
  std::string text = kTwoBus;
  text.replace(text.find("\"y\": 10"), 7, "\"r\": 0.001");
  EXPECT_NEAR(parse_case_json(text).line(0).y, 1000.0, 1e-9);
}

TEST(CaseJson, RejectsMalformedDocuments)
{
  EXPECT_EQ(json_code("{\"schema\": "), ErrorCode::syntax_error);
  EXPECT_EQ(json_code("[]"), ErrorCode::schema_error);
  EXPECT_EQ(json_code("{\"schema\": \"other\", \"buses\": [], \"lines\": []}"), ErrorCode::schema_error);

  std::string both = kTwoBus;
  both.replace(both.find("\"y\": 10"), 7, "\"y\": 10, \"r\": 0.1");
  EXPECT_EQ(json_code(both), ErrorCode::schema_error);

  std::string dangling = kTwoBus;
  dangling.replace(dangling.find("\"j\": 2"), 6, "\"j\": 7");
  EXPECT_EQ(json_code(dangling), ErrorCode::bad_line);
}

TEST(CaseJson, ValidationErrorsSurface)
{
  std::string text = kTwoBus;
  text.replace(text.find("\"y\": 10"), 7, "\"y\": -1");
  EXPECT_EQ(json_code(text), ErrorCode::nonpositive_conductance);
}

TEST(CaseJson, MegawattUnitsUseBase)
{
  std::string text = kTwoBus;
  text.replace(text.find("\"name\""), 6, "\"units\": \"mw\", \"base_mva\": 10, \"name\"");
  Network net = parse_case_json(text);
  EXPECT_NEAR(*net.bus(0).p_max, 0.1, 1e-15);
  EXPECT_NEAR(*net.bus(1).p_min, -0.0196, 1e-15);
}

TEST(CaseJson, WriteThenParseIsIdentical)
{
  for (const auto& name : builtin_case_names()) {
    ParsedCase pc = builtin_case_document(name);
    std::string text = write_case_json(pc.network, pc.meta);
    ParsedCase back = parse_case_document(text);
    EXPECT_TRUE(back.network == pc.network) << name;
    EXPECT_EQ(back.meta.provenance, pc.meta.provenance);
    EXPECT_TRUE(back.meta.adapt_applied == pc.meta.adapt_applied);
    EXPECT_EQ(write_case_json(back.network, back.meta), text) << name;
  }
  Bus q = dcflow::testing::make_bus(1, 0.0, 2.0);
  q.cost = CostFunction::make_quadratic(0.5, 2.0, 0.25);
  Network net({q, dcflow::testing::make_bus(2, -1.0, 0.0)}, {{0, 1, 1.0 / 3.0, 0.7}}, "q");
  EXPECT_TRUE(parse_case_json(write_case_json(net)) == net);
}

TEST(CaseJson, RandomCasesRoundTrip)
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomCaseOptions opt;
    opt.seed = seed;
    opt.buses = 3 + static_cast<int>(seed % 8);
    opt.topology = seed % 2 ? Topology::tree : Topology::mesh;
    opt.cost_spread = 0.5;
    Network net = random_case(opt);
    EXPECT_TRUE(parse_case_json(write_case_json(net)) == net) << seed;
  }
}

TEST(Matpower, ResistanceAdaptation)
{
  Network net = parse_matpower_subset(matpower_case(kBranches));
  ASSERT_EQ(net.bus_count(), 3);
  ASSERT_EQ(net.line_count(), 2);
  EXPECT_NEAR(net.line(0).y, 500.0, 1e-9);
  EXPECT_NEAR(net.line(1).y, 1000.0, 1e-9);
  for (const Bus& b : net.buses()) {
    EXPECT_DOUBLE_EQ(b.v_min, 0.95);
    EXPECT_DOUBLE_EQ(b.v_max, 1.05);
  }
  EXPECT_DOUBLE_EQ(*net.bus(0).p_max, 0.5);
  EXPECT_DOUBLE_EQ(*net.bus(0).p_min, 0.0);
  EXPECT_DOUBLE_EQ(*net.bus(1).p_min, -0.2);
  EXPECT_DOUBLE_EQ(*net.bus(1).p_max, -0.2);
}

TEST(Matpower, ReferenceBusAsSlack)
{
  AdaptRules rules;
  rules.ref_bus_as_slack = true;
  Network net = parse_matpower_subset(matpower_case(kBranches), rules);
  EXPECT_TRUE(net.bus(0).is_slack());
  EXPECT_DOUBLE_EQ(net.bus(0).v_min, 1.05);
}

TEST(Matpower, ParallelBranchesMerge)
{
  std::string rows = std::string(kBranches) + "\t1\t2\t0.02\t0.06\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n";
  Network net = parse_matpower_subset(matpower_case(rows));
  ASSERT_EQ(net.line_count(), 2);
  EXPECT_NEAR(net.line(0).y, 1000.0, 1e-9);
}

TEST(Matpower, WrongColumnCountIsSyntaxError)
{
  std::string rows = std::string(kBranches) + "\t1\t3\t0.02\t0.06\t0\t0\t0\t0\t0\t0\t1\t-360;\n";
  EXPECT_EQ(matpower_code(matpower_case(rows)), ErrorCode::syntax_error);
}

TEST(Matpower, UnsupportedSections)
{
  std::string text = matpower_case(kBranches) + "mpc.dcline = [\n\t1\t2\t1;\n];\n";
  EXPECT_EQ(matpower_code(text), ErrorCode::unsupported_feature);
  EXPECT_EQ(matpower_code("mpc.baseMVA = 100;\nmpc.bus = [\n1 1 0;\n"), ErrorCode::syntax_error);
  EXPECT_EQ(matpower_code("x = 1;\n"), ErrorCode::syntax_error);
}

TEST(BuiltinCases, StandaloneTree)
{
  Network net = builtin_case("dc16_st");
  EXPECT_EQ(net.bus_count(), 16);
  for (const Bus& b : net.buses()) EXPECT_FALSE(b.is_slack());
  // 13 feeder branches plus the two bus-bar links, no tie lines
  EXPECT_EQ(net.line_count(), 15);
  EXPECT_EQ(cycle_count(net), 0);
  EXPECT_TRUE(check_assumptions(net).a1_uniform_vmax);
}

TEST(BuiltinCases, GridConnectedMesh)
{
  Network net = builtin_case("dc16_gm");
  EXPECT_EQ(net.bus_count(), 16);
  for (int f = 0; f < 3; ++f) EXPECT_TRUE(net.bus(f).is_slack());
  for (int i = 3; i < 16; ++i) EXPECT_FALSE(net.bus(i).is_slack());
  EXPECT_EQ(net.line_count(), 18);
  EXPECT_EQ(cycle_count(net), 3);
}

TEST(BuiltinCases, AllValidateAndCarryProvenance)
{
  for (const auto& name : builtin_case_names()) {
    ParsedCase pc = builtin_case_document(name);
    EXPECT_EQ(pc.network.name(), name);
    EXPECT_FALSE(pc.meta.provenance.empty()) << name;
    EXPECT_NO_THROW(validate_network(pc.network)) << name;
  }
  EXPECT_EQ(builtin_case("tree33").bus_count(), 33);
  EXPECT_TRUE(builtin_case("limits_recovery").has_line_limits());
}

TEST(BuiltinCases, UnknownName)
{
  try {
    builtin_case("nonexistent");
    FAIL() << "expected UnknownCase";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_case);
  }
}
