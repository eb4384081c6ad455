#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dcflow/cli.hpp"
#include "test_support.hpp"

using namespace dcflow;
namespace fs = std::filesystem;

namespace
{

struct Run
{
  int code;
  std::string out, err;
};

Run run(const RunConfig& cfg)
{
  std::ostringstream out, err;
  int code = run_command(cfg, out, err);
  return {code, out.str(), err.str()};
}

RunConfig config(Command c, std::vector<std::string> inputs, ModelKind m = ModelKind::rls1)
{
  RunConfig cfg;
  cfg.command = c;
  cfg.inputs = std::move(inputs);
  cfg.model = m;
  return cfg;
}

class CliFiles : public ::testing::Test
{
 protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("dcflow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string gen(std::uint64_t seed, int buses, Topology t, const std::string& name)
  {
    RunConfig cfg = config(Command::gen_random, {});
    cfg.seed = seed;
    cfg.buses = buses;
    cfg.topology = t;
    cfg.out = path(name);
    EXPECT_EQ(run(cfg).code, kExitOk);
    return cfg.out;
  }

  fs::path dir_;
};

}  // namespace

TEST(Cli, SolveExactCase)
{
  auto r = run(config(Command::solve, {"builtin:dc16_st"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["exactness"]["classification"], "exact");
  EXPECT_LE(j["exactness"]["max_gap"].get<double>(), 1e-8);
  EXPECT_EQ(j["solve_report"]["status"], "optimal");
  // every coordinate system and the tolerances are in the report
  for (const char* k : {"voltage", "lifted", "branch_flow"}) EXPECT_TRUE(j["solution"].contains(k)) << k;
  EXPECT_DOUBLE_EQ(j["config"]["tolerances"]["gap"].get<double>(), 1e-6);
  EXPECT_DOUBLE_EQ(j["config"]["solver"]["tol_gap"].get<double>(), 1e-9);
  EXPECT_EQ(j["solution"]["voltage"]["V"].size(), 16u);
}

TEST(Cli, SolveInexactCase)
{
  auto r = run(config(Command::solve, {"builtin:limits_recovery"}, ModelKind::rls2));
  EXPECT_EQ(r.code, kExitInexact);
  EXPECT_EQ(json::parse(r.out)["exactness"]["classification"], "needs_recovery");
}

TEST(Cli, SolveMissingFile)
{
  auto r = run(config(Command::solve, {"/nonexistent/case.json"}));
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("IoError"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, SolveLimitedModelWithoutLimits)
{
  auto r = run(config(Command::solve, {"builtin:dc16_st"}, ModelKind::rls2));
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("NoLimitsPresent"), std::string::npos);
}

TEST(Cli, SolveFormats)
{
  RunConfig cfg = config(Command::solve, {"builtin:limits_slack"}, ModelKind::rls2);
  cfg.format = OutputFormat::csv;
  auto csv = run(cfg);
  EXPECT_EQ(csv.code, kExitOk);
  EXPECT_EQ(csv.out.rfind(kExactnessCsvHeader, 0), 0u);
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 6);
  cfg.format = OutputFormat::table;
  auto table = run(cfg);
  EXPECT_NE(table.out.find("classification  exact"), std::string::npos);
}

TEST(Cli, GapToleranceOverride)
{
  RunConfig cfg = config(Command::solve, {"builtin:limits_recovery"}, ModelKind::rls2);
  cfg.tolerances.gap = 1.0;
  EXPECT_EQ(run(cfg).code, kExitOk);
}

TEST_F(CliFiles, WritesToOutPath)
{
  RunConfig cfg = config(Command::solve, {"builtin:dc16_gt"});
  cfg.out = path("report.json");
  auto r = run(cfg);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_TRUE(r.out.empty());
  std::ifstream f(cfg.out);
  EXPECT_EQ(json::parse(f)["case"], "builtin:dc16_gt");
}

TEST_F(CliFiles, CompareRandomThreeBus)
{
  std::vector<std::string> files;
  for (std::uint64_t s = 1; s <= 4; ++s) files.push_back(gen(s, 3, Topology::tree, "r" + std::to_string(s) + ".json"));
  RunConfig cfg = config(Command::compare, files);
  auto rows = compare_rows(cfg);
  ASSERT_EQ(rows.size(), files.size());
  for (const auto& row : rows) {
    ASSERT_TRUE(row.error.empty()) << row.error;
    ASSERT_TRUE(row.difference.has_value());
    const double kappa = oracle_kappa(load_case(row.name).network);
    EXPECT_LE(*row.difference, std::max(1e-4, 3.0 * kappa * cfg.grid_step)) << row.name;
    EXPECT_LE(row.max_gap, 1e-8);
  }
  auto r = run(cfg);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(json::parse(r.out)["rows"].size(), files.size());
}

TEST(Cli, CompareOrdersTheSixteenBusModes)
{
  RunConfig cfg = config(Command::compare, {"builtin:dc16_gt", "builtin:dc16_gm", "builtin:dc16_st", "builtin:dc16_sm"});
  std::map<std::string, double> obj;
  for (const auto& row : compare_rows(cfg)) {
    ASSERT_TRUE(row.error.empty()) << row.error;
    EXPECT_FALSE(row.oracle_objective.has_value());
    obj[row.name.substr(8)] = row.relaxed_objective;
  }
  EXPECT_LT(obj["dc16_gm"], obj["dc16_gt"]);
  EXPECT_LT(obj["dc16_sm"], obj["dc16_st"]);
  EXPECT_LT(obj["dc16_gt"], obj["dc16_st"]);
  EXPECT_LT(obj["dc16_gm"], obj["dc16_sm"]);
  cfg.format = OutputFormat::table;
  auto r = run(cfg);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
}

TEST(Cli, CompareEmptyList)
{
  RunConfig cfg = config(Command::compare, {});
  cfg.format = OutputFormat::table;
  auto r = run(cfg);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  cfg.format = OutputFormat::json;
  EXPECT_TRUE(json::parse(run(cfg).out)["rows"].empty());
}

TEST_F(CliFiles, GenRandomIsDeterministic)
{
  auto a = gen(1, 5, Topology::tree, "a.json");
  auto b = gen(1, 5, Topology::tree, "b.json");
  auto text = [](const std::string& p) { return read_text_file(p); };
  EXPECT_EQ(text(a), text(b));
  Network net = parse_case_json(text(a));
  EXPECT_EQ(net.bus_count(), 5);
  EXPECT_EQ(cycle_count(net), 0);
  EXPECT_TRUE(check_assumptions(net).a1_uniform_vmax);
  for (const Bus& bus : net.buses()) EXPECT_LE(*bus.p_min, 0.0);
  EXPECT_NE(text(gen(2, 5, Topology::tree, "c.json")), text(a));
}

TEST_F(CliFiles, GenRandomMeshHasCycles)
{
  Network net = parse_case_json(read_text_file(gen(3, 6, Topology::mesh, "m.json")));
  EXPECT_GE(cycle_count(net), 1);
  for (const Line& ln : net.lines()) {
    EXPECT_GE(ln.y, 1.0);
    EXPECT_LE(ln.y, 100.0);
  }
  auto ms = solve_model(net, ModelKind::rls1);
  EXPECT_TRUE(ms.optimal());
}

TEST(Cli, CheckReportsAssumptions)
{
  auto r = run(config(Command::check, {"builtin:dc16_sm", "builtin:limits_recovery"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto j = json::parse(r.out);
  ASSERT_EQ(j["cases"].size(), 2u);
  EXPECT_EQ(j["cases"][0]["buses"], 16);
  EXPECT_EQ(j["cases"][0]["assumptions"]["a1_uniform_vmax"], true);
  EXPECT_EQ(j["cases"][0]["assumptions"]["a2_positive_loss"], "solution_dependent");
  EXPECT_EQ(j["cases"][1]["line_limits"], true);
  EXPECT_EQ(run(config(Command::check, {"builtin:nonexistent"})).code, kExitError);
}

TEST(Cli, RecoverMethods)
{
  RunConfig cfg = config(Command::recover, {"builtin:limits_recovery"}, ModelKind::rls2);
  auto slack = run(cfg);
  EXPECT_EQ(slack.code, kExitOk) << slack.err;
  auto j = json::parse(slack.out);
  EXPECT_EQ(j["recovery"]["method"], "slack_iteration");
  EXPECT_EQ(j["recovery"]["exact"], true);
  cfg.method = RecoveryMethod::direct;
  auto direct = run(cfg);
  EXPECT_EQ(direct.code, kExitInexact);
  EXPECT_EQ(json::parse(direct.out)["recovery"]["method"], "direct");
}

TEST(Cli, BatchAggregatesExitCodes)
{
  RunConfig cfg = config(Command::batch, {"builtin:dc16_gt", "builtin:dc16_gm", "builtin:dc16_st", "builtin:dc16_sm"});
  cfg.workers = 3;
  auto ok = run(cfg);
  EXPECT_EQ(ok.code, kExitOk);
  auto j = json::parse(ok.out);
  ASSERT_EQ(j["results"].size(), 4u);
  EXPECT_EQ(j["results"][2]["case"], "builtin:dc16_st");

  cfg.model = ModelKind::rls2;
  cfg.inputs = {"builtin:limits_slack", "builtin:limits_recovery"};
  EXPECT_EQ(run(cfg).code, kExitInexact);
  cfg.inputs.push_back("builtin:nonexistent");
  cfg.format = OutputFormat::csv;
  auto bad = run(cfg);
  EXPECT_EQ(bad.code, kExitError);
  EXPECT_EQ(std::count(bad.out.begin(), bad.out.end(), '\n'), 4);
}

TEST(Cli, BatchIsIndependentOfWorkers)
{
  RunConfig cfg = config(Command::batch, {"builtin:dc16_gt", "builtin:tree33", "builtin:limits_slack"});
  cfg.format = OutputFormat::csv;
  cfg.workers = 1;
  auto one = run(cfg);
  cfg.workers = 3;
  EXPECT_EQ(run(cfg).out, one.out);
}
