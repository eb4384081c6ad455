#include <algorithm>
#include <cctype>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "dcflow/cli.hpp"

namespace
{

// Enum flags are read as strings; CLI11 would otherwise pick up the
// library's to_string overloads.
struct RawFlags
{
  std::string model = "rls1";
  std::string format;
  std::string method = "slack";
  std::string topology = "tree";
};

const std::map<std::string, dcflow::ModelKind> kModels = {{"rl1", dcflow::ModelKind::rl1},
                                                          {"rls1", dcflow::ModelKind::rls1},
                                                          {"rl2", dcflow::ModelKind::rl2},
                                                          {"rls2", dcflow::ModelKind::rls2}};
const std::map<std::string, dcflow::OutputFormat> kFormats = {{"json", dcflow::OutputFormat::json},
                                                              {"csv", dcflow::OutputFormat::csv},
                                                              {"table", dcflow::OutputFormat::table}};
const std::map<std::string, dcflow::RecoveryMethod> kMethods = {{"slack", dcflow::RecoveryMethod::slack_iteration},
                                                                {"direct", dcflow::RecoveryMethod::direct}};
const std::map<std::string, dcflow::Topology> kTopologies = {{"tree", dcflow::Topology::tree},
                                                             {"mesh", dcflow::Topology::mesh}};

template <typename Map>
std::vector<std::string> keys(const Map& m)
{
  std::vector<std::string> k;
  for (const auto& [name, value] : m) k.push_back(name);
  return k;
}

std::string lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void add_common(CLI::App* sub, dcflow::RunConfig& cfg, RawFlags& raw)
{
  sub->add_option("--model", raw.model, "relaxation: rl1, rls1, rl2, rls2")
      ->check(CLI::IsMember(keys(kModels), CLI::ignore_case));
  sub->add_option("--tol-gap", cfg.tolerances.gap, "normalized rank gap accepted as exact");
  sub->add_option_function<double>(
      "--tol-solver", [&cfg](double t) { cfg.solver.tol_p = cfg.solver.tol_d = cfg.solver.tol_gap = t; },
      "solver feasibility and gap tolerance");
  sub->add_option("--max-iter", cfg.solver.max_iter, "solver iteration limit");
  sub->add_option("--format", raw.format, "json, csv or table")->check(CLI::IsMember(keys(kFormats), CLI::ignore_case));
  sub->add_option("--out", cfg.out, "output file (default stdout)");
  sub->add_option("--workers", cfg.workers, "concurrent cases in batch")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv)
{
  dcflow::RunConfig cfg;
  RawFlags raw;
  CLI::App app{"DC microgrid optimal power flow via conic relaxation"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "solve one case and certify exactness");
  solve->add_option("case", cfg.inputs, "case file (.json, .m) or builtin:NAME")->required();
  add_common(solve, cfg, raw);

  auto* check = app.add_subcommand("check", "validate cases and report the exactness assumptions");
  check->add_option("case", cfg.inputs)->required();
  add_common(check, cfg, raw);

  auto* recover = app.add_subcommand("recover", "build an approximate solution when limits break exactness");
  recover->add_option("case", cfg.inputs)->required();
  add_common(recover, cfg, raw);
  recover->add_option("--method", raw.method, "slack or direct")->check(CLI::IsMember(keys(kMethods), CLI::ignore_case));
  recover->add_option("--max-rounds", cfg.recovery_iterations, "slack method solve budget");
  recover->add_option("--epsilon-weight", cfg.epsilon_weight, "objective weight of each slack");

  auto* compare = app.add_subcommand("compare", "relaxation against the grid-search oracle");
  compare->add_option("case", cfg.inputs);
  add_common(compare, cfg, raw);
  compare->add_option("--grid-step", cfg.grid_step, "oracle voltage grid step")->check(CLI::PositiveNumber);

  auto* batch = app.add_subcommand("batch", "solve many cases");
  batch->add_option("case", cfg.inputs);
  add_common(batch, cfg, raw);

  auto* gen = app.add_subcommand("gen-random", "write a random feasible case");
  gen->add_option("--seed", cfg.seed, "generator seed");
  gen->add_option("--buses", cfg.buses, "bus count")->check(CLI::Range(2, 100000));
  gen->add_option("--topology", raw.topology, "tree or mesh")->check(CLI::IsMember(keys(kTopologies), CLI::ignore_case));
  gen->add_option("--cost-spread", cfg.cost_spread, "linear cost slopes drawn from [1, 1 + spread]");
  gen->add_option("--out", cfg.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : dcflow::kExitError;
  }

  if (solve->parsed()) cfg.command = dcflow::Command::solve;
  if (check->parsed()) cfg.command = dcflow::Command::check;
  if (recover->parsed()) cfg.command = dcflow::Command::recover;
  if (compare->parsed()) cfg.command = dcflow::Command::compare;
  if (batch->parsed()) cfg.command = dcflow::Command::batch;
  if (gen->parsed()) cfg.command = dcflow::Command::gen_random;

  cfg.model = kModels.at(lower(raw.model));
  cfg.method = kMethods.at(lower(raw.method));
  cfg.topology = kTopologies.at(lower(raw.topology));
  if (!raw.format.empty())
    cfg.format = kFormats.at(lower(raw.format));
  else if (cfg.command == dcflow::Command::compare)
    cfg.format = dcflow::OutputFormat::table;
  return dcflow::run_command(cfg, std::cout, std::cerr);
}
