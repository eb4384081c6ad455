#ifndef DCFLOW_CLI_HPP_
#define DCFLOW_CLI_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dcflow/builtin_cases.hpp"
#include "dcflow/caseio.hpp"
#include "dcflow/exactness.hpp"
#include "dcflow/oracle.hpp"
#include "dcflow/pipeline.hpp"
#include "dcflow/random_cases.hpp"
#include "dcflow/recovery.hpp"
#include "dcflow/report.hpp"

namespace dcflow
{

enum class Command
{
  solve,
  check,
  recover,
  compare,
  batch,
  gen_random,
};

enum class OutputFormat
{
  json,
  csv,
  table,
};

struct RunConfig
{
  Command command = Command::solve;
  ModelKind model = ModelKind::rls1;
  std::vector<std::string> inputs;  // file paths or builtin:NAME
  Tolerances tolerances;
  SolverSettings solver;
  OutputFormat format = OutputFormat::json;
  std::string out;  // empty writes to the given stream
  std::uint64_t seed = 1;
  int workers = 1;
  // gen-random
  int buses = 5;
  Topology topology = Topology::tree;
  double cost_spread = 0.0;
  // compare
  double grid_step = 1e-3;
  // recover
  RecoveryMethod method = RecoveryMethod::slack_iteration;
  int recovery_iterations = 10;
  double epsilon_weight = 1.0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInexact = 2;

/// Logger named "dcflow" writing to stderr. DCFLOW_LOG picks the level
/// (trace, debug, info, warn, error, off); the default is warn.
inline std::shared_ptr<spdlog::logger> cli_logger()
{
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::get("dcflow");
    if (!l) l = spdlog::stderr_color_mt("dcflow");
    const char* env = std::getenv("DCFLOW_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return log;
}

inline ParsedCase load_case(const std::string& spec)
{
  constexpr std::string_view prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) return builtin_case_document(spec.substr(prefix.size()));
  std::string text = read_text_file(spec);
  if (spec.size() >= 2 && spec.compare(spec.size() - 2, 2, ".m") == 0) return parse_matpower_document(text);
  return parse_case_document(text);
}

namespace detail
{

inline json config_json(const RunConfig& cfg)
{
  return {{"model", to_string(cfg.model)}, {"tolerances", to_json(cfg.tolerances)}, {"solver", to_json(cfg.solver)}};
}

inline std::string fmt_sci(double v) { return std::isfinite(v) ? fmt::format("{:.3e}", v) : std::string("-"); }

struct SolveOutcome
{
  std::string name;
  Network network;
  ModelSolution solution;
  ExactnessReport exactness;
  RecoveryResult voltages;  // V = sqrt(v) and its injections
  int exit_code = kExitError;
  std::string error;
};

inline SolveOutcome solve_case(const std::string& spec, const RunConfig& cfg)
{
  SolveOutcome o;
  o.name = spec;
  try {
    ParsedCase pc = load_case(spec);
    for (const auto& w : pc.warnings) cli_logger()->warn("{}: {}", spec, w.what());
    o.network = pc.network;
    const Network& net = o.network;
    cli_logger()->info("{}: {} buses, {} lines, model {}", spec, net.bus_count(), net.line_count(), to_string(cfg.model));
    o.solution = solve_model(net, cfg.model, cfg.solver);
    const auto& rep = o.solution.result.report;
    cli_logger()->debug("{}: {} after {} iterations", spec, to_string(rep.status), rep.iterations);
    if (!o.solution.optimal()) {
      o.error = fmt::format("solver status {}", to_string(rep.status));
      return o;
    }
    o.exactness = diagnose(o.solution.lifted, net, cfg.tolerances);
    o.voltages = direct_construct(o.solution.lifted, net, cfg.tolerances);
    o.exit_code = o.exactness.classification == Classification::exact ? kExitOk : kExitInexact;
  } catch (const Error& e) {
    o.error = e.what();
  }
  return o;
}

inline json solve_json(const SolveOutcome& o, const RunConfig& cfg)
{
  json j = {{"schema", kReportSchema}, {"command", "solve"}, {"case", o.name}, {"config", config_json(cfg)}};
  j["exit_code"] = o.exit_code;
  if (!o.error.empty()) {
    j["error"] = o.error;
    return j;
  }
  j["solve_report"] = to_json(o.solution.result.report);
  j["objective"] = o.solution.objective;
  j["solution"] = {{"voltage", to_json(o.voltages.solution)},
                   {"lifted", to_json(o.solution.lifted)},
                   {"branch_flow", to_json(o.solution.branch)}};
  j["exactness"] = to_json(o.exactness);
  return j;
}

class Output
{
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback)
  {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw Error(ErrorCode::io_error, "cannot write " + path);
    os_ = &file_;
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

inline int report_error(std::ostream& err, const std::string& what)
{
  err << "error: " << what << "\n";
  return kExitError;
}

}  // namespace detail

inline int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  if (cfg.inputs.size() != 1) return detail::report_error(err, "solve takes exactly one case");
  auto o = detail::solve_case(cfg.inputs.front(), cfg);
  if (!o.error.empty()) return detail::report_error(err, o.name + ": " + o.error);
  detail::Output sink(cfg.out, out);
  auto& os = sink.stream();
  switch (cfg.format) {
    case OutputFormat::json: os << detail::solve_json(o, cfg).dump(2) << "\n"; break;
    case OutputFormat::csv: os << exactness_csv(o.exactness, o.network); break;
    case OutputFormat::table:
      os << fmt::format("case            {}\nmodel           {}\nstatus          {}\niterations      {}\n"
                        "objective       {:.9g}\nmax gap         {}\nnormalized gap  {}\nclassification  {}\n",
                        o.name, to_string(cfg.model), to_string(o.solution.result.report.status),
                        o.solution.result.report.iterations, o.solution.objective, detail::fmt_sci(o.exactness.max_gap),
                        detail::fmt_sci(o.exactness.normalized_max_gap), to_string(o.exactness.classification));
      break;
  }
  return o.exit_code;
}

inline int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  if (cfg.inputs.empty()) return detail::report_error(err, "check needs a case");
  json docs = json::array();
  for (const auto& spec : cfg.inputs) {
    try {
      ParsedCase pc = load_case(spec);
      json warnings = json::array();
      for (const auto& w : pc.warnings) warnings.push_back(w.what());
      docs.push_back({{"case", spec},
                      {"buses", pc.network.bus_count()},
                      {"lines", pc.network.line_count()},
                      {"line_limits", pc.network.has_line_limits()},
                      {"assumptions", to_json(check_assumptions(pc.network))},
                      {"warnings", warnings},
                      {"provenance", pc.meta.provenance}});
    } catch (const Error& e) {
      return detail::report_error(err, spec + ": " + e.what());
    }
  }
  detail::Output sink(cfg.out, out);
  sink.stream() << json{{"schema", kReportSchema}, {"command", "check"}, {"cases", docs}}.dump(2) << "\n";
  return kExitOk;
}

inline int cmd_recover(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  if (cfg.inputs.size() != 1) return detail::report_error(err, "recover takes exactly one case");
  RecoveryResult r;
  const std::string& spec = cfg.inputs.front();
  ModelKind model = cfg.model == ModelKind::rl1 || cfg.model == ModelKind::rl2 ? ModelKind::rl2 : ModelKind::rls2;
  try {
    Network net = load_case(spec).network;
    if (cfg.method == RecoveryMethod::direct) {
      ModelSolution ms = solve_model(net, model, cfg.solver);
      if (!ms.optimal())
        return detail::report_error(err, spec + ": solver status " + std::string(to_string(ms.result.report.status)));
      r = direct_construct(ms.lifted, net, cfg.tolerances);
    } else {
      RecoverySettings rs;
      rs.max_iterations = cfg.recovery_iterations;
      rs.epsilon_weight = cfg.epsilon_weight;
      rs.model = model;
      rs.tolerances = cfg.tolerances;
      rs.solver = cfg.solver;
      r = slack_iterate(net, rs);
    }
  } catch (const Error& e) {
    return detail::report_error(err, spec + ": " + e.what());
  }
  for (const auto& w : r.warnings) cli_logger()->warn("{}: {}", spec, w.what());
  detail::Output sink(cfg.out, out);
  json j = {{"schema", kReportSchema}, {"command", "recover"}, {"case", spec}, {"config", detail::config_json(cfg)}};
  j["recovery"] = to_json(r);
  if (cfg.format == OutputFormat::table)
    sink.stream() << fmt::format("case {}  method {}  iterations {}  exact {}  objective {:.9g}\n", spec,
                                 to_string(r.method), r.iterations, r.exact, r.objective);
  else
    sink.stream() << j.dump(2) << "\n";
  return r.exact ? kExitOk : kExitInexact;
}

struct CompareRow
{
  std::string name;
  int buses = 0;
  double relaxed_objective = 0.0;
  std::optional<double> oracle_objective;
  std::optional<double> difference;
  double max_gap = 0.0;
  std::string error;
};

/// Relaxed optimum against the grid-search oracle (cases of at most four
/// buses) for each input.
inline std::vector<CompareRow> compare_rows(const RunConfig& cfg)
{
  std::vector<CompareRow> rows;
  for (const auto& spec : cfg.inputs) {
    CompareRow row;
    row.name = spec;
    try {
      Network net = load_case(spec).network;
      row.buses = net.bus_count();
      ModelSolution ms = solve_model(net, ModelKind::rls1, cfg.solver);
      if (!ms.optimal()) throw Error(ErrorCode::solver_failure, std::string(to_string(ms.result.report.status)));
      row.relaxed_objective = ms.objective;
      row.max_gap = diagnose(ms.lifted, net, cfg.tolerances).max_gap;
      if (net.bus_count() <= kOracleMaxBuses) {
        OracleResult o = brute_force_opf1(net, cfg.grid_step);
        row.oracle_objective = o.best_objective;
        row.difference = std::abs(o.best_objective - ms.objective);
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  std::vector<CompareRow> rows;
  try {
    rows = compare_rows(cfg);
  } catch (const Error& e) {
    return detail::report_error(err, e.what());
  }
  int code = kExitOk;
  for (const auto& r : rows)
    if (!r.error.empty()) code = detail::report_error(err, r.name + ": " + r.error);
  detail::Output sink(cfg.out, out);
  auto& os = sink.stream();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  switch (cfg.format) {
    case OutputFormat::json: {
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"case", r.name},
                       {"buses", r.buses},
                       {"exactness", r.max_gap},
                       {"rls1_objective", r.relaxed_objective},
                       {"opf1_objective", opt(r.oracle_objective)},
                       {"difference", opt(r.difference)},
                       {"error", r.error}});
      os << json{{"schema", kReportSchema}, {"command", "compare"}, {"config", detail::config_json(cfg)}, {"rows", arr}}
                .dump(2)
         << "\n";
      break;
    }
    case OutputFormat::csv:
      os << "case,buses,exactness,rls1_objective,opf1_objective,difference\n";
      for (const auto& r : rows)
        os << fmt::format("{},{},{:.17g},{:.17g},{},{}\n", r.name, r.buses, r.max_gap, r.relaxed_objective,
                          r.oracle_objective ? fmt::format("{:.17g}", *r.oracle_objective) : "",
                          r.difference ? fmt::format("{:.17g}", *r.difference) : "");
      break;
    case OutputFormat::table:
      os << fmt::format("{:<28} {:>5} {:>12} {:>12} {:>12} {:>10}\n", "System", "Buses", "Exactness", "RLS1", "OPF1",
                        "|diff|");
      for (const auto& r : rows)
        os << fmt::format("{:<28} {:>5} {:>12} {:>12} {:>12} {:>10}\n", r.name, r.buses, detail::fmt_sci(r.max_gap),
                          detail::fmt_sci(r.relaxed_objective),
                          r.oracle_objective ? detail::fmt_sci(*r.oracle_objective) : "-",
                          r.difference ? detail::fmt_sci(*r.difference) : "-");
      break;
  }
  return code;
}

/// Solves every input with up to `workers` threads. Exit code is 1 if any
/// case failed, else 2 if any was inexact, else 0.
inline int cmd_batch(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  const std::size_t n = cfg.inputs.size();
  std::vector<detail::SolveOutcome> results(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) results[i] = detail::solve_case(cfg.inputs[i], cfg);
  };
  const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  int code = kExitOk;
  for (const auto& r : results) {
    if (!r.error.empty()) err << "error: " << r.name << ": " << r.error << "\n";
    code = r.exit_code == kExitError || code == kExitError ? kExitError : std::max(code, r.exit_code);
  }
  detail::Output sink(cfg.out, out);
  auto& os = sink.stream();
  switch (cfg.format) {
    case OutputFormat::json: {
      json arr = json::array();
      for (const auto& r : results) arr.push_back(detail::solve_json(r, cfg));
      os << json{{"schema", kReportSchema}, {"command", "batch"}, {"results", arr}}.dump(2) << "\n";
      break;
    }
    case OutputFormat::csv:
      os << "case,model,status,iterations,objective,max_gap,normalized_max_gap,classification,exit_code\n";
      for (const auto& r : results) {
        if (!r.error.empty()) {
          os << fmt::format("{},{},error,,,,,,{}\n", r.name, to_string(cfg.model), r.exit_code);
          continue;
        }
        os << fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{},{}\n", r.name, to_string(cfg.model),
                          to_string(r.solution.result.report.status), r.solution.result.report.iterations,
                          r.solution.objective, r.exactness.max_gap, r.exactness.normalized_max_gap,
                          to_string(r.exactness.classification), r.exit_code);
      }
      break;
    case OutputFormat::table:
      os << fmt::format("{:<28} {:>8} {:>5} {:>14} {:>10} {:>16}\n", "Case", "Status", "Iter", "Objective", "Gap",
                        "Class");
      for (const auto& r : results)
        os << fmt::format("{:<28} {:>8} {:>5} {:>14.9g} {:>10} {:>16}\n", r.name,
                          r.error.empty() ? std::string(to_string(r.solution.result.report.status)) : "error",
                          r.solution.result.report.iterations, r.solution.objective,
                          detail::fmt_sci(r.exactness.max_gap),
                          r.error.empty() ? std::string(to_string(r.exactness.classification)) : "-");
      break;
  }
  return code;
}

inline int cmd_gen_random(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  try {
    RandomCaseOptions opt;
    opt.buses = cfg.buses;
    opt.topology = cfg.topology;
    opt.seed = cfg.seed;
    opt.cost_spread = cfg.cost_spread;
    Network net = random_case(opt);
    CaseMeta meta;
    meta.provenance = fmt::format("gen-random seed {} buses {} topology {}", cfg.seed, cfg.buses, to_string(cfg.topology));
    detail::Output sink(cfg.out, out);
    sink.stream() << write_case_json(net, meta);
  } catch (const Error& e) {
    return detail::report_error(err, e.what());
  }
  return kExitOk;
}

inline int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  try {
    switch (cfg.command) {
      case Command::solve: return cmd_solve(cfg, out, err);
      case Command::check: return cmd_check(cfg, out, err);
      case Command::recover: return cmd_recover(cfg, out, err);
      case Command::compare: return cmd_compare(cfg, out, err);
      case Command::batch: return cmd_batch(cfg, out, err);
      case Command::gen_random: return cmd_gen_random(cfg, out, err);
    }
  } catch (const Error& e) {
    return detail::report_error(err, e.what());
  }
  return kExitError;
}

}  // namespace dcflow

#endif  // DCFLOW_CLI_HPP_
