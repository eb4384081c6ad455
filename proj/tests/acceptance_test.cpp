// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace dcflow;
using dcflow::testing::GapMove;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome
{
  bool pass = true;
  std::string detail;
};

double max_diff(const std::vector<double>& a, const std::vector<double>& b)
{
  if (a.size() != b.size()) return INFINITY;
  return dcflow::testing::max_abs_diff(a, b);
}

// The 200 networks of the exactness property: 3 to 12 buses, first half
// trees, second half meshes, odd seeds with spread linear costs.
std::vector<Network> property_networks()
{
  std::vector<Network> nets;
  for (int i = 0; i < 200; ++i) {
    RandomCaseOptions opt;
    opt.seed = 1000 + static_cast<std::uint64_t>(i);
    opt.buses = 3 + i % 10;
    opt.topology = i < 100 ? Topology::tree : Topology::mesh;
    opt.cost_spread = i % 2 ? 0.5 : 0.0;
    nets.push_back(random_case(opt));
  }
  return nets;
}

Outcome criterion1(const std::vector<Network>& nets)
{
  Outcome o;
  auto t0 = Clock::now();
  double worst = 0.0;
  int failed = 0, inexact = 0, unmet = 0;
  for (const auto& net : nets) {
    auto ms = solve_model(net, ModelKind::rls1);
    if (!ms.optimal()) {
      ++failed;
      continue;
    }
    auto rep = diagnose(ms.lifted, net);
    worst = std::max(worst, rep.normalized_max_gap);
    if (rep.normalized_max_gap > 1e-6) ++inexact;
    auto a = check_assumptions(net, ms.lifted);
    if (!a.a1_uniform_vmax || a.a2_positive_loss != Tristate::holds || !a.positive_lower_injection.empty()) ++unmet;
  }
  const double elapsed = seconds_since(t0);
  double worst16 = 0.0;
  for (const char* name : {"dc16_gt", "dc16_gm", "dc16_st", "dc16_sm"}) {
    auto net = builtin_case(name);
    auto ms = solve_model(net, ModelKind::rls1);
    if (!ms.optimal()) {
      ++failed;
      continue;
    }
    worst16 = std::max(worst16, diagnose(ms.lifted, net).max_gap);
  }
  o.pass = failed == 0 && inexact == 0 && unmet == 0 && worst16 <= 1e-8 && elapsed < 60.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "200 random: max normalized gap %.2e (<= 1e-6), %d not optimal, %d assumption misses, %.1f s; "
                "dc16 max raw gap %.2e (<= 1e-8)",
                worst, failed, unmet, elapsed, worst16);
  o.detail = buf;
  return o;
}

Outcome criterion2()
{
  Outcome o;
  auto t0 = Clock::now();
  double worst_ratio = 0.0, worst_diff = 0.0;
  int failed = 0;
  for (int i = 0; i < 50; ++i) {
    RandomCaseOptions opt;
    opt.seed = 5000 + static_cast<std::uint64_t>(i);
    opt.buses = 2 + i % 2;
    opt.cost_spread = i % 4 < 2 ? 0.0 : 0.5;
    Network net = random_case(opt);
    auto ms = solve_model(net, ModelKind::rls1);
    if (!ms.optimal()) {
      ++failed;
      continue;
    }
    constexpr double step = 1e-3;
    auto r = brute_force_opf1(net, step);
    const double diff = std::abs(ms.objective - r.best_objective);
    worst_diff = std::max(worst_diff, diff);
    worst_ratio = std::max(worst_ratio, diff / std::max(1e-4, 3.0 * r.kappa * step));
  }
  const double elapsed = seconds_since(t0);
  o.pass = failed == 0 && worst_ratio <= 1.0 && elapsed < 300.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "50 random 2-3 bus: max |diff| %.2e, max |diff| / max(1e-4, 3 kappa h) = %.3f (<= 1), %d not optimal, %.1f s",
                worst_diff, worst_ratio, failed, elapsed);
  o.detail = buf;
  return o;
}

Outcome criterion3(const std::vector<Network>& nets)
{
  Outcome o;
  double worst_obj = 0.0;
  int failed = 0;
  for (const auto& net : nets) {
    auto a = solve_model(net, ModelKind::rl1);
    auto b = solve_model(net, ModelKind::rls1);
    if (!a.optimal() || !b.optimal()) {
      ++failed;
      continue;
    }
    worst_obj = std::max(worst_obj, std::abs(a.objective - b.objective));
  }

  std::mt19937_64 rng(42);
  double worst_f = 0.0, worst_g = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Network& net = nets[static_cast<std::size_t>(i) % nets.size()];
    auto V = dcflow::testing::random_voltages(rng, net.bus_count());
    auto lifted = lift_f(V, net);
    worst_f = std::max(worst_f, max_diff(unlift_f_inv(lifted, net).V, V));

    // a lifted point with slack on every cone, still feasible for the relaxation
    std::uniform_real_distribution<double> shrink(0.0, 0.02);
    LiftedSolution x = lifted;
    for (auto& w : x.W) w *= 1.0 - shrink(rng);
    x.p = lifted_injections(x.v, x.W, net);
    auto back = map_g_inv(map_g(x, net), net);
    worst_g = std::max({worst_g, max_diff(back.p, x.p), max_diff(back.v, x.v), max_diff(back.W, x.W)});
  }
  o.pass = failed == 0 && worst_obj <= 1e-7 && worst_f <= 1e-12 && worst_g <= 1e-12;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "RL1 vs RLS1 max |dobj| %.2e (<= 1e-7) on %zu nets, %d not optimal; f round trip %.2e, g round trip %.2e "
                "(<= 1e-12) on 1000 points",
                worst_obj, nets.size(), failed, worst_f, worst_g);
  o.detail = buf;
  return o;
}

Outcome criterion4(const std::vector<Network>& nets)
{
  Outcome o;
  double worst = 0.0, worst_p = 0.0, worst_vw = 0.0;
  int failed = 0;
  // one network per (size, family, cost) combination in turn
  for (int i = 0; i < 20; ++i) {
    const Network& net = nets[static_cast<std::size_t>(i * 10 + i % 10)];
    std::vector<ModelSolution> runs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SolverSettings s;
      s.seed = seed;
      runs.push_back(solve_model(net, ModelKind::rl1, s));
      if (!runs.back().optimal()) ++failed;
    }
    for (std::size_t k = 1; k < runs.size(); ++k) {
      const auto& a = runs[0].lifted;
      const auto& b = runs[k].lifted;
      worst_p = std::max(worst_p, max_diff(a.p, b.p));
      worst_vw = std::max({worst_vw, max_diff(a.v, b.v), max_diff(a.W, b.W)});
    }
  }
  worst = std::max(worst_p, worst_vw);
  o.pass = failed == 0 && worst <= 1e-6;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "20 nets x 5 seeded starts: max inf-norm spread of (p, v, W) %.2e (<= 1e-6; p %.2e, v and W %.2e), "
                "%d not optimal",
                worst, worst_p, worst_vw, failed);
  o.detail = buf;
  return o;
}

Outcome criterion5()
{
  Outcome o;
  std::map<std::string, double> obj;
  bool all_exact = true;
  for (const char* name : {"dc16_gt", "dc16_gm", "dc16_st", "dc16_sm"}) {
    auto net = builtin_case(name);
    auto ms = solve_model(net, ModelKind::rls1);
    obj[name] = ms.objective;
    all_exact = all_exact && ms.optimal() && diagnose(ms.lifted, net).classification == Classification::exact;
  }
  const bool order = obj["dc16_gm"] < obj["dc16_gt"] && obj["dc16_sm"] < obj["dc16_st"] &&
                     obj["dc16_gt"] < obj["dc16_st"] && obj["dc16_gm"] < obj["dc16_sm"];
  o.pass = order && all_exact;
  char buf[256];
  std::snprintf(buf, sizeof buf, "GT %.6f GM %.6f ST %.6f SM %.6f; GM<GT, SM<ST, GT<ST, GM<SM %s; all exact %s",
                obj["dc16_gt"], obj["dc16_gm"], obj["dc16_st"], obj["dc16_sm"], order ? "yes" : "no",
                all_exact ? "yes" : "no");
  o.detail = buf;
  return o;
}

Outcome criterion6()
{
  Outcome o;
  auto slack_net = builtin_case("limits_slack");
  auto slack_ms = solve_model(slack_net, ModelKind::rls2);
  const bool slack_exact = slack_ms.optimal() && diagnose(slack_ms.lifted, slack_net).classification == Classification::exact;

  auto net = builtin_case("limits_recovery");
  auto ms = solve_model(net, ModelKind::rls2);
  const bool needs = ms.optimal() && diagnose(ms.lifted, net).classification == Classification::needs_recovery;

  bool direct_ok = false;
  double worst_excess = INFINITY;
  if (ms.optimal()) {
    auto d = direct_construct(ms.lifted, net);
    auto f = check_feasible(d.solution.V, net, 1e-9);
    const bool power_eq = d.solution.p == injections_from_voltages(d.solution.V, net);
    worst_excess = -INFINITY;
    for (int i = 0; i < net.bus_count(); ++i)
      worst_excess = std::max(worst_excess, d.bound_violations[i] - d.violation_bound[i]);
    direct_ok = power_eq && f.max_voltage_violation <= 1e-12 && f.max_line_violation <= 1e-9 && worst_excess <= 1e-9;
  }

  bool iter_ok = false;
  int iterations = -1;
  try {
    auto r = slack_iterate(net);
    iterations = r.iterations;
    auto f = check_feasible(r.solution.V, net, 1e-8);
    iter_ok = r.exact && r.iterations <= 10 && f.max_line_violation <= 1e-8 && f.max_voltage_violation <= 1e-12;
  } catch (const Error&) {
  }
  o.pass = slack_exact && needs && direct_ok && iter_ok;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "limits_slack exact %s; limits_recovery needs_recovery %s; direct feasible and within bound %s "
                "(max violation - bound %.1e); slack iteration exact %s after %d iterations",
                slack_exact ? "yes" : "no", needs ? "yes" : "no", direct_ok ? "yes" : "no", worst_excess,
                iter_ok ? "yes" : "no", iterations);
  o.detail = buf;
  return o;
}

Outcome criterion7()
{
  Outcome o;
  int run[3] = {0, 0, 0}, bad[3] = {0, 0, 0};
  for (int i = 0; i < 100; ++i) {
    const int kind = i % 3;
    const auto seed = 9000 + static_cast<std::uint64_t>(i);
    if (kind == 0 || kind == 1) {
      auto g = dcflow::testing::sample_gap_point(seed, kind == 0 ? GapMove::both_slack : GapMove::both_binding);
      const LemmaCheck want = kind == 0 ? LemmaCheck::lemma3 : LemmaCheck::lemma5;
      bool seen = false, ok = true;
      for (const auto& r : verify_lemma_consequences(g.sol, g.net)) {
        ok = ok && r.passed;
        seen = seen || (r.check == want && r.line == g.line);
      }
      ++run[kind];
      if (!(seen && ok)) ++bad[kind];
    } else {
      auto g = dcflow::testing::sample_gap_point(seed, GapMove::limit_and_lower);
      auto before = diagnose(g.sol, g.net);
      auto closed = close_rank_gaps(g.sol, g.net, before.rank_violating_lines);
      auto f = lifted_feasibility(closed, g.net, true);
      bool upper_ok = true;
      for (int b = 0; b < g.net.bus_count(); ++b) upper_ok = upper_ok && closed.p[b] <= *g.net.bus(b).p_max;
      const bool ok = before.classification == Classification::needs_recovery &&
                      diagnose(closed, g.net).classification == Classification::exact && f.injection_rows <= 1e-12 &&
                      f.v_bounds <= 0.0 && f.w_nonneg <= 0.0 && f.cone <= 1e-15 && f.line_limits <= 1e-12 &&
                      upper_ok && g.net.objective(closed.p) < g.net.objective(g.sol.p);
      ++run[kind];
      if (!ok) ++bad[kind];
    }
  }
  o.pass = bad[0] + bad[1] + bad[2] == 0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "100 sampled points: slack-bound improvement %d/%d, violation propagation %d/%d, rank-gap closing %d/%d",
                run[0] - bad[0], run[0], run[1] - bad[1], run[1], run[2] - bad[2], run[2]);
  o.detail = buf;
  return o;
}

Outcome criterion8()
{
  Outcome o;
  ConeProgram lp;
  lp.add_variable("x", 2.0, std::nullopt, 1.0);
  ConeProgram soc;
  int t = soc.add_variable("t", std::nullopt, std::nullopt, 1.0);
  soc.add_cone(ConeKind::soc, {AffineExpr::variable(t), AffineExpr::fixed(3.0), AffineExpr::fixed(4.0)});
  ConeProgram rsoc;
  int u = rsoc.add_variable("u", std::nullopt, std::nullopt, 1.0);
  rsoc.add_cone(ConeKind::rsoc, {AffineExpr::variable(u), AffineExpr::fixed(1.0), AffineExpr::fixed(2.0)});

  auto err = [](const ConeProgram& p, double want) {
    auto r = solve(p);
    return r.report.status == SolveStatus::optimal ? std::abs(r.x[0] - want) : INFINITY;
  };
  const double e1 = err(lp, 2.0), e2 = err(soc, 5.0), e3 = err(rsoc, 4.0);

  bool same = true;
  for (const char* name : {"dc16_gm", "limits_recovery", "tree33"}) {
    auto prog = build_rls1(builtin_case(name)).program;
    for (std::uint64_t seed : {0u, 7u}) {
      SolverSettings s;
      s.seed = seed;
      auto a = solve(prog, s), b = solve(prog, s);
      same = same && a.x == b.x && a.y == b.y && a.report.iterations == b.report.iterations &&
             a.report.primal_objective == b.report.primal_objective;
    }
  }
  o.pass = e1 <= 1e-9 && e2 <= 1e-9 && e3 <= 1e-9 && same;
  char buf[200];
  std::snprintf(buf, sizeof buf, "cone examples |err| %.1e, %.1e, %.1e (<= 1e-9); repeat solves bitwise identical %s", e1,
                e2, e3, same ? "yes" : "no");
  o.detail = buf;
  return o;
}

}  // namespace

int main()
{
  const auto nets = property_networks();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exactness of the branch flow relaxation", [&] { return criterion1(nets); }},
      {"agreement with the brute-force oracle", criterion2},
      {"equivalence of formulations and coordinate maps", [&] { return criterion3(nets); }},
      {"uniqueness under perturbed starts", [&] { return criterion4(nets); }},
      {"16-bus mode and topology ordering", criterion5},
      {"line-limit regime and recovery", criterion6},
      {"constructive checks on suboptimal points", criterion7},
      {"cone solver examples and determinism", criterion8},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
