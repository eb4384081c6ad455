#ifndef DCFLOW_EXACTNESS_HPP_
#define DCFLOW_EXACTNESS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dcflow/error.hpp"
#include "dcflow/formulations.hpp"
#include "dcflow/netmodel.hpp"
#include "dcflow/solutions.hpp"

namespace dcflow
{

enum class Classification
{
  exact,
  theorem6_cond1,
  theorem6_cond2,
  needs_recovery,
  assumptions_violated,
};

constexpr std::string_view to_string(Classification c)
{
  switch (c) {
    case Classification::exact: return "exact";
    case Classification::theorem6_cond1: return "theorem6_cond1";
    case Classification::theorem6_cond2: return "theorem6_cond2";
    case Classification::needs_recovery: return "needs_recovery";
    case Classification::assumptions_violated: return "assumptions_violated";
  }
  return "?";
}

struct Tolerances
{
  double gap = 1e-6;       // normalized rank gap accepted as exact
  double binding = 1e-7;   // absolute slack below which a constraint binds
  double loss = kDefaultLossTolerance;
};

struct ExactnessReport
{
  std::vector<double> per_line_gap;  // D_ij
  std::vector<double> normalized_gap;  // D_ij / (v_i v_j)
  double max_gap = 0.0;
  double normalized_max_gap = 0.0;
  std::vector<int> rank_violating_lines;
  std::vector<int> binding_p_lower;
  std::vector<int> binding_line_limits;
  std::vector<int> recovery_buses;  // endpoints of violating lines whose p lower bound binds
  AssumptionReport assumptions;
  std::vector<std::string> failed_assumptions;
  bool no_limit_binding = true;        // first sufficient condition for exactness with limits
  bool limits_clear_of_lower = true;   // second: binding-limit lines have slack endpoint lower bounds
  Classification classification = Classification::exact;
  Tolerances tolerances;
};

/// Gaps of a branch flow point, taken after mapping it to the lifted model.
inline std::vector<double> rank_gaps(const BranchFlowSolution& sol, const Network& net)
{
  return rank_gaps(map_g_inv(sol, net), net);
}

inline double line_current_squared(const LiftedSolution& sol, const Line& ln, int k)
{
  return ln.y * ln.y * (sol.v[ln.from] - 2.0 * sol.W[k] + sol.v[ln.to]);
}

inline bool lower_binding(const Bus& b, double p, double tol)
{
  return b.p_min.has_value() && p - *b.p_min <= tol;
}

inline ExactnessReport diagnose(const LiftedSolution& sol, const Network& net, const Tolerances& tols = {})
{
  ExactnessReport r;
  r.tolerances = tols;
  r.per_line_gap = rank_gaps(sol, net);
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    double ng = r.per_line_gap[k] / (sol.v[ln.from] * sol.v[ln.to]);
    r.normalized_gap.push_back(ng);
    r.max_gap = k == 0 ? r.per_line_gap[k] : std::max(r.max_gap, r.per_line_gap[k]);
    r.normalized_max_gap = k == 0 ? ng : std::max(r.normalized_max_gap, ng);
    if (ng > tols.gap) r.rank_violating_lines.push_back(k);
    if (ln.i_max && *ln.i_max * *ln.i_max - line_current_squared(sol, ln, k) <= tols.binding)
      r.binding_line_limits.push_back(k);
  }
  for (int i = 0; i < net.bus_count(); ++i)
    if (lower_binding(net.bus(i), sol.p[i], tols.binding)) r.binding_p_lower.push_back(i);

  r.assumptions = check_assumptions(net, sol, tols.loss);
  if (!r.assumptions.a1_uniform_vmax) r.failed_assumptions.emplace_back("a1_uniform_vmax");
  if (r.assumptions.a2_positive_loss != Tristate::holds) r.failed_assumptions.emplace_back("a2_positive_loss");
  if (!r.assumptions.positive_lower_injection.empty()) r.failed_assumptions.emplace_back("p_min_nonpositive");

  r.no_limit_binding = r.binding_line_limits.empty();
  for (int k : r.binding_line_limits) {
    const Line& ln = net.line(k);
    if (lower_binding(net.bus(ln.from), sol.p[ln.from], tols.binding) ||
        lower_binding(net.bus(ln.to), sol.p[ln.to], tols.binding))
      r.limits_clear_of_lower = false;
  }

  std::set<int> nhat;
  for (int k : r.rank_violating_lines) {
    const Line& ln = net.line(k);
    for (int b : {ln.from, ln.to})
      if (lower_binding(net.bus(b), sol.p[b], tols.binding)) nhat.insert(b);
  }
  r.recovery_buses.assign(nhat.begin(), nhat.end());

  if (r.normalized_max_gap <= tols.gap)
    r.classification = Classification::exact;
  else if (r.no_limit_binding)
    r.classification = r.failed_assumptions.empty() ? Classification::theorem6_cond1
                                                    : Classification::assumptions_violated;
  else if (!r.recovery_buses.empty())
    r.classification = Classification::needs_recovery;
  else
    r.classification = Classification::theorem6_cond2;
  return r;
}

/// Largest violation of each constraint group of the lifted relaxation at a
/// point. Injection rows compare p with sum_j (v_i - W_ij) y_ij.
struct LiftedFeasibility
{
  double injection_rows = 0.0;
  double p_bounds = 0.0;
  double v_bounds = 0.0;
  double w_nonneg = 0.0;
  double cone = 0.0;  // max(W^2 - v_i v_j, 0)
  double line_limits = 0.0;

  double worst(bool with_p_bounds = true) const
  {
    return std::max({injection_rows, with_p_bounds ? p_bounds : 0.0, v_bounds, w_nonneg, cone, line_limits});
  }
};

inline LiftedFeasibility lifted_feasibility(const LiftedSolution& sol, const Network& net, bool with_limits)
{
  LiftedFeasibility f;
  for (int i = 0; i < net.bus_count(); ++i) {
    const Bus& b = net.bus(i);
    double calc = 0.0;
    for (int k : net.incident_lines(i)) calc += (sol.v[i] - sol.W[k]) * net.line(k).y;
    f.injection_rows = std::max(f.injection_rows, std::abs(calc - sol.p[i]));
    if (!b.is_slack()) {
      if (b.p_min) f.p_bounds = std::max(f.p_bounds, *b.p_min - sol.p[i]);
      if (b.p_max) f.p_bounds = std::max(f.p_bounds, sol.p[i] - *b.p_max);
    }
    f.v_bounds = std::max({f.v_bounds, b.v_min * b.v_min - sol.v[i], sol.v[i] - b.v_max * b.v_max});
  }
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    f.w_nonneg = std::max(f.w_nonneg, -sol.W[k]);
    f.cone = std::max(f.cone, sol.W[k] * sol.W[k] - sol.v[ln.from] * sol.v[ln.to]);
    if (with_limits && ln.i_max)
      f.line_limits = std::max(f.line_limits, line_current_squared(sol, ln, k) - *ln.i_max * *ln.i_max);
  }
  return f;
}

/// p_i = sum_j (v_i - W_ij) y_ij
inline std::vector<double> lifted_injections(const std::vector<double>& v, const std::vector<double>& W,
                                             const Network& net)
{
  std::vector<double> p(static_cast<std::size_t>(net.bus_count()), 0.0);
  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    p[ln.from] += (v[ln.from] - W[k]) * ln.y;
    p[ln.to] += (v[ln.to] - W[k]) * ln.y;
  }
  return p;
}

enum class LemmaCheck
{
  lemma2,  // binding lower bound keeps v strictly under its cap
  lemma3,  // both lower bounds slack: W + eps lowers the objective
  lemma4,  // one lower bound binds: W + eps with v_s raised lowers the objective
  lemma5,  // both bind: raising v_s, v_t spreads the rank violation
};

constexpr std::string_view to_string(LemmaCheck c)
{
  switch (c) {
    case LemmaCheck::lemma2: return "lemma2";
    case LemmaCheck::lemma3: return "lemma3";
    case LemmaCheck::lemma4: return "lemma4";
    case LemmaCheck::lemma5: return "lemma5";
  }
  return "?";
}

struct PropertyResult
{
  LemmaCheck check;
  int line = -1;
  int bus = -1;
  bool passed = false;
  double epsilon = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  std::string detail;
  LiftedSolution constructed;  // perturbed point (empty for lemma2)
};

/// Runs the constructive moves behind the exactness argument on every
/// rank-violating line of a feasible lifted point. Each step picks epsilon
/// as half the smallest admissible bound.
inline std::vector<PropertyResult> verify_lemma_consequences(const LiftedSolution& sol, const Network& net,
                                                             const Tolerances& tols = {})
{
  std::vector<PropertyResult> out;
  const double inf = std::numeric_limits<double>::infinity();
  const double feas_tol = 1e-9;
  const bool a1 = check_assumptions(net).a1_uniform_vmax;
  const double h0 = net.objective(sol.p);

  auto sqrt_vv = [&](int k) {
    const Line& ln = net.line(k);
    return std::sqrt(sol.v[ln.from] * sol.v[ln.to]);
  };
  auto p_room = [&](int b) {
    const Bus& bus = net.bus(b);
    return bus.p_min ? sol.p[b] - *bus.p_min : inf;
  };
  auto v_room = [&](int b) {
    const Bus& bus = net.bus(b);
    return bus.is_slack() ? 0.0 : bus.v_max * bus.v_max - sol.v[b];
  };

  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    const double d = sqrt_vv(k) - sol.W[k];
    if (d / sqrt_vv(k) <= tols.gap) continue;
    const int s = ln.from, t = ln.to;
    const bool bs = lower_binding(net.bus(s), sol.p[s], tols.binding);
    const bool bt = lower_binding(net.bus(t), sol.p[t], tols.binding);

    if (a1) {
      for (int b : {s, t}) {
        if (!(b == s ? bs : bt)) continue;
        PropertyResult pr{LemmaCheck::lemma2, k, b};
        pr.passed = sol.v[b] < net.bus(b).v_max * net.bus(b).v_max - 1e-12;
        pr.detail = "v = " + std::to_string(sol.v[b]);
        out.push_back(std::move(pr));
      }
    }

    PropertyResult pr{bs && bt ? LemmaCheck::lemma5 : (bs || bt ? LemmaCheck::lemma4 : LemmaCheck::lemma3), k};
    LiftedSolution np = sol;
    double eps = 0.0;
    if (!bs && !bt) {
      eps = 0.5 * std::min({p_room(s) / ln.y, p_room(t) / ln.y, d});
      np.W[k] += eps;
    } else if (bs != bt) {
      const int hold = bs ? s : t;  // bus whose lower bound binds
      const int free = bs ? t : s;
      pr.bus = hold;
      const double ysum = net.total_conductance(hold);
      eps = 0.5 * std::min({p_room(free) / ln.y, d, ysum / ln.y * v_room(hold)});
      np.W[k] += eps;
      np.v[hold] += ln.y / ysum * eps;
    } else {
      const double ys = net.total_conductance(s), yt = net.total_conductance(t);
      eps = 0.5 * std::min({d, ys / ln.y * v_room(s), yt / ln.y * v_room(t)});
      np.W[k] += eps;
      np.v[s] += ln.y / ys * eps;
      np.v[t] += ln.y / yt * eps;
    }
    np.p = lifted_injections(np.v, np.W, net);
    pr.epsilon = eps;
    pr.objective_before = h0;
    pr.objective_after = net.objective(np.p);

    LiftedFeasibility f = lifted_feasibility(np, net, false);
    bool feasible = f.worst() <= feas_tol;
    if (!(eps > 0.0)) {
      pr.passed = false;
      pr.detail = "no admissible epsilon";
    } else if (pr.check == LemmaCheck::lemma5) {
      double pdrift = 0.0;
      for (int i = 0; i < net.bus_count(); ++i) pdrift = std::max(pdrift, std::abs(np.p[i] - sol.p[i]));
      bool spread = true;
      for (int b : {s, t})
        for (int kk : net.incident_lines(b)) {
          const Line& o = net.line(kk);
          if (!(np.W[kk] < std::sqrt(np.v[o.from] * np.v[o.to]))) spread = false;
        }
      pr.passed = feasible && spread && pdrift <= 1e-10;
      pr.detail = "p drift " + std::to_string(pdrift) + (spread ? ", violation spread" : ", violation did not spread");
    } else {
      pr.passed = feasible && pr.objective_after < pr.objective_before;
      pr.detail = feasible ? "objective " + std::to_string(pr.objective_before) + " -> " +
                                 std::to_string(pr.objective_after)
                           : "constructed point infeasible";
    }
    pr.constructed = std::move(np);
    out.push_back(std::move(pr));
  }
  return out;
}

/// Throws ConstructionFailed for the first failed check.
inline void require_lemma_consequences(const LiftedSolution& sol, const Network& net, const Tolerances& tols = {})
{
  for (const auto& pr : verify_lemma_consequences(sol, net, tols))
    if (!pr.passed)
      throw Error(ErrorCode::construction_failed, std::string(to_string(pr.check)) + ": " + pr.detail, pr.line);
}

}  // namespace dcflow

#endif  // DCFLOW_EXACTNESS_HPP_
