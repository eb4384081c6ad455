#ifndef DCFLOW_NETMODEL_HPP_
#define DCFLOW_NETMODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcflow/error.hpp"
#include "dcflow/solutions.hpp"

namespace dcflow
{

/// An injection bound. std::nullopt means unbounded on that side; formulations
/// omit the inequality rather than emitting a large coefficient.
using Limit = std::optional<double>;

enum class BusKind
{
  standalone,
  slack,
};

enum class CostKind
{
  linear,
  quadratic,
};

/// f(p) = quadratic * p^2 + linear * p + constant.
struct CostFunction
{
  CostKind kind = CostKind::linear;
  double quadratic = 0.0;
  double linear = 1.0;
  double constant = 0.0;

  static CostFunction make_linear(double slope, double constant = 0.0)
  {
    return {CostKind::linear, 0.0, slope, constant};
  }
  static CostFunction make_quadratic(double a, double b, double c = 0.0)
  {
    return {CostKind::quadratic, a, b, c};
  }

  double operator()(double p) const
  {
    return (kind == CostKind::quadratic ? quadratic * p * p : 0.0) + linear * p + constant;
  }
  double derivative(double p) const
  {
    return (kind == CostKind::quadratic ? 2.0 * quadratic * p : 0.0) + linear;
  }

  bool operator==(const CostFunction&) const = default;
};

struct Bus
{
  int id = 0;  // external label; lines refer to buses by position
  Limit p_min;
  Limit p_max;
  double v_min = 0.95;
  double v_max = 1.05;
  BusKind kind = BusKind::standalone;
  CostFunction cost;

  bool is_slack() const { return kind == BusKind::slack; }
  bool operator==(const Bus&) const = default;
};

struct Line
{
  int from = 0;
  int to = 0;
  double y = 1.0;  // conductance, p.u.
  Limit i_max;     // current limit, p.u.; absent means unconstrained

  double z() const { return 1.0 / y; }
  bool operator==(const Line&) const = default;
};

/// Immutable network graph. Lines refer to buses by their position in
/// `buses()`.
class Network
{
 public:
  Network() = default;
  Network(std::vector<Bus> buses, std::vector<Line> lines, std::string name = {})
      : buses_(std::move(buses)), lines_(std::move(lines)), name_(std::move(name))
  {
    incident_.assign(buses_.size(), {});
    for (std::size_t k = 0; k < lines_.size(); ++k) {
      const auto& ln = lines_[k];
      if (in_range(ln.from)) incident_[ln.from].push_back(static_cast<int>(k));
      if (in_range(ln.to) && ln.to != ln.from) incident_[ln.to].push_back(static_cast<int>(k));
    }
  }

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const Bus& bus(int i) const { return buses_.at(static_cast<std::size_t>(i)); }
  const Line& line(int k) const { return lines_.at(static_cast<std::size_t>(k)); }
  int bus_count() const { return static_cast<int>(buses_.size()); }
  int line_count() const { return static_cast<int>(lines_.size()); }
  const std::string& name() const { return name_; }

  const std::vector<int>& incident_lines(int bus) const
  {
    return incident_.at(static_cast<std::size_t>(bus));
  }
  int other_end(int line_index, int bus) const
  {
    const auto& ln = line(line_index);
    return ln.from == bus ? ln.to : ln.from;
  }
  double total_conductance(int bus) const
  {
    double sum = 0.0;
    for (int k : incident_lines(bus)) sum += line(k).y;
    return sum;
  }
  std::optional<int> find_line(int a, int b) const
  {
    for (int k : incident_lines(a))
      if (other_end(k, a) == b) return k;
    return std::nullopt;
  }
  bool has_line_limits() const
  {
    return std::any_of(lines_.begin(), lines_.end(),
                       [](const Line& ln) { return ln.i_max.has_value(); });
  }
  bool has_slack_bus() const
  {
    return std::any_of(buses_.begin(), buses_.end(), [](const Bus& b) { return b.is_slack(); });
  }

  /// h(p) = sum_i f_i(p_i)
  double objective(std::span<const double> p) const
  {
    double h = 0.0;
    for (std::size_t i = 0; i < buses_.size(); ++i) h += buses_[i].cost(p[i]);
    return h;
  }

  bool operator==(const Network& other) const
  {
    return buses_ == other.buses_ && lines_ == other.lines_;
  }

 private:
  bool in_range(int i) const { return i >= 0 && i < static_cast<int>(buses_.size()); }

  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::string name_;
  std::vector<std::vector<int>> incident_;
};

namespace detail
{

inline int count_components(const Network& net)
{
  const int n = net.bus_count();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int components = 0;
  std::vector<int> stack;
  for (int root = 0; root < n; ++root) {
    if (label[root] >= 0) continue;
    label[root] = components;
    stack.push_back(root);
    while (!stack.empty()) {
      int b = stack.back();
      stack.pop_back();
      for (int k : net.incident_lines(b)) {
        int o = net.other_end(k, b);
        if (label[o] < 0) {
          label[o] = components;
          stack.push_back(o);
        }
      }
    }
    ++components;
  }
  return components;
}

inline void validate_cost(const Bus& bus, int index)
{
  const auto& f = bus.cost;
  if (!std::isfinite(f.linear) || !std::isfinite(f.quadratic) || !std::isfinite(f.constant))
    throw Error(ErrorCode::non_increasing_cost, "cost coefficients must be finite", index);
  if (f.kind == CostKind::linear) {
    if (f.linear <= 0.0)
      throw Error(ErrorCode::non_increasing_cost, "linear cost slope must be positive", index);
    return;
  }
  if (f.quadratic < 0.0)
    throw Error(ErrorCode::non_convex_cost, "quadratic coefficient must be nonnegative", index);
  if (f.quadratic == 0.0) {
    if (f.linear <= 0.0)
      throw Error(ErrorCode::non_increasing_cost, "cost slope must be positive", index);
    return;
  }
  // f' = 2ap + b is smallest at p_min.
  if (!bus.p_min)
    throw Error(ErrorCode::non_increasing_cost,
                "quadratic cost is not increasing over an unbounded-below interval", index);
  if (f.derivative(*bus.p_min) <= 0.0)
    throw Error(ErrorCode::non_increasing_cost, "quadratic cost derivative is not positive at p_min",
                index);
}

}  // namespace detail

/// Checks every structural invariant of the network. Hard violations throw
/// dcflow::Error; conditions that only void the exactness guarantees
/// (positive injection lower bounds) are returned as warning-class errors.
inline std::vector<Error> validate_network(const Network& net)
{
  std::vector<Error> warnings;
  const int n = net.bus_count();
  if (n == 0) throw Error(ErrorCode::bad_bounds, "network has no buses");

  for (int i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    if (!std::isfinite(b.v_min) || !std::isfinite(b.v_max) || b.v_min <= 0.0 || b.v_min > b.v_max)
      throw Error(ErrorCode::bad_bounds, "voltage bounds must satisfy 0 < v_min <= v_max", i);
    if ((b.p_min && !std::isfinite(*b.p_min)) || (b.p_max && !std::isfinite(*b.p_max)))
      throw Error(ErrorCode::bad_bounds, "injection bounds must be finite or absent", i);
    if (b.p_min && b.p_max && *b.p_min > *b.p_max)
      throw Error(ErrorCode::bad_bounds, "p_min exceeds p_max", i);
    if (b.is_slack()) {
      if (b.p_min || b.p_max)
        throw Error(ErrorCode::bad_bounds, "slack bus injection must be unbounded", i);
      if (b.v_min != b.v_max)
        throw Error(ErrorCode::bad_bounds, "slack bus needs a fixed reference voltage", i);
      if (b.cost.kind == CostKind::quadratic && b.cost.quadratic != 0.0)
        throw Error(ErrorCode::non_increasing_cost,
                    "slack bus cost must be linear (injection is unbounded)", i);
    } else if (b.p_min && *b.p_min > 0.0) {
      warnings.emplace_back(ErrorCode::positive_lower_injection,
                            "p_min > 0; exactness guarantees do not apply", i, Severity::warning);
    }
    detail::validate_cost(b, i);
    for (int j = 0; j < i; ++j)
      if (net.bus(j).id == b.id) throw Error(ErrorCode::bad_bounds, "duplicate bus id", i);
  }

  for (int k = 0; k < net.line_count(); ++k) {
    const Line& ln = net.line(k);
    if (ln.from < 0 || ln.from >= n || ln.to < 0 || ln.to >= n)
      throw Error(ErrorCode::bad_line, "line references a missing bus", k);
    if (ln.from == ln.to) throw Error(ErrorCode::bad_line, "line is a self loop", k);
    if (!(ln.y > 0.0) || !std::isfinite(ln.y))
      throw Error(ErrorCode::nonpositive_conductance, "conductance must be positive", k);
    if (ln.i_max && (!(*ln.i_max > 0.0) || !std::isfinite(*ln.i_max)))
      throw Error(ErrorCode::bad_line, "current limit must be positive", k);
    for (int m = 0; m < k; ++m) {
      const Line& o = net.line(m);
      if ((o.from == ln.from && o.to == ln.to) || (o.from == ln.to && o.to == ln.from))
        throw Error(ErrorCode::bad_line, "parallel line between the same buses", k);
    }
  }

  if (int c = detail::count_components(net); c > 1)
    throw Error(ErrorCode::disconnected, "network has " + std::to_string(c) + " components", c);
  return warnings;
}

enum class Tristate
{
  holds,
  fails,
  solution_dependent,
};

struct AssumptionReport
{
  bool a1_uniform_vmax = false;
  Tristate a2_positive_loss = Tristate::solution_dependent;
  std::optional<double> total_injection;  // sum_i p_i = total network loss
  std::vector<int> positive_lower_injection;
  std::string note;

  bool all_hold() const
  {
    return a1_uniform_vmax && a2_positive_loss == Tristate::holds && positive_lower_injection.empty();
  }
  bool operator==(const AssumptionReport&) const = default;
};

inline constexpr double kUniformVmaxTolerance = 1e-12;
inline constexpr double kDefaultLossTolerance = 1e-9;

/// Reports whether the exactness assumptions hold: uniform voltage upper
/// bounds over standalone buses, and positive total loss at `sol`.
inline AssumptionReport check_assumptions(const Network& net,
                                          const std::optional<LiftedSolution>& sol = std::nullopt,
                                          double loss_tolerance = kDefaultLossTolerance)
{
  AssumptionReport r;
  r.a1_uniform_vmax = true;
  std::optional<double> ref;
  for (int i = 0; i < net.bus_count(); ++i) {
    const Bus& b = net.bus(i);
    if (b.is_slack()) continue;
    if (!ref)
      ref = b.v_max;
    else if (std::abs(b.v_max - *ref) > kUniformVmaxTolerance)
      r.a1_uniform_vmax = false;
    if (b.p_min && *b.p_min > 0.0) r.positive_lower_injection.push_back(i);
  }
  if (sol) {
    double total = 0.0;
    for (double p : sol->p) total += p;
    r.total_injection = total;
    r.a2_positive_loss = total > loss_tolerance ? Tristate::holds : Tristate::fails;
  } else {
    r.a2_positive_loss = Tristate::solution_dependent;
    r.note =
        "sum of injections equals total network loss; it is zero only at uniform-voltage points";
  }
  return r;
}

}  // namespace dcflow

#endif  // DCFLOW_NETMODEL_HPP_
