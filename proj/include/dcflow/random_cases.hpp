#ifndef DCFLOW_RANDOM_CASES_HPP_
#define DCFLOW_RANDOM_CASES_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcflow/error.hpp"
#include "dcflow/formulations.hpp"
#include "dcflow/netmodel.hpp"

namespace dcflow
{

enum class Topology
{
  tree,
  mesh,
};

constexpr std::string_view to_string(Topology t) { return t == Topology::tree ? "tree" : "mesh"; }

struct RandomCaseOptions
{
  int buses = 5;
  Topology topology = Topology::tree;
  std::uint64_t seed = 1;
  double y_min = 1.0;
  double y_max = 100.0;
  double cost_spread = 0.0;  // linear slopes drawn from [1, 1 + cost_spread]; 0 gives the loss objective
  bool slack_bus = false;    // bus 0 becomes a slack bus at v_max
};

namespace detail
{

// Platform-independent draws from mt19937_64, so files are reproducible
// across standard libraries.
class PortableRng
{
 public:
  explicit PortableRng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double a, double b) { return a + (b - a) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53); }
  int below(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace detail

/// Connected random network with a feasible point built in: voltages are
/// sampled inside the box, injections computed from them, and every bound
/// is widened around those injections. Loads keep p_max < 0 so the loss at
/// the optimum stays positive; generators get p_min = 0.
inline Network random_case(const RandomCaseOptions& opt)
{
  if (opt.buses < 2) throw Error(ErrorCode::invalid_argument, "need at least 2 buses");
  detail::PortableRng rng(opt.seed);
  const int n = opt.buses;

  std::vector<Line> lines;
  std::set<std::pair<int, int>> used;
  for (int i = 1; i < n; ++i) {
    int j = rng.below(i);
    lines.push_back({j, i, rng.uniform(opt.y_min, opt.y_max), std::nullopt});
    used.insert({j, i});
  }
  if (opt.topology == Topology::mesh) {
    const int extra = std::max(1, n / 3);
    int added = 0;
    for (int attempt = 0; attempt < 100 * n && added < extra; ++attempt) {
      int a = rng.below(n), b = rng.below(n);
      if (a == b) continue;
      auto key = std::minmax(a, b);
      if (!used.insert({key.first, key.second}).second) continue;
      lines.push_back({key.first, key.second, rng.uniform(opt.y_min, opt.y_max), std::nullopt});
      ++added;
    }
    if (added == 0) throw Error(ErrorCode::invalid_argument, "no room for a cycle with " + std::to_string(n) + " buses");
  }

  std::vector<Bus> buses(static_cast<std::size_t>(n));
  std::vector<double> V(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    buses[i].id = i;
    V[i] = rng.uniform(0.96, 1.04);
  }
  if (opt.slack_bus) V[0] = buses[0].v_max;
  Network shape(buses, lines);
  const std::vector<double> p0 = injections_from_voltages(V, shape);

  for (int i = 0; i < n; ++i) {
    Bus& b = buses[i];
    const double slope = opt.cost_spread > 0.0 ? rng.uniform(1.0, 1.0 + opt.cost_spread) : 1.0;
    const double a = rng.uniform(0.0, 0.5), c = rng.uniform(0.0, 1.0);
    b.cost = CostFunction::make_linear(slope);
    if (opt.slack_bus && i == 0) {
      b.kind = BusKind::slack;
      b.v_min = b.v_max;
      continue;
    }
    if (p0[i] < 0.0) {
      b.p_min = p0[i] * (1.0 + a);
      b.p_max = p0[i] * (1.0 - 0.5 * a);
    } else {
      b.p_min = 0.0;
      b.p_max = p0[i] * (1.0 + c) + 0.01;
    }
  }
  return Network(std::move(buses), std::move(lines),
                 "random_" + std::string(to_string(opt.topology)) + "_n" + std::to_string(n) + "_s" +
                     std::to_string(opt.seed));
}

/// Number of independent cycles: lines - buses + components.
inline int cycle_count(const Network& net)
{
  return net.line_count() - net.bus_count() + detail::count_components(net);
}

}  // namespace dcflow

#endif  // DCFLOW_RANDOM_CASES_HPP_
