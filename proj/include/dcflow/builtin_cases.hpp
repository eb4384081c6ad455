#ifndef DCFLOW_BUILTIN_CASES_HPP_
#define DCFLOW_BUILTIN_CASES_HPP_

#include <optional>
#include <string>
#include <vector>

#include "dcflow/caseio.hpp"
#include "dcflow/error.hpp"
#include "dcflow/netmodel.hpp"

namespace dcflow
{

namespace detail
{

struct BranchRecord
{
  int from;  // 1-based bus number
  int to;
  double r;  // p.u. on the case base
  bool tie = false;
};

// Three-feeder 16-bus distribution system. Feeders are buses 1-3; the last
// three branches are the tie lines.
inline const std::vector<BranchRecord>& dc16_branches()
{
  static const std::vector<BranchRecord> b = {
      {1, 4, 0.075},  {4, 5, 0.08},   {4, 6, 0.09},   {6, 7, 0.04},  {2, 8, 0.11},
      {8, 9, 0.08},   {8, 10, 0.11},  {9, 11, 0.11},  {9, 12, 0.08}, {3, 13, 0.11},
      {13, 14, 0.09}, {13, 15, 0.08}, {15, 16, 0.04}, {5, 11, 0.04, true},
      {10, 14, 0.04, true}, {7, 16, 0.09, true},
  };
  return b;
}

inline constexpr const char* kDc16Provenance =
    "Reconstructed 16-bus three-feeder system. Branch resistances are the widely circulated "
    "values for this feeder layout, read as p.u. on a 10 MVA base. Loads, the 5 MW DG ratings "
    "and the net 1 MW export at bus 9 follow the standard injection data for this layout. The feeder heads "
    "are tied by a 1e-3 p.u. substation bus-bar so every mode is one connected network. Line "
    "data is not printed with the results, so objectives are ordering targets only.";

inline Network dc16(bool grid_connected, bool mesh, const std::string& name)
{
  constexpr double kBusBarResistance = 1e-3;
  std::vector<Bus> buses(16);
  for (int i = 0; i < 16; ++i) buses[i].id = i + 1;
  auto fixed = [&](int bus, double p) {
    buses[bus - 1].p_min = p;
    buses[bus - 1].p_max = p;
  };
  for (int f : {1, 2, 3}) {
    if (grid_connected) {
      buses[f - 1].kind = BusKind::slack;
      buses[f - 1].v_min = buses[f - 1].v_max;
    } else {
      fixed(f, 0.0);
    }
  }
  fixed(4, -0.2);
  fixed(7, -0.15);
  fixed(8, -0.4);
  fixed(11, -0.06);
  fixed(13, -0.1);
  fixed(14, -0.1);
  fixed(16, -0.21);
  for (int g : {5, 6, 10, 12, 15}) {
    buses[g - 1].p_min = 0.0;
    buses[g - 1].p_max = 0.5;
  }
  // 5 MW DG against a 4 MW local load
  buses[8].p_min = -0.4;
  buses[8].p_max = 0.1;

  std::vector<Line> lines;
  for (const auto& br : dc16_branches()) {
    if (br.tie && !mesh) continue;
    lines.push_back({br.from - 1, br.to - 1, 1.0 / br.r, std::nullopt});
  }
  // Substation bus-bar between the feeder heads keeps the graph connected.
  lines.push_back({0, 1, 1.0 / kBusBarResistance, std::nullopt});
  lines.push_back({1, 2, 1.0 / kBusBarResistance, std::nullopt});
  return Network(std::move(buses), std::move(lines), name);
}

// 33-bus radial feeder: branch resistance in ohms, load at the receiving
// bus in kW.
struct RadialRecord
{
  int from;
  int to;
  double r_ohm;
  double load_kw;
};

inline const std::vector<RadialRecord>& tree33_branches()
{
  static const std::vector<RadialRecord> b = {
      {1, 2, 0.0922, 100},   {2, 3, 0.4930, 90},    {3, 4, 0.3660, 120},   {4, 5, 0.3811, 60},
      {5, 6, 0.8190, 60},    {6, 7, 0.1872, 200},   {7, 8, 0.7114, 200},   {8, 9, 1.0300, 60},
      {9, 10, 1.0440, 60},   {10, 11, 0.1966, 45},  {11, 12, 0.3744, 60},  {12, 13, 1.4680, 60},
      {13, 14, 0.5416, 120}, {14, 15, 0.5910, 60},  {15, 16, 0.7463, 60},  {16, 17, 1.2890, 60},
      {17, 18, 0.7320, 90},  {2, 19, 0.1640, 90},   {19, 20, 1.5042, 90},  {20, 21, 0.4095, 90},
      {21, 22, 0.7089, 90},  {3, 23, 0.4512, 90},   {23, 24, 0.8980, 420}, {24, 25, 0.8960, 420},
      {6, 26, 0.2030, 60},   {26, 27, 0.2842, 60},  {27, 28, 1.0590, 60},  {28, 29, 0.8042, 120},
      {29, 30, 0.5075, 200}, {30, 31, 0.9744, 150}, {31, 32, 0.3105, 210}, {32, 33, 0.3410, 60},
  };
  return b;
}

inline constexpr const char* kTree33Provenance =
    "33-bus radial feeder, 12.66 kV, power base 1 MVA. Resistances from the standard data set, "
    "scaled by 0.1 for DC operation; reactances and reactive loads dropped. Bus 1 is the "
    "substation (slack at 1.05 p.u.); 50 kW DGs at buses 5, 10, ..., 30 counted with the "
    "substation as bus 1.";

inline Network tree33()
{
  constexpr double kBaseKv = 12.66, kBaseMva = 1.0, kResistanceScale = 0.1;
  const double z_base = kBaseKv * kBaseKv / kBaseMva;
  std::vector<Bus> buses(33);
  for (int i = 0; i < 33; ++i) buses[i].id = i + 1;
  buses[0].kind = BusKind::slack;
  buses[0].v_min = buses[0].v_max;
  std::vector<Line> lines;
  for (const auto& br : tree33_branches()) {
    double p = -br.load_kw / 1000.0 / kBaseMva;
    buses[br.to - 1].p_min = p;
    buses[br.to - 1].p_max = p;
    lines.push_back({br.from - 1, br.to - 1, z_base / (br.r_ohm * kResistanceScale), std::nullopt});
  }
  for (int g = 5; g <= 30; g += 5) *buses[g - 1].p_max += 0.05;
  return Network(std::move(buses), std::move(lines), "tree33");
}

// Five-bus mesh with current limits; linear costs. With limits_recovery the
// limit on line 0-3 binds together with the lower bound at bus 3 and the
// relaxation leaves a rank gap on that line.
inline Network limits_case(bool tight, const std::string& name)
{
  const double pmin[] = {0.0, -0.9450540072763205, 0.0, 0.0, -0.5041105530082288};
  const double pmax[] = {1.6924216709228128, 0.16307423029787782, 1.5569474750792929, 0.0, 0.5456626624842467};
  const double cost[] = {0.2838577033859467, 2.19706409226352, 0.29631245731387623, 0.5143652492822995,
                         2.4789842514506013};
  std::vector<Bus> buses(5);
  for (int i = 0; i < 5; ++i) {
    buses[i].id = i;
    buses[i].p_min = pmin[i];
    buses[i].p_max = pmax[i];
    buses[i].cost = CostFunction::make_linear(cost[i]);
  }
  std::vector<Line> lines = {
      {0, 1, 24.127597527565324, std::nullopt},
      {0, 2, 18.880176612105217, std::nullopt},
      {1, 3, 13.939759334582662, 0.11242144281683687},
      {0, 4, 32.12104651279893, 0.43758330328022005},
      {0, 3, 14.30315806913907, 0.1315830840595985},
  };
  if (!tight)
    for (auto& ln : lines)
      if (ln.i_max) *ln.i_max *= 10.0;
  return Network(std::move(buses), std::move(lines), name);
}

}  // namespace detail

inline std::vector<std::string> builtin_case_names()
{
  return {"dc16_gt", "dc16_gm", "dc16_st", "dc16_sm", "tree33", "limits_slack", "limits_recovery"};
}

inline ParsedCase builtin_case_document(const std::string& name)
{
  ParsedCase out;
  if (name == "dc16_gt" || name == "dc16_gm" || name == "dc16_st" || name == "dc16_sm") {
    out.network = detail::dc16(name[5] == 'g', name[6] == 'm', name);
    out.meta.base_mva = 10.0;
    out.meta.provenance = detail::kDc16Provenance;
    out.meta.adapt_applied = true;
  } else if (name == "tree33") {
    out.network = detail::tree33();
    out.meta.provenance = detail::kTree33Provenance;
    out.meta.adapt_applied = true;
  } else if (name == "limits_slack" || name == "limits_recovery") {
    out.network = detail::limits_case(name == "limits_recovery", name);
    out.meta.provenance = "Synthetic five-bus mesh with current limits on three lines.";
  } else {
    throw Error(ErrorCode::unknown_case, "no built-in case named '" + name + "'");
  }
  out.warnings = validate_network(out.network);
  return out;
}

inline Network builtin_case(const std::string& name) { return builtin_case_document(name).network; }

}  // namespace dcflow

#endif  // DCFLOW_BUILTIN_CASES_HPP_
