#ifndef DCFLOW_CASEIO_HPP_
#define DCFLOW_CASEIO_HPP_

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcflow/error.hpp"
#include "dcflow/netmodel.hpp"

namespace dcflow
{

inline constexpr const char* kCaseSchema = "dcflow-case/1";

/// Case data around a network that the network itself does not keep.
struct CaseMeta
{
  double base_mva = 1.0;
  std::string provenance;
  bool adapt_applied = false;
};

struct ParsedCase
{
  Network network;
  CaseMeta meta;
  std::vector<Error> warnings;
};

namespace detail
{

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& field, const std::string& what)
{
  throw Error(ErrorCode::schema_error, field + ": " + what);
}

inline double number_field(const json& obj, const char* key, const std::string& where)
{
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where + "." + key, "required field missing");
  if (!it->is_number()) schema_error(where + "." + key, "expected a number");
  return it->get<double>();
}

inline Limit optional_number(const json& obj, const char* key, const std::string& where)
{
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) schema_error(where + "." + key, "expected a number or null");
  return it->get<double>();
}

inline CostFunction parse_cost(const json& obj, const std::string& where)
{
  auto it = obj.find("cost");
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_object()) schema_error(where + ".cost", "expected an object");
  const json& c = *it;
  std::string kind = c.value("kind", std::string("linear"));
  double lin = c.contains("linear") ? number_field(c, "linear", where + ".cost") : 1.0;
  double cst = c.contains("constant") ? number_field(c, "constant", where + ".cost") : 0.0;
  if (kind == "linear") return CostFunction::make_linear(lin, cst);
  if (kind == "quadratic") return CostFunction::make_quadratic(number_field(c, "quadratic", where + ".cost"), lin, cst);
  schema_error(where + ".cost.kind", "expected \"linear\" or \"quadratic\"");
}

inline json limit_json(const Limit& l) { return l ? json(*l) : json(nullptr); }

}  // namespace detail

/// Parses a native case document. Injection bounds given in MW (units
/// "mw") are divided by base_mva; everything else is per-unit already.
/// Lines carry either a resistance r or a conductance y.
inline ParsedCase parse_case_document(const std::string& text)
{
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::syntax_error, e.what(), static_cast<long>(e.byte));
  }
  if (!doc.is_object()) detail::schema_error("$", "expected an object");
  if (doc.value("schema", std::string()) != kCaseSchema)
    detail::schema_error("schema", std::string("expected \"") + kCaseSchema + "\"");

  ParsedCase out;
  out.meta.base_mva = doc.contains("base_mva") ? detail::number_field(doc, "base_mva", "$") : 1.0;
  if (!(out.meta.base_mva > 0.0)) detail::schema_error("base_mva", "must be positive");
  out.meta.provenance = doc.value("provenance", std::string());
  out.meta.adapt_applied = doc.value("adapt_applied", false);
  std::string units = doc.value("units", std::string("pu"));
  if (units != "pu" && units != "mw") detail::schema_error("units", "expected \"pu\" or \"mw\"");
  const double pscale = units == "mw" ? 1.0 / out.meta.base_mva : 1.0;

  if (!doc.contains("buses") || !doc["buses"].is_array()) detail::schema_error("buses", "required array missing");
  if (!doc.contains("lines") || !doc["lines"].is_array()) detail::schema_error("lines", "required array missing");

  std::vector<Bus> buses;
  std::map<long, int> position;
  for (std::size_t i = 0; i < doc["buses"].size(); ++i) {
    const json& jb = doc["buses"][i];
    std::string where = "buses[" + std::to_string(i) + "]";
    if (!jb.is_object()) detail::schema_error(where, "expected an object");
    Bus b;
    if (!jb.contains("id") || !jb["id"].is_number_integer()) detail::schema_error(where + ".id", "required integer");
    b.id = jb["id"].get<int>();
    std::string kind = jb.value("kind", std::string("standalone"));
    if (kind == "slack")
      b.kind = BusKind::slack;
    else if (kind != "standalone")
      detail::schema_error(where + ".kind", "expected \"standalone\" or \"slack\"");
    b.v_min = detail::number_field(jb, "v_min", where);
    b.v_max = detail::number_field(jb, "v_max", where);
    b.p_min = detail::optional_number(jb, "p_min", where);
    b.p_max = detail::optional_number(jb, "p_max", where);
    if (b.p_min) *b.p_min *= pscale;
    if (b.p_max) *b.p_max *= pscale;
    b.cost = detail::parse_cost(jb, where);
    position.emplace(b.id, static_cast<int>(i));
    buses.push_back(std::move(b));
  }

  std::vector<Line> lines;
  for (std::size_t k = 0; k < doc["lines"].size(); ++k) {
    const json& jl = doc["lines"][k];
    std::string where = "lines[" + std::to_string(k) + "]";
    if (!jl.is_object()) detail::schema_error(where, "expected an object");
    for (const char* key : {"i", "j"})
      if (!jl.contains(key) || !jl[key].is_number_integer()) detail::schema_error(where + "." + key, "required integer");
    Line ln;
    auto find = [&](long id) {
      auto it = position.find(id);
      if (it == position.end()) throw Error(ErrorCode::bad_line, "line references unknown bus " + std::to_string(id), static_cast<long>(k));
      return it->second;
    };
    ln.from = find(jl["i"].get<long>());
    ln.to = find(jl["j"].get<long>());
    const bool has_r = jl.contains("r"), has_y = jl.contains("y");
    if (has_r == has_y) detail::schema_error(where, "exactly one of r and y is required");
    if (has_r) {
      double r = detail::number_field(jl, "r", where);
      if (!(r > 0.0)) throw Error(ErrorCode::nonpositive_conductance, "resistance must be positive", static_cast<long>(k));
      ln.y = 1.0 / r;
    } else {
      ln.y = detail::number_field(jl, "y", where);
    }
    ln.i_max = detail::optional_number(jl, "i_max", where);
    lines.push_back(ln);
  }
  out.network = Network(std::move(buses), std::move(lines), doc.value("name", std::string()));
  out.warnings = validate_network(out.network);
  return out;
}

inline Network parse_case_json(const std::string& text) { return parse_case_document(text).network; }

/// Serializes with conductances and per-unit powers so a re-parse yields
/// an identical network.
inline std::string write_case_json(const Network& net, const CaseMeta& meta = {})
{
  using detail::json;
  json doc = json::object();
  doc["schema"] = kCaseSchema;
  doc["name"] = net.name();
  doc["base_mva"] = meta.base_mva;
  doc["units"] = "pu";
  if (!meta.provenance.empty()) doc["provenance"] = meta.provenance;
  if (meta.adapt_applied) doc["adapt_applied"] = true;
  json buses = json::array();
  for (const Bus& b : net.buses()) {
    json jb = {{"id", b.id},
               {"kind", b.is_slack() ? "slack" : "standalone"},
               {"p_min", detail::limit_json(b.p_min)},
               {"p_max", detail::limit_json(b.p_max)},
               {"v_min", b.v_min},
               {"v_max", b.v_max}};
    json c = {{"kind", b.cost.kind == CostKind::linear ? "linear" : "quadratic"}, {"linear", b.cost.linear}};
    if (b.cost.kind == CostKind::quadratic) c["quadratic"] = b.cost.quadratic;
    if (b.cost.constant != 0.0) c["constant"] = b.cost.constant;
    jb["cost"] = c;
    buses.push_back(jb);
  }
  json lines = json::array();
  for (const Line& ln : net.lines()) {
    json jl = {{"i", net.bus(ln.from).id}, {"j", net.bus(ln.to).id}, {"y", ln.y}};
    if (ln.i_max) jl["i_max"] = *ln.i_max;
    lines.push_back(jl);
  }
  doc["buses"] = buses;
  doc["lines"] = lines;
  return doc.dump(2) + "\n";
}

/// Adjustments applied to MATPOWER data to mimic DC microgrid conditions.
struct AdaptRules
{
  double resistance_scale = 0.1;
  double zero_r_substitute = 1e-3;
  double v_min = 0.95;
  double v_max = 1.05;
  bool ref_bus_as_slack = false;  // reference bus held at v_max with free injection
};

namespace detail
{

struct MatpowerTables
{
  double base_mva = 100.0;
  std::map<std::string, std::vector<std::vector<double>>> matrices;
};

inline std::string strip_comment(const std::string& line)
{
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\'') in_quote = !in_quote;
    if (line[i] == '%' && !in_quote) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s)
{
  auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_row(const std::string& row, int line_no)
{
  std::vector<double> vals;
  std::string tok;
  std::istringstream is(row);
  while (is >> tok) {
    while (!tok.empty() && (tok.back() == ';' || tok.back() == ',')) tok.pop_back();
    if (tok.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw Error(ErrorCode::syntax_error, "bad number '" + tok + "'", line_no);
    vals.push_back(v);
  }
  return vals;
}

inline MatpowerTables read_matpower(const std::string& text)
{
  MatpowerTables t;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::string open;  // matrix currently being read
  std::size_t width = 0;
  // Returns true when the text closes the open matrix.
  auto consume = [&](std::string line) {
    bool closes = false;
    if (auto pos = line.find(']'); pos != std::string::npos) {
      std::string tail = trim(line.substr(pos + 1));
      if (!tail.empty() && tail != ";") throw Error(ErrorCode::syntax_error, "unexpected text after ']'", line_no);
      line = line.substr(0, pos);
      closes = true;
    }
    std::istringstream rows(line);
    std::string row;
    while (std::getline(rows, row, ';')) {
      if (trim(row).empty()) continue;
      auto vals = parse_row(row, line_no);
      if (width == 0) width = vals.size();
      if (vals.size() != width)
        throw Error(ErrorCode::syntax_error,
                    "row of mpc." + open + " has " + std::to_string(vals.size()) + " columns, expected " +
                        std::to_string(width),
                    line_no);
      t.matrices[open].push_back(std::move(vals));
    }
    if (closes) open.clear();
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (!open.empty()) {
      consume(line);
      continue;
    }
    if (line.rfind("function", 0) == 0) continue;
    if (line.rfind("mpc.", 0) != 0) throw Error(ErrorCode::syntax_error, "unrecognized statement", line_no);
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::syntax_error, "expected '='", line_no);
    std::string name = trim(line.substr(4, eq - 4));
    std::string rhs = trim(line.substr(eq + 1));
    if (name == "version") continue;
    if (name == "baseMVA") {
      while (!rhs.empty() && rhs.back() == ';') rhs.pop_back();
      auto vals = parse_row(rhs, line_no);
      if (vals.size() != 1) throw Error(ErrorCode::syntax_error, "baseMVA expects one number", line_no);
      t.base_mva = vals[0];
      continue;
    }
    if (name != "bus" && name != "gen" && name != "branch" && name != "gencost")
      throw Error(ErrorCode::unsupported_feature, "mpc." + name, line_no);
    if (rhs.empty() || rhs[0] != '[') throw Error(ErrorCode::syntax_error, "expected '[' after mpc." + name, line_no);
    open = name;
    width = 0;
    t.matrices[name];
    consume(rhs.substr(1));
  }
  if (!open.empty()) throw Error(ErrorCode::syntax_error, "unterminated matrix mpc." + open, line_no);
  return t;
}

}  // namespace detail

/// Reads the bus, gen and branch matrices of a MATPOWER case. Reactances
/// and costs are ignored; resistances are scaled (zero ones substituted)
/// and inverted to conductances; generator limits net of load become the
/// injection bounds. Parallel branches are merged by adding conductances.
inline ParsedCase parse_matpower_document(const std::string& text, const AdaptRules& adapt = {})
{
  auto t = detail::read_matpower(text);
  for (const char* need : {"bus", "branch"})
    if (!t.matrices.count(need)) throw Error(ErrorCode::syntax_error, std::string("missing mpc.") + need);
  auto require_width = [](const std::vector<std::vector<double>>& m, std::size_t w, const char* name) {
    if (!m.empty() && m.front().size() < w)
      throw Error(ErrorCode::syntax_error, std::string("mpc.") + name + " needs at least " + std::to_string(w) + " columns");
  };
  const auto& bus_m = t.matrices["bus"];
  const auto& gen_m = t.matrices["gen"];
  const auto& br_m = t.matrices["branch"];
  require_width(bus_m, 13, "bus");
  require_width(gen_m, 10, "gen");
  require_width(br_m, 11, "branch");

  std::map<long, int> position;
  std::vector<double> load, gmin, gmax;
  std::vector<bool> is_ref;
  std::vector<Bus> buses;
  for (const auto& row : bus_m) {
    Bus b;
    b.id = static_cast<int>(row[0]);
    b.v_min = adapt.v_min;
    b.v_max = adapt.v_max;
    position.emplace(b.id, static_cast<int>(buses.size()));
    buses.push_back(b);
    load.push_back(row[2]);
    gmin.push_back(0.0);
    gmax.push_back(0.0);
    is_ref.push_back(static_cast<int>(row[1]) == 3);
  }
  for (const auto& row : gen_m) {
    if (row[7] <= 0.0) continue;  // out of service
    auto it = position.find(static_cast<long>(row[0]));
    if (it == position.end()) throw Error(ErrorCode::syntax_error, "generator at unknown bus " + std::to_string(row[0]));
    gmax[it->second] += row[8];
    gmin[it->second] += row[9];
  }
  for (std::size_t i = 0; i < buses.size(); ++i) {
    Bus& b = buses[i];
    if (adapt.ref_bus_as_slack && is_ref[i]) {
      b.kind = BusKind::slack;
      b.v_min = b.v_max;
      continue;
    }
    b.p_min = (gmin[i] - load[i]) / t.base_mva;
    b.p_max = (gmax[i] - load[i]) / t.base_mva;
  }

  std::vector<Line> lines;
  std::map<std::pair<int, int>, int> pair_index;
  for (std::size_t k = 0; k < br_m.size(); ++k) {
    const auto& row = br_m[k];
    if (row[10] <= 0.0) continue;
    auto fi = position.find(static_cast<long>(row[0]));
    auto ti = position.find(static_cast<long>(row[1]));
    if (fi == position.end() || ti == position.end())
      throw Error(ErrorCode::bad_line, "branch references unknown bus", static_cast<long>(k));
    double r = row[2] == 0.0 ? adapt.zero_r_substitute : row[2] * adapt.resistance_scale;
    if (!(r > 0.0)) throw Error(ErrorCode::nonpositive_conductance, "branch resistance must be positive", static_cast<long>(k));
    std::pair<int, int> key = std::minmax(fi->second, ti->second);
    if (auto it = pair_index.find(key); it != pair_index.end()) {
      lines[it->second].y += 1.0 / r;
      continue;
    }
    pair_index.emplace(key, static_cast<int>(lines.size()));
    lines.push_back({fi->second, ti->second, 1.0 / r, std::nullopt});
  }

  ParsedCase out;
  out.network = Network(std::move(buses), std::move(lines));
  out.meta.base_mva = t.base_mva;
  out.meta.adapt_applied = true;
  out.warnings = validate_network(out.network);
  return out;
}

inline Network parse_matpower_subset(const std::string& text, const AdaptRules& adapt = {})
{
  return parse_matpower_document(text, adapt).network;
}

inline std::string read_text_file(const std::string& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace dcflow

#endif  // DCFLOW_CASEIO_HPP_
