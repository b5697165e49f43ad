#include "cvrpdiff/cvrplib.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const auto b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

double to_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError("non-numeric entry '" + std::string(tok) + "'", line);
  return v;
}

long to_long(std::string_view tok, std::size_t line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError("non-integer entry '" + std::string(tok) + "'", line);
  return v;
}

}  // namespace

CvrplibInstance parse_cvrplib(std::string_view text) {
  enum class Section { header, coords, demands, depot };
  Section section = Section::header;
  CvrplibInstance out;
  long dimension = -1;
  long capacity = -1;
  std::map<long, Point> coords;
  std::map<long, long> demands;
  std::vector<long> depots;
  bool saw_coords = false, saw_demands = false, saw_depot = false;
  std::size_t depot_section_line = 0;

  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto raw_line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const auto line = trim(raw_line);
    if (line.empty()) continue;
    if (line == "EOF") break;

    const auto colon = line.find(':');
    const auto first = tokens(line).front();
    const bool is_keyword = !first.empty() && (std::isalpha(static_cast<unsigned char>(first[0])) || first[0] == '_');
    if (is_keyword) {
      const auto key = trim(colon == std::string_view::npos ? first : line.substr(0, colon));
      const auto value = colon == std::string_view::npos ? std::string_view{} : trim(line.substr(colon + 1));
      if (key == "NODE_COORD_SECTION") {
        section = Section::coords;
        saw_coords = true;
      } else if (key == "DEMAND_SECTION") {
        section = Section::demands;
        saw_demands = true;
      } else if (key == "DEPOT_SECTION") {
        section = Section::depot;
        saw_depot = true;
        depot_section_line = line_no;
      } else {
        section = Section::header;
        if (key == "NAME") out.name = std::string(value);
        else if (key == "DIMENSION") dimension = to_long(value, line_no);
        else if (key == "CAPACITY") capacity = to_long(value, line_no);
        else if (key == "EDGE_WEIGHT_TYPE" && value != "EUC_2D")
          throw ParseError("unsupported EDGE_WEIGHT_TYPE '" + std::string(value) + "'", line_no);
        // TYPE, COMMENT and unknown header keys are ignored.
      }
      continue;
    }

    const auto tok = tokens(line);
    switch (section) {
      case Section::header: throw ParseError("data outside of any section", line_no);
      case Section::coords: {
        if (tok.size() != 3) throw ParseError("expected '<id> <x> <y>'", line_no);
        coords[to_long(tok[0], line_no)] = {to_double(tok[1], line_no), to_double(tok[2], line_no)};
        break;
      }
      case Section::demands: {
        if (tok.size() != 2) throw ParseError("expected '<id> <demand>'", line_no);
        demands[to_long(tok[0], line_no)] = to_long(tok[1], line_no);
        break;
      }
      case Section::depot: {
        for (auto t : tok) {
          const long id = to_long(t, line_no);
          if (id == -1) {
            section = Section::header;
            break;
          }
          depots.push_back(id);
        }
        break;
      }
    }
  }

  if (dimension < 2) throw ParseError("missing or invalid DIMENSION", 0);
  if (capacity < 1) throw ParseError("missing or invalid CAPACITY", 0);
  if (!saw_coords) throw ParseError("missing NODE_COORD_SECTION", 0);
  if (!saw_demands) throw ParseError("missing DEMAND_SECTION", 0);
  if (static_cast<long>(coords.size()) != dimension)
    throw ParseError("NODE_COORD_SECTION has " + std::to_string(coords.size()) + " entries, DIMENSION is " +
                         std::to_string(dimension),
                     0);
  if (static_cast<long>(demands.size()) != dimension)
    throw ParseError("DEMAND_SECTION has " + std::to_string(demands.size()) + " entries, DIMENSION is " +
                         std::to_string(dimension),
                     0);
  long depot = 1;
  if (saw_depot) {
    if (depots.size() != 1) throw ParseError("exactly one depot is supported", depot_section_line);
    depot = depots.front();
  }
  if (!coords.count(depot)) throw ParseError("depot id " + std::to_string(depot) + " has no coordinate", 0);
  if (demands.at(depot) != 0)
    throw ParseError("depot demand must be 0, got " + std::to_string(demands.at(depot)), depot_section_line);

  out.capacity = static_cast<int>(capacity);
  out.raw.push_back(coords.at(depot));
  for (const auto& [id, p] : coords) {
    if (id == depot) continue;
    if (!demands.count(id)) throw ParseError("node " + std::to_string(id) + " has no demand", 0);
    out.raw.push_back(p);
    out.demands.push_back(static_cast<int>(demands.at(id)));
  }

  double minx = out.raw[0].x, maxx = minx, miny = out.raw[0].y, maxy = miny;
  for (const auto& p : out.raw) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  out.offset = {minx, miny};
  out.scale = std::max(maxx - minx, maxy - miny);
  if (!(out.scale > 0.0)) out.scale = 1.0;

  auto& inst = out.instance;
  auto rescale = [&](const Point& p) { return Point{(p.x - minx) / out.scale, (p.y - miny) / out.scale}; };
  inst.depot = rescale(out.raw[0]);
  for (std::size_t i = 1; i < out.raw.size(); ++i) inst.coords.push_back(rescale(out.raw[i]));
  inst.demands = out.demands;
  inst.capacity = out.capacity;
  validate_instance(inst, true);
  return out;
}

std::optional<double> parse_solution_cost(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto t = tokens(line);
    if (t.size() >= 2 && (t[0] == "Cost" || t[0] == "cost" || t[0] == "COST")) return to_double(t[1], 0);
  }
  return std::nullopt;
}

std::string serialize_cvrplib(const CvrplibInstance& parsed) {
  std::ostringstream os;
  char buf[96];
  os << "NAME : " << parsed.name << "\n";
  os << "TYPE : CVRP\n";
  os << "DIMENSION : " << parsed.raw.size() << "\n";
  os << "EDGE_WEIGHT_TYPE : EUC_2D\n";
  os << "CAPACITY : " << parsed.capacity << "\n";
  os << "NODE_COORD_SECTION\n";
  for (std::size_t i = 0; i < parsed.raw.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i + 1, parsed.raw[i].x, parsed.raw[i].y);
    os << buf;
  }
  os << "DEMAND_SECTION\n";
  os << "1 0\n";
  for (std::size_t i = 0; i < parsed.demands.size(); ++i) os << i + 2 << ' ' << parsed.demands[i] << "\n";
  os << "DEPOT_SECTION\n1\n-1\nEOF\n";
  return os.str();
}

std::string serialize_cvrplib(const CvrpInstance& instance, const std::string& name) {
  CvrplibInstance p;
  p.name = name;
  p.raw.push_back(instance.depot);
  p.raw.insert(p.raw.end(), instance.coords.begin(), instance.coords.end());
  p.demands = instance.demands;
  p.capacity = instance.capacity;
  return serialize_cvrplib(p);
}

}  // namespace cvrpdiff
