#include "cvrpdiff/dataset.hpp"

#include <cstdio>
#include <json.hpp>

#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/io.hpp"

namespace cvrpdiff {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_point(std::string& out, const Point& p) {
  out += '[';
  append_double(out, p.x);
  out += ',';
  append_double(out, p.y);
  out += ']';
}

Point point_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InputError("coordinate must be a [x, y] number pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string to_json_line(const Record& record) {
  const auto& inst = record.instance;
  std::string out = "{\"depot\":";
  append_point(out, inst.depot);
  out += ",\"coords\":[";
  for (std::size_t i = 0; i < inst.coords.size(); ++i) {
    if (i) out += ',';
    append_point(out, inst.coords[i]);
  }
  out += "],\"demands\":[";
  for (std::size_t i = 0; i < inst.demands.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(inst.demands[i]);
  }
  out += "],\"capacity\":" + std::to_string(inst.capacity);
  if (record.routes) {
    out += ",\"routes\":[";
    for (std::size_t r = 0; r < record.routes->routes.size(); ++r) {
      if (r) out += ',';
      out += '[';
      const auto& route = record.routes->routes[r];
      for (std::size_t k = 0; k < route.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(route[k]);
      }
      out += ']';
    }
    out += ']';
  }
  out += '}';
  return out;
}

Record record_from_json(std::string_view line, std::size_t line_no) {
  try {
    const auto j = nlohmann::json::parse(line);
    Record rec;
    rec.instance.depot = point_from(j.at("depot"));
    for (const auto& c : j.at("coords")) rec.instance.coords.push_back(point_from(c));
    for (const auto& d : j.at("demands")) rec.instance.demands.push_back(d.get<int>());
    rec.instance.capacity = j.at("capacity").get<int>();
    if (j.contains("routes") && !j["routes"].is_null()) {
      CvrpSolution sol;
      for (const auto& r : j["routes"]) sol.routes.push_back(r.get<std::vector<int>>());
      rec.routes = std::move(sol);
    }
    validate_instance(rec.instance);
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid dataset record: ") + e.what(), line_no);
  } catch (const ParseError&) {
    throw;
  } catch (const InputError& e) {
    throw ParseError(e.what(), line_no);
  }
}

std::string to_jsonl(const std::vector<Record>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json_line(r);
    out += '\n';
  }
  return out;
}

std::vector<Record> parse_jsonl(std::string_view text) {
  std::vector<Record> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    out.push_back(record_from_json(line, line_no));
  }
  return out;
}

std::vector<Record> read_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_file(path)); }

void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records) {
  write_file_atomic(path, to_jsonl(records));
}

}  // namespace cvrpdiff
