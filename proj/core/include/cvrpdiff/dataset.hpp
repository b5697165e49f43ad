#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cvrpdiff/instance.hpp"

namespace cvrpdiff {

// One JSONL line:
//   {"depot":[x,y],"coords":[[x,y],...],"demands":[d,...],"capacity":Q,"routes":[[i,...],...]}
// `routes` is optional and carries a label solution.
struct Record {
  CvrpInstance instance;
  std::optional<CvrpSolution> routes;
  friend bool operator==(const Record&, const Record&) = default;
};

std::string to_json_line(const Record& record);
Record record_from_json(std::string_view line, std::size_t line_no = 0);

std::string to_jsonl(const std::vector<Record>& records);
std::vector<Record> parse_jsonl(std::string_view text);

std::vector<Record> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records);

}  // namespace cvrpdiff
