#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "cvrpdiff/nn/params.hpp"

namespace cvrpdiff {

// Named parameter sections plus a configuration snapshot. On disk: the
// 8-byte magic "CVDARCH1", a little-endian u64 manifest length, a JSON
// manifest (config text, per-section parameter names, shapes, trainable
// flags and element offsets) and the values as little-endian f64.
class ParameterArchive {
 public:
  std::string config_text;

  void put(const std::string& section, const nn::ParamSet& params);
  bool has(std::string_view section) const;
  // Throws ModelError naming the section when it is absent.
  const nn::ParamSet& section(std::string_view section) const;
  // Copies the named section into `params` by name and shape.
  void load_into(std::string_view section, nn::ParamSet& params) const;

  std::string serialize() const;
  static ParameterArchive deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static ParameterArchive load(const std::filesystem::path& path);

 private:
  std::map<std::string, nn::ParamSet, std::less<>> sections_;
};

}  // namespace cvrpdiff
