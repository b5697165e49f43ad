#include "cvrpdiff/archive.hpp"

#include <bit>
#include <cstring>
#include <json.hpp>

#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/io.hpp"

namespace cvrpdiff {

namespace {

constexpr std::string_view kMagic = "CVDARCH1";

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xffu);
}

std::uint64_t read_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

}  // namespace

void ParameterArchive::put(const std::string& section, const nn::ParamSet& params) { sections_[section] = params; }

bool ParameterArchive::has(std::string_view section) const { return sections_.find(section) != sections_.end(); }

const nn::ParamSet& ParameterArchive::section(std::string_view section) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) throw ModelError("archive has no section '" + std::string(section) + "'");
  return it->second;
}

void ParameterArchive::load_into(std::string_view name, nn::ParamSet& params) const {
  const auto& src = section(name);
  try {
    params.assign_from(src);
  } catch (const ModelError& e) {
    throw ModelError("section '" + std::string(name) + "': " + e.what());
  }
}

std::string ParameterArchive::serialize() const {
  nlohmann::ordered_json manifest;
  manifest["config"] = config_text;
  auto& secs = manifest["sections"] = nlohmann::ordered_json::object();
  std::uint64_t offset = 0;
  std::string data;
  for (const auto& [name, params] : sections_) {
    auto& list = secs[name] = nlohmann::ordered_json::array();
    for (const auto& p : params) {
      list.push_back({{"name", p.name},
                      {"shape", {p.value.rows(), p.value.cols()}},
                      {"trainable", p.trainable},
                      {"offset", offset}});
      const auto bytes = static_cast<std::size_t>(p.value.size()) * sizeof(double);
      data.append(reinterpret_cast<const char*>(p.value.data()), bytes);
      offset += static_cast<std::uint64_t>(p.value.size());
    }
  }
  const std::string text = manifest.dump();
  std::string out(kMagic);
  append_u64(out, text.size());
  out += text;
  out += data;
  return out;
}

ParameterArchive ParameterArchive::deserialize(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic)
    throw ModelError("not a parameter archive (bad magic)");
  const auto len = read_u64(bytes.substr(kMagic.size(), 8));
  const auto header = kMagic.size() + 8;
  if (len > bytes.size() - header) throw ModelError("truncated archive manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(header, len));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("corrupt archive manifest: ") + e.what());
  }
  const auto data = bytes.substr(header + len);
  const auto values = data.size() / sizeof(double);
  if (data.size() % sizeof(double) != 0) throw ModelError("archive data is not a whole number of f64 values");

  ParameterArchive archive;
  try {
    archive.config_text = manifest.at("config").get<std::string>();
    for (const auto& [name, list] : manifest.at("sections").items()) {
      nn::ParamSet params;
      for (const auto& entry : list) {
        const auto rows = entry.at("shape").at(0).get<std::int64_t>();
        const auto cols = entry.at("shape").at(1).get<std::int64_t>();
        const auto off = entry.at("offset").get<std::uint64_t>();
        if (rows < 0 || cols < 0 || off > values || static_cast<std::uint64_t>(rows * cols) > values - off)
          throw ModelError("archive entry '" + entry.at("name").get<std::string>() + "' lies outside the data");
        Matrix m(rows, cols);
        std::memcpy(m.data(), data.data() + off * sizeof(double), static_cast<std::size_t>(rows * cols) * sizeof(double));
        params.add(entry.at("name").get<std::string>(), std::move(m), entry.at("trainable").get<bool>());
      }
      archive.sections_.emplace(name, std::move(params));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("corrupt archive manifest: ") + e.what());
  }
  return archive;
}

void ParameterArchive::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

ParameterArchive ParameterArchive::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

}  // namespace cvrpdiff
