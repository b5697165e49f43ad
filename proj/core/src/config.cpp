#include "cvrpdiff/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>

#include "cvrpdiff/diffusion.hpp"
#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/io.hpp"

namespace cvrpdiff {

namespace {

// Accessor for one nested member; exactly one is set.
struct Slot {
  std::function<int*(TrainConfig&)> as_int;
  std::function<double*(TrainConfig&)> as_double;
  std::function<bool*(TrainConfig&)> as_bool;
};

const std::map<std::string, Slot, std::less<>>& slots() {
  static const std::map<std::string, Slot, std::less<>> table = [] {
    std::map<std::string, Slot, std::less<>> t;
    auto i = [&](const char* key, auto get) { t[key].as_int = get; };
    auto d = [&](const char* key, auto get) { t[key].as_double = get; };
    i("model.d", [](TrainConfig& c) { return &c.model.d; });
    i("model.heads", [](TrainConfig& c) { return &c.model.heads; });
    i("model.gat_layers", [](TrainConfig& c) { return &c.model.gat_layers; });
    i("model.denoiser_layers", [](TrainConfig& c) { return &c.model.denoiser_layers; });
    i("model.encoder_layers", [](TrainConfig& c) { return &c.model.encoder_layers; });
    d("model.clip", [](TrainConfig& c) { return &c.model.clip; });
    i("diffusion.T", [](TrainConfig& c) { return &c.diffusion.T; });
    d("diffusion.beta1", [](TrainConfig& c) { return &c.diffusion.beta1; });
    d("diffusion.betaT", [](TrainConfig& c) { return &c.diffusion.betaT; });
    i("diffusion.batch", [](TrainConfig& c) { return &c.diffusion.batch; });
    i("diffusion.epochs", [](TrainConfig& c) { return &c.diffusion.epochs; });
    d("diffusion.lr", [](TrainConfig& c) { return &c.diffusion.lr; });
    d("diffusion.weight_decay", [](TrainConfig& c) { return &c.diffusion.weight_decay; });
    i("diffusion.inference_steps", [](TrainConfig& c) { return &c.diffusion.inference_steps; });
    t["diffusion.symmetric"].as_bool = [](TrainConfig& c) { return &c.diffusion.symmetric; };
    t["diffusion.augment"].as_bool = [](TrainConfig& c) { return &c.diffusion.augment; };
    d("policy.lr", [](TrainConfig& c) { return &c.policy.lr; });
    d("policy.weight_decay", [](TrainConfig& c) { return &c.policy.weight_decay; });
    i("policy.batch", [](TrainConfig& c) { return &c.policy.batch; });
    i("policy.epochs", [](TrainConfig& c) { return &c.policy.epochs; });
    i("policy.patience", [](TrainConfig& c) { return &c.policy.patience; });
    i("policy.max_steps", [](TrainConfig& c) { return &c.policy.max_steps; });
    i("policy.starts_limit", [](TrainConfig& c) { return &c.policy.starts_limit; });
    i("policy.mask_steps", [](TrainConfig& c) { return &c.policy.mask_steps; });
    return t;
  }();
  return table;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view v, std::size_t line) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ParseError("invalid number '" + std::string(v) + "'", line);
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  const auto& df = diffusion;
  if (df.T < 1 || df.batch < 1 || df.epochs < 1 || df.inference_steps < 1 || df.inference_steps > df.T)
    throw InputError("diffusion sizes must be positive and inference_steps <= T");
  if (!(df.lr > 0.0) || df.weight_decay < 0.0) throw InputError("diffusion lr must be positive");
  make_schedule(df.T, df.beta1, df.betaT);
  const auto& p = policy;
  if (p.batch < 1 || p.epochs < 1 || p.patience < 1 || p.max_steps < 0 || p.starts_limit < 1 || p.mask_steps < 1 ||
      p.mask_steps > df.T)
    throw InputError("policy sizes must be positive and mask_steps <= diffusion.T");
  if (!(p.lr > 0.0) || p.weight_decay < 0.0) throw InputError("policy lr must be positive");
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = slots().find(key);
    if (it == slots().end()) throw ParseError("unknown key '" + std::string(key) + "'", line_no);
    if (value.empty()) throw ParseError("missing value for '" + std::string(key) + "'", line_no);
    const auto& slot = it->second;
    if (slot.as_int) {
      *slot.as_int(base) = parse_number<int>(value, line_no);
    } else if (slot.as_double) {
      *slot.as_double(base) = parse_number<double>(value, line_no);
    } else if (value == "true" || value == "1") {
      *slot.as_bool(base) = true;
    } else if (value == "false" || value == "0") {
      *slot.as_bool(base) = false;
    } else {
      throw ParseError("expected true or false for '" + std::string(key) + "'", line_no);
    }
  }
  return base;
}

TrainConfig read_config(const std::filesystem::path& path) {
  auto config = parse_config(read_file(path));
  config.validate();
  return config;
}

std::string format_config(const TrainConfig& config) {
  TrainConfig c = config;
  std::string out;
  for (const auto& [key, slot] : slots()) {
    out += key;
    out += " = ";
    if (slot.as_int)
      out += std::to_string(*slot.as_int(c));
    else if (slot.as_double)
      out += format_double(*slot.as_double(c));
    else
      out += *slot.as_bool(c) ? "true" : "false";
    out += '\n';
  }
  return out;
}

}  // namespace cvrpdiff
