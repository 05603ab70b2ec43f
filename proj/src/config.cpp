#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "dstofw/error.hpp"
#include "dstofw/graph.hpp"
#include "dstofw/runner.hpp"

namespace dstofw {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename Int>
Int as_integer(const std::string& key, std::string_view text) {
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, text));
  }
  return value;
}

double as_double(const std::string& key, std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, text));
  }
  return value;
}

bool as_bool(const std::string& key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(fmt::format("{}: expected true|false, got '{}'", key, text));
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"solver", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "dstofw" && v != "denfw" && v != "cenfw" && v != "all")
           throw ConfigError(fmt::format("{}: expected dstofw|denfw|cenfw|all, got '{}'", k, v));
         c.solver = v;
       }},
      {"dataset", [](RunConfig& c, const std::string&, const std::string& v) { c.dataset = v; }},
      {"synthetic_n", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic_n = as_integer<std::int64_t>(k, v);
       }},
      {"synthetic_dim", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic_dim = as_integer<std::int64_t>(k, v);
       }},
      {"synthetic_seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic_seed = as_integer<std::uint64_t>(k, v);
       }},
      {"synthetic_noise", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic_noise = as_double(k, v);
       }},
      {"synthetic_density", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic_density = as_double(k, v);
       }},
      {"label_map", [](RunConfig& c, const std::string&, const std::string& v) { c.label_map = v; }},
      {"dim", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.dim = v == "auto" ? std::nullopt : std::optional(as_integer<std::int64_t>(k, v));
       }},
      {"objective", [](RunConfig& c, const std::string&, const std::string& v) {
         c.objective = parse_objective(v);
       }},
      {"agents", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.agents = as_integer<int>(k, v);
       }},
      {"topology", [](RunConfig& c, const std::string&, const std::string& v) { c.topology = v; }},
      {"set", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "l1") throw ConfigError(fmt::format("{}: only 'l1' is supported, got '{}'", k, v));
         c.set = v;
       }},
      {"radius", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.radius = as_double(k, v);
       }},
      {"iterations", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.iterations = as_integer<std::int64_t>(k, v);
       }},
      {"alpha", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.alpha = as_double(k, v);
       }},
      {"q", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.q = v == "auto" ? std::nullopt : std::optional(as_integer<std::int64_t>(k, v));
       }},
      {"partition_seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.partition_seed = as_integer<std::uint64_t>(k, v);
       }},
      {"sampling_seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.sampling_seed = as_integer<std::uint64_t>(k, v);
       }},
      {"topology_seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.topology_seed = as_integer<std::uint64_t>(k, v);
       }},
      {"partition", [](RunConfig& c, const std::string&, const std::string& v) {
         parse_partition(v);
         c.partition = v;
       }},
      {"equalize", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.equalize = as_bool(k, v);
       }},
      {"normalize", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.normalize = as_bool(k, v);
       }},
      {"full_batch", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.full_batch = as_bool(k, v);
       }},
      {"log_every", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.log_every = as_integer<std::int64_t>(k, v);
       }},
      {"output", [](RunConfig& c, const std::string&, const std::string& v) { c.output = v; }},
  };
  return table;
}

void validate(const RunConfig& c) {
  auto fail = [](std::string_view key, std::string_view what) {
    throw ConfigError(fmt::format("{}: {}", key, what));
  };
  if (c.iterations < 0) fail("iterations", "must be >= 0");
  if (!(c.radius > 0.0)) fail("radius", "must be > 0");
  if (c.agents < 1) fail("agents", "must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) fail("alpha", "must lie in (0, 1]");
  if (c.q && *c.q < 2) fail("q", "must be >= 2");
  if (c.log_every < 1) fail("log_every", "must be >= 1");
  if (c.dim && *c.dim < 1) fail("dim", "must be >= 1");
  if (c.dataset.empty()) {
    if (c.synthetic_n < 1) fail("synthetic_n", "must be >= 1");
    if (c.synthetic_dim < 1) fail("synthetic_dim", "must be >= 1");
    if (!(c.synthetic_noise >= 0.0 && c.synthetic_noise <= 0.5)) fail("synthetic_noise", "must lie in [0, 0.5]");
    if (!(c.synthetic_density > 0.0 && c.synthetic_density <= 1.0)) fail("synthetic_density", "must lie in (0, 1]");
  } else if (!std::filesystem::exists(c.dataset)) {
    fail("dataset", fmt::format("file '{}' does not exist", c.dataset));
  }
  if (!c.label_map.empty()) LabelMap::parse(c.label_map);
  if (c.output.empty()) fail("output", "must not be empty");
  const TopologySpec topo = TopologySpec::parse(c.topology);  // also checks file: paths
  (void)topo;
}

}  // namespace

ConfigEntries parse_config_entries(std::string_view text) {
  ConfigEntries entries;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("config line {}: expected key=value, got '{}'", line_no, line));
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(fmt::format("config line {}: empty key", line_no));
    if (!entries.emplace(key, value).second) {
      throw ConfigError(fmt::format("{}: set twice (config line {})", key, line_no));
    }
  }
  return entries;
}

RunConfig build_config(const ConfigEntries& entries) {
  if (!entries.contains("objective")) throw ConfigError("objective: missing required key");
  RunConfig config;
  if (auto it = entries.find("seed"); it != entries.end()) {
    const auto seed = as_integer<std::uint64_t>("seed", it->second);
    config.partition_seed = config.sampling_seed = config.topology_seed = seed;
  }
  const auto& table = setters();
  for (const auto& [key, value] : entries) {
    if (key == "seed") continue;
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(fmt::format("{}: unknown key", key));
    it->second(config, key, value);
  }
  validate(config);
  return config;
}

RunConfig parse_config(std::string_view text) { return build_config(parse_config_entries(text)); }

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& c) {
  auto opt = [](const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string("auto"); };
  return {
      {"solver", c.solver},
      {"dataset", c.dataset},
      {"synthetic_n", std::to_string(c.synthetic_n)},
      {"synthetic_dim", std::to_string(c.synthetic_dim)},
      {"synthetic_seed", std::to_string(c.synthetic_seed)},
      {"synthetic_noise", fmt::format("{:.17g}", c.synthetic_noise)},
      {"synthetic_density", fmt::format("{:.17g}", c.synthetic_density)},
      {"label_map", c.label_map},
      {"dim", opt(c.dim)},
      {"objective", std::string(to_string(c.objective))},
      {"agents", std::to_string(c.agents)},
      {"topology", c.topology},
      {"set", c.set},
      {"radius", fmt::format("{:.17g}", c.radius)},
      {"iterations", std::to_string(c.iterations)},
      {"alpha", fmt::format("{:.17g}", c.alpha)},
      {"q", opt(c.q)},
      {"partition_seed", std::to_string(c.partition_seed)},
      {"sampling_seed", std::to_string(c.sampling_seed)},
      {"topology_seed", std::to_string(c.topology_seed)},
      {"partition", c.partition},
      {"equalize", fmt_bool(c.equalize)},
      {"normalize", fmt_bool(c.normalize)},
      {"full_batch", fmt_bool(c.full_batch)},
      {"log_every", std::to_string(c.log_every)},
      {"output", c.output},
  };
}

}  // namespace dstofw
