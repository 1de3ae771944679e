#pragma once

// Scenario configuration: flat dotted keys (optionally grouped under
// [section] headers) in a plain "key = value" text file, plus the five
// embedded builtin scenarios.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "pet/environment.hpp"
#include "pet/error.hpp"
#include "pet/ev_fleet.hpp"
#include "pet/household.hpp"
#include "pet/metrics.hpp"
#include "pet/substation.hpp"

namespace pet::config {

enum class WeatherMode { synthetic, csv };

struct WeatherConfig {
  WeatherMode mode = WeatherMode::synthetic;
  std::string csv_path;
  double rated_irradiance_wm2 = 1000.0;
  environment::SyntheticWeather synthetic{};
};

struct ScenarioConfig {
  std::string name = "custom";
  std::string description;
  int n_houses = 30;
  int n_ev = 0;
  int n_pv = 0;
  std::optional<double> grid_capacity_kw = 100.0;  // nullopt: uncapped
  int days = 8;
  int discard_days = 4;
  std::uint64_t seed = 1;
  double step_s = 60.0;
  double t_market_s = 300.0;

  household::HouseFleetParams houses{};
  ev::FleetParams ev{};
  std::optional<std::uint64_t> ev_seed;  // derived from `seed` unless set
  bool export_itineraries = false;
  WeatherConfig weather{};
  substation::LmpModel lmp{};
  double lmp_reference_kw = 100.0;
  substation::Prices prices{};
  metrics::VwapMode vwap_mode = metrics::VwapMode::volume_weighted;

  double grid_capacity_w() const {
    return grid_capacity_kw ? *grid_capacity_kw * 1000.0 : substation::kUncappedGridW;
  }

  std::uint64_t effective_ev_seed() const { return ev_seed ? *ev_seed : derive_seed(seed, 0xE5); }

  void validate() const {
    if (n_houses < 1) throw ConfigError("houses.count must be at least 1");
    if (n_ev < 0 || n_ev > n_houses) throw ConfigError("ev.count must be in [0, houses.count]");
    if (n_pv < 0 || n_pv > n_houses) throw ConfigError("pv.count must be in [0, houses.count]");
    if (grid_capacity_kw && !(*grid_capacity_kw > 0.0)) throw ConfigError("grid.capacity_kw must be positive");
    if (days < 1 || discard_days < 0 || days <= discard_days)
      throw ConfigError("sim.days must exceed sim.discard_days");
    if (!(step_s > 0.0)) throw ConfigError("sim.step_s must be positive");
    const double ratio = t_market_s / step_s;
    if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9)
      throw ConfigError("market.t_market_s must be an integer multiple of sim.step_s");
    if (std::abs(std::fmod(kSecondsPerDay, t_market_s)) > 1e-9)
      throw ConfigError("market.t_market_s must divide one day");
    if (weather.mode == WeatherMode::csv && weather.csv_path.empty())
      throw ConfigError("weather.mode = csv requires weather.csv_path");
    if (!(weather.rated_irradiance_wm2 > 0.0)) throw ConfigError("weather.rated_irradiance_wm2 must be positive");
    if (!(lmp.p_base > 0.0) || lmp.alpha < 0.0 || lmp.diurnal_amplitude < 0.0 || lmp.diurnal_amplitude >= 1.0)
      throw ConfigError("lmp parameters out of range");
    if (!(lmp_reference_kw > 0.0)) throw ConfigError("lmp.reference_kw must be positive");
    if (!(prices.unresponsive > prices.hvac)) throw ConfigError("prices.unresponsive must exceed prices.hvac");
    if (prices.pv_sell < 0.0 || prices.ev_floor < 0.0) throw ConfigError("prices must be non-negative");
    houses.validate();
    ev.validate();
  }

  void set(std::string_view key, std::string_view value);
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (...) {
  }
  throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, s));
}

inline int to_int(std::string_view key, std::string_view v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, trim(v)));
  return static_cast<int>(d);
}

inline std::uint64_t to_u64(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  try {
    std::size_t used = 0;
    const auto u = std::stoull(s, &used);
    if (used == s.size() && !s.starts_with('-')) return u;
  } catch (...) {
  }
  throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, s));
}

inline bool to_bool(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, s));
}

/// "a,b" or "a..b".
inline std::pair<double, double> to_range(std::string_view key, std::string_view v) {
  const std::string s = trim(v);
  auto pos = s.find("..");
  std::size_t skip = 2;
  if (pos == std::string::npos) {
    pos = s.find(',');
    skip = 1;
  }
  if (pos == std::string::npos) throw ConfigError(fmt::format("{}: expected a range 'lo,hi', got '{}'", key, s));
  const double lo = to_double(key, s.substr(0, pos));
  const double hi = to_double(key, s.substr(pos + skip));
  if (hi < lo) throw ConfigError(fmt::format("{}: range upper bound below lower bound", key));
  return {lo, hi};
}

using Setter = std::function<void(ScenarioConfig&, std::string_view key, std::string_view value)>;

template <class T>
Setter number(T ScenarioConfig::*member) {
  return [member](ScenarioConfig& c, std::string_view k, std::string_view v) {
    if constexpr (std::is_same_v<T, int>) c.*member = to_int(k, v);
    else c.*member = to_double(k, v);
  };
}

inline const std::map<std::string, Setter, std::less<>>& setters() {
  using C = ScenarioConfig;
  using SV = std::string_view;
  static const std::map<std::string, Setter, std::less<>> table = {
      {"scenario.name", [](C& c, SV, SV v) { c.name = trim(v); }},
      {"scenario.description", [](C& c, SV, SV v) { c.description = trim(v); }},
      {"sim.days", number(&C::days)},
      {"sim.discard_days", number(&C::discard_days)},
      {"sim.seed", [](C& c, SV k, SV v) { c.seed = to_u64(k, v); }},
      {"sim.step_s", number(&C::step_s)},
      {"market.t_market_s", number(&C::t_market_s)},
      {"houses.count", number(&C::n_houses)},
      {"houses.rc_hours_range", [](C& c, SV k, SV v) {
         std::tie(c.houses.rc_hours_min, c.houses.rc_hours_max) = to_range(k, v);
       }},
      {"houses.ua_w_per_c", [](C& c, SV k, SV v) { c.houses.ua_w_per_c = to_double(k, v); }},
      {"houses.ua_spread", [](C& c, SV k, SV v) { c.houses.ua_spread = to_double(k, v); }},
      {"houses.hvac_kw", [](C& c, SV k, SV v) { c.houses.hvac_kw = to_double(k, v); }},
      {"houses.cop", [](C& c, SV k, SV v) { c.houses.cop = to_double(k, v); }},
      {"houses.deadband_c", [](C& c, SV k, SV v) { c.houses.deadband_c = to_double(k, v); }},
      {"houses.unresponsive_mean_kw", [](C& c, SV k, SV v) { c.houses.unresponsive_mean_kw = to_double(k, v); }},
      {"houses.unresponsive_amplitude", [](C& c, SV k, SV v) { c.houses.unresponsive_amplitude = to_double(k, v); }},
      {"houses.unresponsive_noise", [](C& c, SV k, SV v) { c.houses.unresponsive_noise = to_double(k, v); }},
      {"houses.setpoint_offset_c", [](C& c, SV k, SV v) { c.houses.setpoint_offset_c = to_double(k, v); }},
      {"houses.setpoint_shift_s", [](C& c, SV k, SV v) { c.houses.setpoint_shift_s = to_double(k, v); }},
      {"pv.count", number(&C::n_pv)},
      {"pv.panels_range", [](C& c, SV k, SV v) {
         const auto [lo, hi] = to_range(k, v);
         if (lo != std::floor(lo) || hi != std::floor(hi)) throw ConfigError("pv.panels_range must be integers");
         c.houses.pv_panels_min = static_cast<int>(lo);
         c.houses.pv_panels_max = static_cast<int>(hi);
       }},
      {"pv.panel_w", [](C& c, SV k, SV v) { c.houses.pv_panel_w = to_double(k, v); }},
      {"ev.count", number(&C::n_ev)},
      {"ev.model_mix", [](C& c, SV k, SV v) { c.ev.model_mix = to_double(k, v); }},
      {"ev.charger_kw", [](C& c, SV k, SV v) { c.ev.charger_kw = to_double(k, v); }},
      {"ev.efficiency", [](C& c, SV k, SV v) {
         const std::string s = trim(v);
         if (const auto comma = s.find(','); comma != std::string::npos) {
           c.ev.efficiency = {to_double(k, s.substr(0, comma)), to_double(k, s.substr(comma + 1))};
         } else {
           const double e = to_double(k, s);
           c.ev.efficiency = {e, e};
         }
       }},
      {"ev.worker_ratio", [](C& c, SV k, SV v) { c.ev.worker_ratio = to_double(k, v); }},
      {"ev.seed", [](C& c, SV k, SV v) { c.ev_seed = to_u64(k, v); }},
      {"ev.initial_soc_range", [](C& c, SV k, SV v) {
         std::tie(c.ev.initial_soc_min, c.ev.initial_soc_max) = to_range(k, v);
       }},
      {"ev.speed_kmh", [](C& c, SV k, SV v) { c.ev.itinerary.speed_kmh = to_double(k, v); }},
      {"ev.export_itineraries", [](C& c, SV k, SV v) { c.export_itineraries = to_bool(k, v); }},
      {"grid.capacity_kw", [](C& c, SV k, SV v) {
         const std::string s = trim(v);
         if (s == "uncapped" || s == "none" || s == "unlimited") c.grid_capacity_kw.reset();
         else c.grid_capacity_kw = to_double(k, s);
       }},
      {"lmp.p_base", [](C& c, SV k, SV v) { c.lmp.p_base = to_double(k, v); }},
      {"lmp.alpha", [](C& c, SV k, SV v) { c.lmp.alpha = to_double(k, v); }},
      {"lmp.diurnal_amplitude", [](C& c, SV k, SV v) { c.lmp.diurnal_amplitude = to_double(k, v); }},
      {"lmp.reference_kw", [](C& c, SV k, SV v) { c.lmp_reference_kw = to_double(k, v); }},
      {"prices.unresponsive", [](C& c, SV k, SV v) { c.prices.unresponsive = to_double(k, v); }},
      {"prices.hvac", [](C& c, SV k, SV v) { c.prices.hvac = to_double(k, v); }},
      {"prices.pv_sell", [](C& c, SV k, SV v) { c.prices.pv_sell = to_double(k, v); }},
      {"prices.ev_floor", [](C& c, SV k, SV v) { c.prices.ev_floor = to_double(k, v); }},
      {"weather.mode", [](C& c, SV k, SV v) {
         const std::string s = trim(v);
         if (s == "synthetic") c.weather.mode = WeatherMode::synthetic;
         else if (s == "csv") c.weather.mode = WeatherMode::csv;
         else throw ConfigError(fmt::format("{}: expected synthetic|csv, got '{}'", k, s));
       }},
      {"weather.csv_path", [](C& c, SV, SV v) { c.weather.csv_path = trim(v); }},
      {"weather.rated_irradiance_wm2", [](C& c, SV k, SV v) { c.weather.rated_irradiance_wm2 = to_double(k, v); }},
      {"weather.temp_mean_c", [](C& c, SV k, SV v) { c.weather.synthetic.temp_mean_c = to_double(k, v); }},
      {"weather.temp_amplitude_c", [](C& c, SV k, SV v) { c.weather.synthetic.temp_amplitude_c = to_double(k, v); }},
      {"weather.daily_jitter_c", [](C& c, SV k, SV v) { c.weather.synthetic.daily_jitter_c = to_double(k, v); }},
      {"metrics.vwap_mode", [](C& c, SV k, SV v) {
         const std::string s = trim(v);
         if (s == "volume_weighted") c.vwap_mode = metrics::VwapMode::volume_weighted;
         else if (s == "round_mean") c.vwap_mode = metrics::VwapMode::round_mean;
         else throw ConfigError(fmt::format("{}: expected volume_weighted|round_mean, got '{}'", k, s));
       }},
  };
  return table;
}

} // namespace detail

inline void ScenarioConfig::set(std::string_view key, std::string_view value) {
  const auto& table = detail::setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  it->second(*this, key, value);
}

inline std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::setters()) keys.push_back(k);
  return keys;
}

/// Apply "key = value" lines onto `base`. Lines starting with '#' or ';' are
/// comments; "[section]" prefixes following keys with "section.".
inline ScenarioConfig parse_config(std::istream& in, ScenarioConfig base = {}) {
  std::string line, section;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string s = detail::trim(line);
    if (s.empty() || s.front() == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(fmt::format("config line {}: unterminated section", row));
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key = value", row));
    std::string key = detail::trim(std::string_view(s).substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    try {
      base.set(key, std::string_view(s).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {}: {}", row, e.what()));
    }
  }
  return base;
}

inline ScenarioConfig parse_config_text(std::string_view text, ScenarioConfig base = {}) {
  std::istringstream in{std::string(text)};
  return parse_config(in, std::move(base));
}

inline ScenarioConfig load_config_file(const std::string& path, ScenarioConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  auto cfg = parse_config(in, std::move(base));
  if (cfg.name == "custom") cfg.name = path;
  return cfg;
}

struct BuiltinScenario {
  std::string_view name;
  std::string_view description;
  std::string_view text;
};

inline constexpr std::array<BuiltinScenario, 5> kBuiltins{{
    {"s1", "grid only, uncapped",
     "scenario.name = s1\nev.count = 0\npv.count = 0\ngrid.capacity_kw = uncapped\n"},
    {"s2", "grid only, capped at 100 kW",
     "scenario.name = s2\nev.count = 0\npv.count = 0\ngrid.capacity_kw = 100\n"},
    {"s3", "rooftop PV on every house, grid capped at 100 kW",
     "scenario.name = s3\nev.count = 0\npv.count = 30\ngrid.capacity_kw = 100\n"},
    {"s4", "V2G EV at every house, grid capped at 100 kW",
     "scenario.name = s4\nev.count = 30\npv.count = 0\ngrid.capacity_kw = 100\n"},
    {"s5", "V2G EV and rooftop PV at every house, grid capped at 100 kW",
     "scenario.name = s5\nev.count = 30\npv.count = 30\ngrid.capacity_kw = 100\n"},
}};

inline std::optional<ScenarioConfig> builtin_scenario(std::string_view name) {
  for (const auto& b : kBuiltins) {
    if (b.name != name) continue;
    auto cfg = parse_config_text(b.text);
    cfg.description = std::string(b.description);
    return cfg;
  }
  return std::nullopt;
}

/// Builtin name, or a path to a config file layered on the defaults.
inline ScenarioConfig resolve_scenario(const std::string& name_or_path) {
  if (auto b = builtin_scenario(name_or_path)) return *b;
  return load_config_file(name_or_path);
}

} // namespace pet::config
