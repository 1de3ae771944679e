#pragma once

// Scenario runner: wires the weather, household, EV and substation federates
// into a federation, runs it, and renders the time-series, transaction and
// summary outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "pet/config.hpp"
#include "pet/environment.hpp"
#include "pet/error.hpp"
#include "pet/ev_fleet.hpp"
#include "pet/household.hpp"
#include "pet/kernel.hpp"
#include "pet/market.hpp"
#include "pet/metrics.hpp"
#include "pet/substation.hpp"

namespace pet::runner {

inline constexpr const char* kVersion = "1.0.0";

struct EvSafety {
  double soc_min = 1.0;
  double soc_max = 0.0;
  std::size_t out_of_range_commands = 0;  // command outside the range the market used
  std::size_t away_trades = 0;            // nonzero command while not home
  std::size_t clamp_events = 0;
  double discarded_kwh = 0.0;

  std::size_t violations() const { return out_of_range_commands + away_trades; }
};

/// Largest |T_air - setpoint| per house over the analysis window, counted
/// once the house has settled inside the hysteresis band after the most
/// recent setpoint change.
struct ThermalTracking {
  std::vector<double> max_deviation_c;
  std::vector<char> settled;

  double fleet_max() const {
    return max_deviation_c.empty() ? 0.0 : *std::max_element(max_deviation_c.begin(), max_deviation_c.end());
  }
};

struct RoundViolation {
  std::size_t round;
  substation::Violation violation;
};

struct RunResult {
  config::ScenarioConfig config;
  std::vector<metrics::MetricsSample> samples;  // one per market round
  std::vector<market::Transaction> transactions;
  std::vector<RoundViolation> violations;
  std::vector<double> round_imbalance_w;
  EvSafety ev_safety;
  ThermalTracking thermal;
  std::vector<ev::Vehicle> fleet;  // final state, with itineraries
  metrics::Window window;
  metrics::ScenarioSummary summary;
  std::vector<metrics::MetricsSample> average_day;

  std::size_t count(substation::ViolationKind kind) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [&](const RoundViolation& v) { return v.violation.kind == kind; }));
  }
  std::size_t total_violations() const { return violations.size() + ev_safety.violations(); }
  bool clean() const { return total_violations() == 0; }
};

namespace detail {

inline std::string key(const char* prefix, std::size_t i, const char* field) {
  return fmt::format("{}/{}/{}", prefix, i, field);
}

struct HouseKeys {
  std::string t_air, setpoint, hvac_on, hvac_demand, unresponsive, pv_potential, hvac_cmd, pv_output;

  explicit HouseKeys(std::size_t i)
      : t_air(key("house", i, "t_air")), setpoint(key("house", i, "setpoint")),
        hvac_on(key("house", i, "hvac_on")), hvac_demand(key("house", i, "hvac_demand")),
        unresponsive(key("house", i, "unresp")), pv_potential(key("house", i, "pv_potential")),
        hvac_cmd(key("house", i, "hvac_cmd")), pv_output(key("house", i, "pv_output")) {}
};

struct EvKeys {
  std::string load_min, load_max, soc, home, command;

  explicit EvKeys(std::size_t i)
      : load_min(key("ev", i, "load_min")), load_max(key("ev", i, "load_max")), soc(key("ev", i, "soc")),
        home(key("ev", i, "home")), command(key("ev", i, "command")) {}
};

inline const std::string kTempOut = "weather/temp_out";
inline const std::string kIrradiance = "weather/irradiance";

/// Everything the federates share for one run. Each federate only touches
/// its own members, so stepping them concurrently is safe.
struct World {
  config::ScenarioConfig cfg;
  kernel::SimClock clock;
  environment::Weather weather;
  std::vector<household::House> houses;
  std::vector<market::Watts> hvac_rating_w;
  ThermalTracking thermal;
  std::vector<ev::Vehicle> fleet;
  std::vector<HouseKeys> house_keys;
  std::vector<EvKeys> ev_keys;

  // EV federate bookkeeping.
  std::vector<ev::LoadRange> ev_range_for_next_market;
  std::vector<ev::LoadRange> ev_range_in_force;
  EvSafety ev_safety;

  // Substation federate state.
  substation::LmpHistory lmp_history;
  double prev_round_demand_w = 0.0;
  std::vector<metrics::MetricsSample> samples;
  std::vector<market::Transaction> transactions;
  std::vector<RoundViolation> violations;
  std::vector<double> imbalance;
};

inline environment::Weather make_weather(const config::ScenarioConfig& cfg) {
  if (cfg.weather.mode == config::WeatherMode::csv)
    return environment::Weather(environment::load_weather_csv(cfg.weather.csv_path, cfg.weather.rated_irradiance_wm2));
  auto synthetic = cfg.weather.synthetic;
  synthetic.seed = derive_seed(cfg.seed, 0x3E);
  return environment::Weather(synthetic);
}

inline void weather_federate(kernel::Federation& fed, World& w) {
  auto publish = [&w](kernel::StepContext& ctx, double t) {
    const auto s = w.weather.sample(t);
    ctx.publish(kTempOut, s.temp_out);
    ctx.publish(kIrradiance, s.irradiance_frac);
  };
  // Publishes one step ahead so that houses integrating [t, t+step] see the
  // sample at t.
  fed.register_federate("weather", {[publish](kernel::StepContext& ctx) { publish(ctx, 0.0); },
                                    [publish](kernel::StepContext& ctx) {
                                      publish(ctx, ctx.t() + ctx.clock().step_s);
                                    }});
}

inline void household_federate(kernel::Federation& fed, World& w) {
  auto publish_state = [&w](kernel::StepContext& ctx, std::size_t i, double t_next, double irradiance) {
    const auto& h = w.houses[i];
    const auto& k = w.house_keys[i];
    ctx.publish(k.t_air, h.state().T_air);
    ctx.publish(k.setpoint, h.state().T_setpoint);
    ctx.publish(k.hvac_on, h.state().hvac_on ? 1.0 : 0.0);
    ctx.publish(k.hvac_demand, h.demand());
    ctx.publish(k.unresponsive, h.unresponsive_at(t_next));
    if (h.pv()) ctx.publish(k.pv_potential, h.pv_potential_at(irradiance));
  };
  fed.register_federate(
      "household",
      {[&w, publish_state](kernel::StepContext& ctx) {
         for (std::size_t i = 0; i < w.houses.size(); ++i)
           publish_state(ctx, i, 0.0, w.weather.sample(0.0).irradiance_frac);
       },
       [&w, publish_state](kernel::StepContext& ctx) {
         const double dt = ctx.clock().step_s;
         const double temp_out = ctx.read(kTempOut);
         const double irradiance = ctx.read(kIrradiance);
         const double t_next = ctx.t() + dt;
         const bool analysed = t_next >= w.cfg.discard_days * kSecondsPerDay;
         auto& tt = w.thermal;
         for (std::size_t i = 0; i < w.houses.size(); ++i) {
           auto& h = w.houses[i];
           h.apply_grant(ctx.read(w.house_keys[i].hvac_cmd) > 0.5);
           const double before = h.state().T_setpoint;
           h.advance(ctx.t(), dt, temp_out);
           const double dev = std::abs(h.state().T_air - h.state().T_setpoint);
           if (h.state().T_setpoint != before) tt.settled[i] = 0;
           if (dev <= 0.5 * h.deadband()) tt.settled[i] = 1;
           if (analysed && tt.settled[i]) tt.max_deviation_c[i] = std::max(tt.max_deviation_c[i], dev);
           publish_state(ctx, i, t_next, irradiance);
         }
       }});
}

inline void ev_federate(kernel::Federation& fed, World& w) {
  const std::size_t per_round = w.clock.steps_per_round();
  auto publish = [&w](kernel::StepContext& ctx, std::size_t i, double t_next, bool feeds_market) {
    auto& v = w.fleet[i];
    // The round cleared next applies one step after clearing, for t_market.
    const auto range = ev::load_range(v.state, v.model, v.itinerary, t_next,
                                      w.clock.step_s + w.clock.t_market_s, w.cfg.ev.policy);
    v.state.load_min = range.min;
    v.state.load_max = range.max;
    if (feeds_market) w.ev_range_for_next_market[i] = range;
    const auto& k = w.ev_keys[i];
    ctx.publish(k.load_min, range.min);
    ctx.publish(k.load_max, range.max);
    ctx.publish(k.soc, v.state.soc);
    ctx.publish(k.home, v.state.location == ev::Location::home ? 1.0 : 0.0);
  };
  fed.register_federate(
      "ev",
      {[&w, publish](kernel::StepContext& ctx) {
         for (std::size_t i = 0; i < w.fleet.size(); ++i) publish(ctx, i, 0.0, true);
       },
       [&w, publish, per_round](kernel::StepContext& ctx) {
         const double dt = ctx.clock().step_s;
         const std::size_t j = ctx.step_index();
         const bool first_after_market = j >= 1 && (j - 1) % per_round == 0;
         const bool feeds_market = (j + 1) % per_round == 0;
         if (first_after_market) w.ev_range_in_force = w.ev_range_for_next_market;
         auto& safety = w.ev_safety;
         for (std::size_t i = 0; i < w.fleet.size(); ++i) {
           auto& v = w.fleet[i];
           const double cmd = ctx.read(w.ev_keys[i].command);
           v.state.commanded_load = cmd;
           if (j >= 1 && !w.ev_range_in_force[i].contains(cmd, 0.5)) ++safety.out_of_range_commands;
           const double t = ctx.t();
           const bool home = v.itinerary.location(t) == ev::Location::home && !v.itinerary.driving(t) &&
                             v.itinerary.next_departure(t) >= t + dt;
           if (cmd != 0.0 && !home) ++safety.away_trades;
           v.state = ev::step_battery(v.state, v.model, v.itinerary, t, dt, w.cfg.ev.efficiency);
           if (v.state.discarded_kwh > 0.0) {
             ++safety.clamp_events;
             safety.discarded_kwh += v.state.discarded_kwh;
           }
           safety.soc_min = std::min(safety.soc_min, v.state.soc);
           safety.soc_max = std::max(safety.soc_max, v.state.soc);
           publish(ctx, i, t + dt, feeds_market);
         }
       }});
}

inline void substation_federate(kernel::Federation& fed, World& w) {
  fed.register_federate("substation", {nullptr, [&w](kernel::StepContext& ctx) {
    if (!ctx.market_step()) return;
    const double t = ctx.t();
    const std::size_t round = ctx.step_index() / w.clock.steps_per_round();
    const std::size_t n = w.houses.size();

    std::vector<substation::HouseReading> readings(n);
    double excess2 = 0.0, t_air = 0.0, t_sp = 0.0, target = 0.0, ev_discharge_potential = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& k = w.house_keys[i];
      auto& r = readings[i];
      r.unresponsive_w = ctx.read(k.unresponsive);
      r.hvac_demand_w = ctx.read(k.hvac_demand);
      if (i < static_cast<std::size_t>(w.cfg.n_pv)) r.pv_potential_w = ctx.read(k.pv_potential);
      if (i < w.fleet.size()) {
        r.ev_range = ev::LoadRange{ctx.read(w.ev_keys[i].load_min), ctx.read(w.ev_keys[i].load_max)};
        target += std::max(r.ev_range->min, 0.0);
        ev_discharge_potential += std::max(-r.ev_range->min, 0.0);
      }
      const double ta = ctx.read(k.t_air), sp = ctx.read(k.setpoint);
      excess2 += metrics::t_excess2(ta, sp);
      t_air += ta;
      t_sp += sp;
      target += r.unresponsive_w + r.hvac_demand_w;
    }

    substation::GridState grid;
    grid.capacity_w = w.cfg.grid_capacity_w();
    grid.lmp = substation::compute_lmp(w.prev_round_demand_w, w.cfg.lmp_reference_kw * 1000.0, t, w.cfg.lmp);
    w.lmp_history.push(t, grid.lmp);

    const auto bids = substation::formulate_bids(std::move(readings), grid, w.lmp_history, w.cfg.prices);
    auto result = market::match_orders(bids.orders, round);
    const auto d = substation::dispatch(result, bids);

    for (std::size_t i = 0; i < n; ++i) {
      const auto& k = w.house_keys[i];
      ctx.publish(k.hvac_cmd, d.houses[i].hvac_on ? 1.0 : 0.0);
      if (i < static_cast<std::size_t>(w.cfg.n_pv)) ctx.publish(k.pv_output, static_cast<double>(d.houses[i].pv_output_w));
      if (i < w.fleet.size()) ctx.publish(w.ev_keys[i].command, static_cast<double>(d.houses[i].ev_command_w));
    }

    const auto hvac_total = d.hvac_load(w.hvac_rating_w);
    const auto imbalance = d.imbalance(hvac_total);
    w.imbalance.push_back(static_cast<double>(imbalance));
    for (const auto& v : d.violations) w.violations.push_back({round, v});
    if (std::abs(imbalance) > 1)
      w.violations.push_back({round, {substation::ViolationKind::power_imbalance, n, static_cast<double>(imbalance)}});

    metrics::MetricsSample s;
    s.t = t;
    const double nd = static_cast<double>(n);
    s.mean_T_excess2 = excess2 / nd;
    s.mean_T_air = t_air / nd;
    s.mean_setpoint = t_sp / nd;
    s.P_target = target;
    s.grid_supplied = static_cast<double>(d.grid_supplied_w);
    s.pv_supplied = static_cast<double>(d.pv_supplied());
    s.ev_charge = static_cast<double>(d.ev_charge());
    s.ev_discharge = static_cast<double>(d.ev_discharge());
    s.P_supplied = s.grid_supplied + s.pv_supplied + s.ev_discharge;
    double pv_potential = 0.0, unresp = 0.0;
    for (const auto& h : d.houses) {
      pv_potential += static_cast<double>(h.pv_potential_w);
      unresp += static_cast<double>(h.unresponsive_w);
    }
    s.pv_potential = pv_potential;
    s.P_surplus_pv = metrics::surplus(pv_potential, s.pv_supplied);
    s.P_surplus_ev = metrics::surplus(ev_discharge_potential, s.ev_discharge, 0.5);
    s.hvac_load = static_cast<double>(hvac_total);
    s.unresponsive_load = unresp;
    s.round_vwap = result.round_vwap;
    s.lmp = grid.lmp;
    w.samples.push_back(s);

    w.prev_round_demand_w = static_cast<double>(result.volume());
    w.transactions.insert(w.transactions.end(), result.transactions.begin(), result.transactions.end());
  }});
}

} // namespace detail

inline RunResult run_scenario(const config::ScenarioConfig& cfg,
                              kernel::Execution execution = kernel::Execution::sequential) {
  cfg.validate();
  auto world = std::make_unique<detail::World>();
  auto& w = *world;
  w.cfg = cfg;
  w.clock = kernel::SimClock{cfg.step_s, cfg.t_market_s};
  w.weather = detail::make_weather(cfg);

  const auto n = static_cast<std::size_t>(cfg.n_houses);
  w.houses.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.houses.emplace_back(derive_seed(cfg.seed, 0x1000 + i), cfg.houses, i < static_cast<std::size_t>(cfg.n_pv));
    w.house_keys.emplace_back(i);
    w.hvac_rating_w.push_back(std::llround(w.houses.back().state().P_hvac));
  }
  w.thermal.max_deviation_c.assign(n, 0.0);
  w.thermal.settled.assign(n, 0);
  auto fleet_params = cfg.ev;
  fleet_params.seed = cfg.effective_ev_seed();
  w.fleet = ev::build_fleet(static_cast<std::size_t>(cfg.n_ev), cfg.days, fleet_params);
  for (std::size_t i = 0; i < w.fleet.size(); ++i) w.ev_keys.emplace_back(i);
  w.ev_range_for_next_market.assign(w.fleet.size(), {});
  w.ev_range_in_force.assign(w.fleet.size(), {});

  kernel::Federation fed(w.clock, cfg.seed);
  detail::weather_federate(fed, w);
  detail::household_federate(fed, w);
  detail::ev_federate(fed, w);
  detail::substation_federate(fed, w);
  fed.run(cfg.days * kSecondsPerDay, execution);

  RunResult out;
  out.config = cfg;
  out.samples = std::move(w.samples);
  out.transactions = std::move(w.transactions);
  out.violations = std::move(w.violations);
  out.round_imbalance_w = std::move(w.imbalance);
  out.ev_safety = w.ev_safety;
  out.thermal = std::move(w.thermal);
  out.fleet = std::move(w.fleet);
  out.window = {cfg.discard_days * kSecondsPerDay, cfg.days * kSecondsPerDay};
  out.summary = metrics::summarize(out.samples, out.transactions, out.window, cfg.t_market_s, cfg.vwap_mode,
                                   out.total_violations());
  out.average_day = metrics::average_day(out.samples, out.window, cfg.t_market_s);
  return out;
}

// ---- output rendering -----------------------------------------------------

inline std::string format_vwap(const std::optional<double>& v) {
  return v ? fmt::format("{:.8f}", *v) : std::string();
}

template <class FirstColumn>
void write_series(std::ostream& os, const std::vector<metrics::MetricsSample>& rows, const char* first_header,
                  FirstColumn first_column) {
  os << first_header
     << ",lmp,round_vwap,grid_supplied_w,pv_potential_w,pv_supplied_w,ev_charge_w,ev_discharge_w,"
        "hvac_load_w,unresponsive_load_w,mean_t_air_c,mean_setpoint_c,mean_t_excess2\n";
  for (const auto& s : rows)
    os << fmt::format("{},{:.8f},{},{:.1f},{:.1f},{:.1f},{:.1f},{:.1f},{:.1f},{:.1f},{:.6f},{:.6f},{:.8f}\n",
                      first_column(s), s.lmp, format_vwap(s.round_vwap), s.grid_supplied, s.pv_potential,
                      s.pv_supplied, s.ev_charge, s.ev_discharge, s.hvac_load, s.unresponsive_load,
                      s.mean_T_air, s.mean_setpoint, s.mean_T_excess2);
}

inline std::string time_series_csv(const RunResult& r) {
  std::ostringstream os;
  write_series(os, r.samples, "t_s", [](const metrics::MetricsSample& s) { return fmt::format("{:.0f}", s.t); });
  return os.str();
}

inline std::string average_day_csv(const RunResult& r) {
  std::ostringstream os;
  write_series(os, r.average_day, "time_of_day", [](const metrics::MetricsSample& s) {
    const auto minutes = static_cast<int>(std::llround(s.t / 60.0));
    return fmt::format("{:02d}:{:02d}", minutes / 60, minutes % 60);
  });
  return os.str();
}

inline std::string transactions_csv(const RunResult& r) {
  std::ostringstream os;
  os << "round,buyer,seller,quantity_w,price_usd_per_kwh\n";
  for (const auto& t : r.transactions)
    os << fmt::format("{},{},{},{},{:.8f}\n", t.round, t.buyer, t.seller, t.quantity, t.price);
  return os.str();
}

inline std::string itineraries_csv(const RunResult& r) {
  std::ostringstream os;
  os << "ev_id,depart,arrive,km,destination\n";
  for (std::size_t i = 0; i < r.fleet.size(); ++i)
    for (const auto& trip : r.fleet[i].itinerary.trips)
      os << fmt::format("{},{:.0f},{:.0f},{:.3f},{}\n", i, trip.depart, trip.arrive, trip.distance_km,
                        ev::to_string(trip.destination));
  return os.str();
}

inline nlohmann::json summary_json(const RunResult& r) {
  using nlohmann::json;
  const auto& s = r.summary;
  const auto& c = r.config;
  json j;
  j["scenario"] = c.name;
  j["seed"] = c.seed;
  j["n_houses"] = c.n_houses;
  j["n_ev"] = c.n_ev;
  j["n_pv"] = c.n_pv;
  j["grid_capacity_kw"] = c.grid_capacity_kw ? json(*c.grid_capacity_kw) : json("uncapped");
  j["days"] = c.days;
  j["discard_days"] = c.discard_days;
  j["rounds"] = r.samples.size();
  j["analysis_rounds"] = s.rounds;
  j["T_excess2_bar"] = s.T_excess2_bar;
  j["vwap_bar"] = s.vwap_bar ? json(*s.vwap_bar) : json(nullptr);
  j["vwap_mode"] = c.vwap_mode == metrics::VwapMode::volume_weighted ? "volume_weighted" : "round_mean";
  j["P_target_bar_w"] = s.P_target_bar;
  j["P_supplied_bar_w"] = s.P_supplied_bar;
  j["P_surplus_pv_bar_w"] = s.P_surplus_pv_bar;
  j["P_surplus_ev_bar_w"] = s.P_surplus_ev_bar;
  j["violation_count"] = s.violation_count;
  j["max_steady_setpoint_deviation_c"] = r.thermal.fleet_max();
  j["violations"] = {
      {"unserved_unresponsive", r.count(substation::ViolationKind::unserved_unresponsive)},
      {"ev_out_of_range", r.count(substation::ViolationKind::ev_out_of_range)},
      {"power_imbalance", r.count(substation::ViolationKind::power_imbalance)},
      {"ev_command_outside_published_range", r.ev_safety.out_of_range_commands},
      {"ev_trades_while_away", r.ev_safety.away_trades},
  };
  if (!r.fleet.empty())
    j["ev"] = {{"soc_min", r.ev_safety.soc_min},
               {"soc_max", r.ev_safety.soc_max},
               {"soc_clamp_events", r.ev_safety.clamp_events},
               {"discarded_kwh", r.ev_safety.discarded_kwh}};
  return j;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << content;
}

inline void write_outputs(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "time_series.csv", time_series_csv(r));
  write_file(dir / "average_day.csv", average_day_csv(r));
  write_file(dir / "transactions.csv", transactions_csv(r));
  write_file(dir / "summary.json", summary_json(r).dump(2) + "\n");
  if (r.config.export_itineraries) write_file(dir / "itineraries.csv", itineraries_csv(r));
}

} // namespace pet::runner
