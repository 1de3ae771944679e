#pragma once

// Single-zone house model: first-order RC air temperature with a cooling-only
// HVAC, a scheduled setpoint, must-serve appliance load and optional rooftop PV.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "pet/error.hpp"
#include "pet/profile.hpp"

namespace pet::household {

struct HouseThermalState {
  double T_air = 24.0;       // °C
  double T_setpoint = 24.0;  // °C
  bool hvac_on = false;
  double R = 1.0 / 700.0;    // °C/W
  double C = 5.0e6;          // J/°C
  double Q_internal = 0.0;   // W
  double Q_cool = 12000.0;   // W thermal removed while running
  double P_hvac = 4000.0;    // W electrical while running

  double time_constant_s() const { return R * C; }
};

/// Exact solution of dT/dt = (T_out - T)/(RC) + (Q_internal - on*Q_cool)/C for
/// inputs held constant over dt.
inline HouseThermalState step_thermal(HouseThermalState state, double temp_out, double dt) {
  const double q = state.Q_internal - (state.hvac_on ? state.Q_cool : 0.0);
  const double equilibrium = temp_out + state.R * q;
  const double decay = std::exp(-dt / state.time_constant_s());
  state.T_air = equilibrium + (state.T_air - equilibrium) * decay;
  return state;
}

/// Daily setpoint program shared by every house; per-house variation comes
/// from SetpointJitter.
struct SetpointSchedule {
  double night_c = 22.0;
  double day_c = 26.0;
  double evening_c = 23.0;
  double ramp_start_h = 7.0;
  double ramp_end_h = 9.0;
  double evening_drop_h = 18.5;
  double night_drop_h = 23.5;

  double at_hour(double h) const {
    if (h < ramp_start_h) return night_c;
    if (h < ramp_end_h)
      return night_c + (day_c - night_c) * (h - ramp_start_h) / (ramp_end_h - ramp_start_h);
    if (h < evening_drop_h) return day_c;
    if (h < night_drop_h) return evening_c;
    return night_c;
  }
};

struct SetpointJitter {
  double offset_c = 0.0;  // within ±max_offset
  double shift_s = 0.0;   // within ±max_shift

  static SetpointJitter from_seed(std::uint64_t house_seed, double max_offset_c = 1.0,
                                  double max_shift_s = 1800.0) {
    return {max_offset_c * (2.0 * hashed_unit(house_seed, 11) - 1.0),
            max_shift_s * (2.0 * hashed_unit(house_seed, 12) - 1.0)};
  }
};

inline double setpoint(double t_s, const SetpointJitter& jitter = {},
                       const SetpointSchedule& schedule = {}) {
  return schedule.at_hour(hour_of_day(t_s - jitter.shift_s)) + jitter.offset_c;
}

inline double setpoint(double t_s, std::uint64_t house_seed) {
  return setpoint(t_s, SetpointJitter::from_seed(house_seed));
}

/// Predicted HVAC electrical demand for the coming round: full rated power or
/// nothing, with hysteresis around the setpoint.
inline double hvac_demand(const HouseThermalState& s, double deadband_c = 1.0) {
  const double half = 0.5 * deadband_c;
  const bool needs = s.T_air > s.T_setpoint + half || (s.hvac_on && s.T_air > s.T_setpoint - half);
  return needs ? s.P_hvac : 0.0;
}

/// Must-serve appliance load: diurnal curve (trough 06:00, peak 20:00) scaled
/// per house, with optional bounded noise.
struct UnresponsiveProfile {
  double mean_w = 1150.0;
  double amplitude = 0.5;   // relative swing of the diurnal curve
  double trough_h = 6.0;
  double peak_h = 20.0;
  double house_scale = 1.0;
  double noise = 0.10;      // relative, uniform in ±noise
  double noise_knot_s = 900.0;
  std::uint64_t seed = 0;

  double curve(double t_s) const {
    return mean_w * house_scale *
           (1.0 + amplitude * warped_cosine(hour_of_day(t_s), trough_h, peak_h));
  }

  double at(double t_s) const {
    const double base = curve(t_s);
    if (noise <= 0.0) return std::max(base, 0.0);
    // Piecewise-linear between hashed knots keeps the noise continuous.
    const double k = std::floor(t_s / noise_knot_s);
    const double w = t_s / noise_knot_s - k;
    auto knot = [&](double idx) {
      return 2.0 * hashed_unit(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(idx) + (1ll << 40))) - 1.0;
    };
    const double n = (1.0 - w) * knot(k) + w * knot(k + 1.0);
    return std::max(base * (1.0 + noise * n), 0.0);
  }
};

inline double unresponsive_load(double t_s, std::uint64_t house_seed,
                                UnresponsiveProfile profile = {}) {
  profile.seed = house_seed;
  return profile.at(t_s);
}

struct PvArray {
  int n_panels = 8;
  double panel_rating_w = 480.0;

  double rated_w() const { return n_panels * panel_rating_w; }
};

inline double pv_potential(const PvArray& array, double irradiance_frac) {
  return array.rated_w() * std::clamp(irradiance_frac, 0.0, 1.0);
}

/// Fleet-level construction parameters (the houses.* / pv.* config keys).
struct HouseFleetParams {
  double rc_hours_min = 2.5;
  double rc_hours_max = 4.0;
  double ua_w_per_c = 560.0;
  double ua_spread = 0.10;      // per-house relative spread on UA
  double hvac_kw = 4.0;
  double cop = 3.0;
  double deadband_c = 1.0;
  double unresponsive_mean_kw = 1.15;
  double unresponsive_amplitude = 0.5;
  double unresponsive_noise = 0.10;
  double unresponsive_scale_spread = 0.20;  // per-house relative spread
  double setpoint_offset_c = 1.0;
  double setpoint_shift_s = 1800.0;
  int pv_panels_min = 8;
  int pv_panels_max = 20;
  double pv_panel_w = 480.0;
  SetpointSchedule schedule{};

  void validate() const {
    if (!(rc_hours_min > 0.0 && rc_hours_max >= rc_hours_min))
      throw ConfigError("houses.rc_hours_range must be positive and ordered");
    if (!(ua_w_per_c > 0.0) || ua_spread < 0.0 || ua_spread >= 1.0)
      throw ConfigError("houses.ua_w_per_c must be positive, spread in [0,1)");
    if (!(hvac_kw > 0.0 && cop > 0.0)) throw ConfigError("houses.hvac_kw and houses.cop must be positive");
    if (deadband_c < 0.0) throw ConfigError("houses.deadband_c must be non-negative");
    if (unresponsive_mean_kw < 0.0) throw ConfigError("houses.unresponsive_mean_kw must be non-negative");
    if (pv_panels_min < 0 || pv_panels_max < pv_panels_min)
      throw ConfigError("pv.panels_range must be non-negative and ordered");
    if (!(pv_panel_w >= 0.0)) throw ConfigError("pv.panel_w must be non-negative");
  }
};

/// One simulated house: thermal state plus its schedules and devices.
class House {
public:
  House(std::uint64_t seed, const HouseFleetParams& p, bool has_pv, double t0 = 0.0)
      : seed_(seed), deadband_(p.deadband_c), schedule_(p.schedule) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double rc_s = kSecondsPerHour * (p.rc_hours_min + (p.rc_hours_max - p.rc_hours_min) * unit(rng));
    const double ua = p.ua_w_per_c * (1.0 + p.ua_spread * (2.0 * unit(rng) - 1.0));
    state_.R = 1.0 / ua;
    state_.C = rc_s * ua;
    state_.P_hvac = p.hvac_kw * 1000.0;
    state_.Q_cool = state_.P_hvac * p.cop;

    jitter_ = SetpointJitter{p.setpoint_offset_c * (2.0 * unit(rng) - 1.0),
                             p.setpoint_shift_s * (2.0 * unit(rng) - 1.0)};
    unresponsive_.mean_w = p.unresponsive_mean_kw * 1000.0;
    unresponsive_.amplitude = p.unresponsive_amplitude;
    unresponsive_.noise = p.unresponsive_noise;
    unresponsive_.house_scale = 1.0 + p.unresponsive_scale_spread * (2.0 * unit(rng) - 1.0);
    unresponsive_.seed = derive_seed(seed, 0x17);

    // Drawn even without PV so the remaining parameters do not depend on it.
    std::uniform_int_distribution<int> panels(p.pv_panels_min, p.pv_panels_max);
    const int n_panels = panels(rng);
    if (has_pv) pv_ = PvArray{n_panels, p.pv_panel_w};

    state_.T_setpoint = setpoint_at(t0);
    state_.T_air = state_.T_setpoint + (unit(rng) - 0.5) * deadband_;
    state_.Q_internal = unresponsive_.at(t0);
  }

  const HouseThermalState& state() const { return state_; }
  const std::optional<PvArray>& pv() const { return pv_; }
  const UnresponsiveProfile& unresponsive_profile() const { return unresponsive_; }
  const SetpointJitter& jitter() const { return jitter_; }
  double deadband() const { return deadband_; }

  double setpoint_at(double t_s) const { return setpoint(t_s, jitter_, schedule_); }
  double unresponsive_at(double t_s) const { return unresponsive_.at(t_s); }
  double demand() const { return hvac_demand(state_, deadband_); }
  double pv_potential_at(double irradiance_frac) const {
    return pv_ ? pv_potential(*pv_, irradiance_frac) : 0.0;
  }

  void set_hvac(bool on) { state_.hvac_on = on; }

  /// A cleared packet permits the HVAC to run; the thermostat still decides
  /// within it, so the unit may idle for part of a granted round.
  void apply_grant(bool granted) { state_.hvac_on = granted && demand() > 0.0; }

  std::uint64_t seed() const { return seed_; }

  /// Integrate [t, t+dt] with appliance heat taken at t; the setpoint then
  /// moves to its value at t+dt.
  void advance(double t_s, double dt, double temp_out) {
    state_.Q_internal = unresponsive_.at(t_s);
    state_ = step_thermal(state_, temp_out, dt);
    state_.T_setpoint = setpoint_at(t_s + dt);
  }

private:
  std::uint64_t seed_;
  double deadband_;
  SetpointSchedule schedule_;
  HouseThermalState state_{};
  SetpointJitter jitter_{};
  UnresponsiveProfile unresponsive_{};
  std::optional<PvArray> pv_;
};

} // namespace pet::household
