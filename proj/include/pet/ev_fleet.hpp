#pragma once

// EV fleet: synthetic daily itineraries, battery state under driving and
// home charging/discharging, and the admissible load range offered to the
// market each round.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pet/error.hpp"
#include "pet/profile.hpp"

namespace pet::ev {

struct EvModel {
  std::string name;
  double battery_kwh = 0.0;
  double max_charge_w = 0.0;
  double max_discharge_w = 0.0;
  double drive_kwh_per_km = 0.0;

  void validate(double charger_limit_w) const {
    if (!(battery_kwh > 0.0 && max_charge_w > 0.0 && max_discharge_w > 0.0 && drive_kwh_per_km > 0.0))
      throw ConfigError("EV model '" + name + "' has non-positive parameters");
    if (max_charge_w > charger_limit_w || max_discharge_w > charger_limit_w)
      throw ConfigError("EV model '" + name + "' exceeds the home charger limit");
  }
};

inline EvModel tesla_model_y_long_range(double charger_w = 7400.0) {
  return {"Tesla Model Y Long Range AWD", 75.0, charger_w, charger_w, 0.16};
}

inline EvModel volkswagen_id3(double charger_w = 7400.0) {
  return {"Volkswagen ID.3", 58.0, charger_w, charger_w, 0.16};
}

enum class Destination { home, work, other };
enum class Profile { full_time_worker, unemployed };
enum class Location { home, away };

inline const char* to_string(Destination d) {
  switch (d) {
    case Destination::home: return "home";
    case Destination::work: return "work";
    case Destination::other: return "other";
  }
  return "?";
}

struct Trip {
  double depart = 0.0;  // s
  double arrive = 0.0;  // s
  double distance_km = 0.0;
  Destination destination = Destination::home;

  double duration() const { return arrive - depart; }
};

struct Itinerary {
  Profile profile = Profile::full_time_worker;
  std::vector<Trip> trips;  // chronological, non-overlapping

  /// Trip in progress at t (depart <= t < arrive), if any.
  const Trip* driving(double t) const {
    auto it = std::upper_bound(trips.begin(), trips.end(), t,
                               [](double v, const Trip& trip) { return v < trip.depart; });
    if (it == trips.begin()) return nullptr;
    --it;
    return t < it->arrive ? &*it : nullptr;
  }

  Location location(double t) const {
    if (driving(t)) return Location::away;
    auto it = std::upper_bound(trips.begin(), trips.end(), t,
                               [](double v, const Trip& trip) { return v < trip.arrive; });
    if (it == trips.begin()) return Location::home;
    return std::prev(it)->destination == Destination::home ? Location::home : Location::away;
  }

  /// Departure time of the first trip starting at or after t (infinity if none).
  double next_departure(double t) const {
    auto it = std::lower_bound(trips.begin(), trips.end(), t,
                               [](const Trip& trip, double v) { return trip.depart < v; });
    return it == trips.end() ? std::numeric_limits<double>::infinity() : it->depart;
  }

  /// Driving energy over [t0, t1], each trip's consumption spread evenly over its duration.
  double driving_km(double t0, double t1) const {
    double km = 0.0;
    for (const auto& trip : trips) {
      if (trip.depart >= t1) break;
      const double overlap = std::min(t1, trip.arrive) - std::max(t0, trip.depart);
      if (overlap > 0.0 && trip.duration() > 0.0) km += trip.distance_km * overlap / trip.duration();
    }
    return km;
  }
};

struct ItineraryParams {
  double work_depart_h = 8.75;
  double work_depart_jitter_h = 0.75;
  double home_depart_h = 17.5;
  double home_depart_jitter_h = 1.0;
  double commute_km_min = 10.0;
  double commute_km_max = 30.0;
  double speed_kmh = 20.0;
  int outings_max = 2;
  double outing_window_start_h = 9.0;
  double outing_window_end_h = 17.0;
  double outing_km_min = 2.0;
  double outing_km_max = 10.0;
  double dwell_min_h = 0.5;
  double dwell_max_h = 2.0;
};

inline Itinerary generate_itinerary(Profile profile, std::uint64_t seed, int days,
                                    const ItineraryParams& p = {}) {
  if (days < 1) throw ConfigError("itinerary needs at least one day");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double hour = kSecondsPerHour;

  Itinerary itin{profile, {}};
  for (int d = 0; d < days; ++d) {
    const double day0 = d * kSecondsPerDay;
    if (profile == Profile::full_time_worker) {
      const double km = uniform(p.commute_km_min, p.commute_km_max);
      const double drive = km / p.speed_kmh * hour;
      const double out = day0 + hour * uniform(p.work_depart_h - p.work_depart_jitter_h,
                                               p.work_depart_h + p.work_depart_jitter_h);
      double back = day0 + hour * uniform(p.home_depart_h - p.home_depart_jitter_h,
                                          p.home_depart_h + p.home_depart_jitter_h);
      back = std::max(back, out + drive + hour);
      itin.trips.push_back({out, out + drive, km, Destination::work});
      itin.trips.push_back({back, back + drive, km, Destination::home});
    } else {
      const int n = std::uniform_int_distribution<int>(0, p.outings_max)(rng);
      std::vector<double> starts;
      for (int i = 0; i < n; ++i)
        starts.push_back(day0 + hour * uniform(p.outing_window_start_h, p.outing_window_end_h));
      std::sort(starts.begin(), starts.end());
      double free_from = day0;
      for (double start : starts) {
        const double km = uniform(p.outing_km_min, p.outing_km_max);
        const double drive = km / p.speed_kmh * hour;
        const double dwell = hour * uniform(p.dwell_min_h, p.dwell_max_h);
        const double depart = std::max(start, free_from);
        const double home = depart + 2.0 * drive + dwell;
        if (home > day0 + 21.0 * hour) break;
        itin.trips.push_back({depart, depart + drive, km, Destination::other});
        itin.trips.push_back({depart + drive + dwell, home, km, Destination::home});
        free_from = home + 600.0;
      }
    }
  }
  return itin;
}

struct Efficiency {
  double charge = 0.95;
  double discharge = 0.95;
};

struct EvState {
  double soc = 0.7;
  Location location = Location::home;
  double next_departure = std::numeric_limits<double>::infinity();
  double commanded_load = 0.0;  // W, + draws from the microgrid, - supplies it
  double load_min = 0.0;
  double load_max = 0.0;
  double discarded_kwh = 0.0;   // energy dropped by the SoC clamp during the last step
};

/// Advance the battery over [t, t+dt]. Driving energy is drawn regardless of
/// the command; the command only acts while the car is home for the whole step.
inline EvState step_battery(EvState s, const EvModel& model, const Itinerary& itin, double t,
                            double dt, Efficiency eta = {}) {
  const double hours = dt / kSecondsPerHour;
  double energy = s.soc * model.battery_kwh;
  energy -= itin.driving_km(t, t + dt) * model.drive_kwh_per_km;
  const bool home = itin.location(t) == Location::home && !itin.driving(t) &&
                    itin.next_departure(t) >= t + dt;
  if (home) {
    const double kw = s.commanded_load / 1000.0;
    energy += kw > 0.0 ? eta.charge * kw * hours : kw * hours / eta.discharge;
  }
  s.discarded_kwh = 0.0;
  if (energy > model.battery_kwh) {
    s.discarded_kwh = energy - model.battery_kwh;
    energy = model.battery_kwh;
  } else if (energy < 0.0) {
    s.discarded_kwh = -energy;
    energy = 0.0;
  }
  s.soc = energy / model.battery_kwh;
  s.location = itin.location(t + dt);
  s.next_departure = itin.next_departure(t + dt);
  return s;
}

struct LoadRange {
  double min = 0.0;
  double max = 0.0;

  bool contains(double load, double tol = 1e-6) const { return load >= min - tol && load <= max + tol; }
  friend bool operator==(const LoadRange&, const LoadRange&) = default;
};

/// SoC thresholds governing the admissible load range.
struct SocPolicy {
  double discharge_only_above = 0.90;
  double bidirectional_from = 0.30;
  double must_charge_below = 0.20;
};

/// Admissible load for a round spanning [t, t + horizon]: nothing unless the
/// car is home and stays home for the whole span, otherwise by SoC band.
inline LoadRange load_range(const EvState& s, const EvModel& model, const Itinerary& itin,
                            double t, double horizon, SocPolicy policy = {}) {
  const bool home = s.location == Location::home && itin.location(t) == Location::home &&
                    !itin.driving(t) && itin.next_departure(t) >= t + horizon;
  if (!home) return {0.0, 0.0};
  if (s.soc > policy.discharge_only_above) return {-model.max_discharge_w, 0.0};
  if (s.soc >= policy.bidirectional_from) return {-model.max_discharge_w, model.max_charge_w};
  if (s.soc >= policy.must_charge_below) return {0.0, model.max_charge_w};
  return {model.max_charge_w, model.max_charge_w};
}

/// ev.* configuration keys.
struct FleetParams {
  double model_mix = 0.5;      // fraction of Tesla Model Y; the rest are ID.3
  double charger_kw = 7.4;
  Efficiency efficiency{};
  double worker_ratio = 0.8;
  double initial_soc_min = 0.5;
  double initial_soc_max = 0.9;
  std::uint64_t seed = 0;
  ItineraryParams itinerary{};
  SocPolicy policy{};

  void validate() const {
    if (model_mix < 0.0 || model_mix > 1.0) throw ConfigError("ev.model_mix must be in [0,1]");
    if (!(charger_kw > 0.0)) throw ConfigError("ev.charger_kw must be positive");
    if (!(efficiency.charge > 0.0 && efficiency.charge <= 1.0 && efficiency.discharge > 0.0 &&
          efficiency.discharge <= 1.0))
      throw ConfigError("ev.efficiency must be in (0,1]");
    if (worker_ratio < 0.0 || worker_ratio > 1.0) throw ConfigError("ev.worker_ratio must be in [0,1]");
    if (initial_soc_min < 0.0 || initial_soc_max > 1.0 || initial_soc_max < initial_soc_min)
      throw ConfigError("ev initial SoC range must lie in [0,1]");
  }
};

struct Vehicle {
  EvModel model;
  Itinerary itinerary;
  EvState state;
};

/// Index set of size round(fraction * n), chosen by a seeded shuffle.
inline std::vector<bool> seeded_selection(std::size_t n, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<bool> chosen(n, false);
  for (std::size_t i = 0; i < k && i < n; ++i) chosen[order[i]] = true;
  return chosen;
}

inline std::vector<Vehicle> build_fleet(std::size_t count, int days, const FleetParams& p) {
  p.validate();
  const double charger_w = p.charger_kw * 1000.0;
  const auto workers = seeded_selection(count, p.worker_ratio, derive_seed(p.seed, 1));
  const auto teslas = seeded_selection(count, p.model_mix, derive_seed(p.seed, 2));
  std::vector<Vehicle> fleet;
  fleet.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto seed = derive_seed(p.seed, 100 + i);
    EvModel model = teslas[i] ? tesla_model_y_long_range(charger_w) : volkswagen_id3(charger_w);
    model.validate(charger_w);
    const auto profile = workers[i] ? Profile::full_time_worker : Profile::unemployed;
    auto itin = generate_itinerary(profile, seed, days + 1, p.itinerary);
    EvState state;
    state.soc = p.initial_soc_min + (p.initial_soc_max - p.initial_soc_min) * hashed_unit(seed, 7);
    state.location = itin.location(0.0);
    state.next_departure = itin.next_departure(0.0);
    fleet.push_back({std::move(model), std::move(itin), state});
  }
  return fleet;
}

} // namespace pet::ev
