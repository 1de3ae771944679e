#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pet/ev_fleet.hpp"

using namespace pet;
using namespace pet::ev;

namespace {

constexpr double kH = 3600.0;

Itinerary stay_home() { return Itinerary{Profile::unemployed, {}}; }

EvModel model_y() { return tesla_model_y_long_range(7400.0); }

}  // namespace

TEST(EvModels, PublicSpecs) {
  const auto y = tesla_model_y_long_range();
  const auto id3 = volkswagen_id3();
  EXPECT_DOUBLE_EQ(y.battery_kwh, 75.0);
  EXPECT_DOUBLE_EQ(id3.battery_kwh, 58.0);
  EXPECT_DOUBLE_EQ(y.max_charge_w, 7400.0);
  EXPECT_DOUBLE_EQ(id3.max_discharge_w, 7400.0);
  EXPECT_DOUBLE_EQ(y.drive_kwh_per_km, 0.16);
  EXPECT_NO_THROW(y.validate(7400.0));
  EXPECT_THROW(y.validate(3700.0), ConfigError);
}

TEST(Itinerary, WorkerHomeAtThreeEveryDay) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto it = generate_itinerary(Profile::full_time_worker, seed, 8);
    for (int d = 0; d < 8; ++d) {
      EXPECT_EQ(it.location(d * 86400.0 + 3 * kH), Location::home);
      EXPECT_EQ(it.driving(d * 86400.0 + 3 * kH), nullptr);
    }
  }
}

TEST(Itinerary, WorkerCommuteShape) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto it = generate_itinerary(Profile::full_time_worker, seed, 4);
    ASSERT_EQ(it.trips.size(), 8u);
    for (int d = 0; d < 4; ++d) {
      const auto& out = it.trips[2 * d];
      const auto& back = it.trips[2 * d + 1];
      const double day0 = d * 86400.0;
      EXPECT_EQ(out.destination, Destination::work);
      EXPECT_EQ(back.destination, Destination::home);
      EXPECT_GE(out.depart, day0 + 8.0 * kH);
      EXPECT_LE(out.depart, day0 + 9.5 * kH);
      EXPECT_GE(back.depart, day0 + 16.5 * kH);
      EXPECT_LE(back.depart, day0 + 18.5 * kH + 1.0);
      EXPECT_GE(out.distance_km, 10.0);
      EXPECT_LE(out.distance_km, 30.0);
      EXPECT_DOUBLE_EQ(out.distance_km, back.distance_km);
      EXPECT_NEAR(out.duration(), out.distance_km / 20.0 * kH, 1e-6);
    }
  }
}

TEST(Itinerary, UnemployedOutingsAreShortDaylightRoundTrips) {
  int total_outings = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto it = generate_itinerary(Profile::unemployed, seed, 3);
    ASSERT_EQ(it.trips.size() % 2, 0u);
    for (std::size_t i = 0; i < it.trips.size(); i += 2) {
      const auto& go = it.trips[i];
      const auto& back = it.trips[i + 1];
      const double h = std::fmod(go.depart, 86400.0) / kH;
      EXPECT_GE(h, 9.0);
      EXPECT_EQ(go.destination, Destination::other);
      EXPECT_EQ(back.destination, Destination::home);
      EXPECT_GE(go.distance_km, 2.0);
      EXPECT_LE(go.distance_km, 10.0);
      EXPECT_GE(back.depart - go.arrive, 0.5 * kH - 1e-6);
      EXPECT_LE(back.depart - go.arrive, 2.0 * kH + 1e-6);
      ++total_outings;
    }
    for (int d = 0; d < 3; ++d) {
      int n = 0;
      for (const auto& t : it.trips)
        if (t.destination == Destination::other && std::floor(t.depart / 86400.0) == d) ++n;
      EXPECT_LE(n, 2);
    }
  }
  EXPECT_GT(total_outings, 100);
}

TEST(Itinerary, TripsChronologicalAndNonOverlapping) {
  for (auto profile : {Profile::full_time_worker, Profile::unemployed}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto it = generate_itinerary(profile, seed, 8);
      for (std::size_t i = 0; i < it.trips.size(); ++i) {
        EXPECT_LT(it.trips[i].depart, it.trips[i].arrive);
        if (i > 0) {
          EXPECT_GE(it.trips[i].depart, it.trips[i - 1].arrive);
        }
      }
      if (!it.trips.empty()) {
        EXPECT_EQ(it.trips.back().destination, Destination::home);
      }
    }
  }
}

TEST(Itinerary, DeterministicPerSeed) {
  const auto a = generate_itinerary(Profile::unemployed, 17, 8);
  const auto b = generate_itinerary(Profile::unemployed, 17, 8);
  ASSERT_EQ(a.trips.size(), b.trips.size());
  for (std::size_t i = 0; i < a.trips.size(); ++i) EXPECT_EQ(a.trips[i].depart, b.trips[i].depart);
  EXPECT_THROW(generate_itinerary(Profile::unemployed, 1, 0), ConfigError);
}

TEST(Itinerary, LocationQueries) {
  Itinerary it{Profile::full_time_worker,
               {{1000, 2000, 10, Destination::work}, {5000, 6000, 10, Destination::home}}};
  EXPECT_EQ(it.location(500), Location::home);
  EXPECT_NE(it.driving(1500), nullptr);
  EXPECT_EQ(it.location(3000), Location::away);
  EXPECT_EQ(it.location(7000), Location::home);
  EXPECT_DOUBLE_EQ(it.next_departure(0), 1000);
  EXPECT_DOUBLE_EQ(it.next_departure(1000), 1000);
  EXPECT_DOUBLE_EQ(it.next_departure(1001), 5000);
  EXPECT_TRUE(std::isinf(it.next_departure(5001)));
  EXPECT_DOUBLE_EQ(it.driving_km(0, 10000), 20.0);
  EXPECT_DOUBLE_EQ(it.driving_km(1000, 1500), 5.0);
}

TEST(Fleet, DrivingLoadPeaksMorningAndEvening) {
  // Fleet-wide count of vehicles on the road per 15 min slot, over many days.
  FleetParams p;
  p.seed = 3;
  const auto fleet = build_fleet(300, 10, p);
  std::vector<double> slots(96, 0.0);
  for (const auto& v : fleet)
    for (int d = 0; d < 10; ++d)
      for (int k = 0; k < 96; ++k)
        slots[k] += v.itinerary.driving_km(d * 86400.0 + k * 900.0, d * 86400.0 + (k + 1) * 900.0);
  auto argmax = [&](int lo, int hi) {
    int best = lo;
    for (int k = lo; k < hi; ++k)
      if (slots[k] > slots[best]) best = k;
    return (best + 0.5) * 0.25;
  };
  const double morning = argmax(0, 52), evening = argmax(52, 96);
  RecordProperty("morning_peak_h", std::to_string(morning));
  RecordProperty("evening_peak_h", std::to_string(evening));
  EXPECT_NEAR(morning, 9.75, 0.75);
  EXPECT_NEAR(evening, 18.0, 0.75);
}

TEST(Battery, DrivingConsumption) {
  EvState s;
  s.soc = 0.8;
  Itinerary it{Profile::full_time_worker, {{0, 3600, 20, Destination::work}}};
  s = step_battery(s, model_y(), it, 0, 3600);
  EXPECT_NEAR(0.8 - s.soc, 3.2 / 75.0, 1e-12);
  EXPECT_NEAR(0.8 - s.soc, 0.0427, 1e-4);
}

TEST(Battery, DrivingApportionedOverTrip) {
  EvState s;
  s.soc = 0.8;
  Itinerary it{Profile::full_time_worker, {{0, 3600, 20, Destination::work}}};
  auto stepped = s;
  for (int i = 0; i < 60; ++i) stepped = step_battery(stepped, model_y(), it, 60.0 * i, 60.0);
  EXPECT_NEAR(stepped.soc, step_battery(s, model_y(), it, 0, 3600).soc, 1e-12);
  EXPECT_EQ(stepped.location, Location::away);
}

TEST(Battery, ChargingWithEfficiency) {
  EvState s;
  s.soc = 0.5;
  s.commanded_load = 7000;
  const auto after = step_battery(s, model_y(), stay_home(), 0, 300);
  EXPECT_NEAR((after.soc - 0.5) * 75.0, 7.0 * 300.0 / 3600.0 * 0.95, 1e-9);
  EXPECT_NEAR((after.soc - 0.5) * 75.0, 0.5542, 1e-4);
}

TEST(Battery, DischargingWithEfficiency) {
  EvState s;
  s.soc = 0.5;
  s.commanded_load = -7000;
  const auto after = step_battery(s, model_y(), stay_home(), 0, 300);
  EXPECT_NEAR((0.5 - after.soc) * 75.0, 7.0 * 300.0 / 3600.0 / 0.95, 1e-9);
  EXPECT_NEAR((0.5 - after.soc) * 75.0, 0.6140, 1e-4);
}

TEST(Battery, RoundTripLosesEnergy) {
  EvState s;
  s.soc = 0.5;
  s.commanded_load = 7000;
  s = step_battery(s, model_y(), stay_home(), 0, 3600);
  const double stored = (s.soc - 0.5) * 75.0;
  // Discharge until the stored energy is gone; count what reaches the meter.
  const double meter_kwh = stored * 0.95;
  s.commanded_load = -meter_kwh * 1000.0;
  s = step_battery(s, model_y(), stay_home(), 3600, 3600);
  EXPECT_NEAR(s.soc, 0.5, 1e-12);
  EXPECT_LT(meter_kwh, 7.0);
  EXPECT_NEAR(meter_kwh, 7.0 * 0.95 * 0.95, 1e-9);
}

TEST(Battery, ClampedAtFullAndEmptyWithDiscardLogged) {
  EvState s;
  s.soc = 0.999;
  s.commanded_load = 7400;
  s = step_battery(s, model_y(), stay_home(), 0, 3600);
  EXPECT_DOUBLE_EQ(s.soc, 1.0);
  EXPECT_GT(s.discarded_kwh, 0.0);
  s.soc = 0.001;
  s.commanded_load = -7400;
  s = step_battery(s, model_y(), stay_home(), 0, 3600);
  EXPECT_DOUBLE_EQ(s.soc, 0.0);
  EXPECT_GT(s.discarded_kwh, 0.0);
}

TEST(Battery, CommandIgnoredAwayFromHome) {
  EvState s;
  s.soc = 0.5;
  s.commanded_load = 7000;
  Itinerary it{Profile::full_time_worker, {{0, 100, 0.0, Destination::work}}};
  const auto after = step_battery(s, model_y(), it, 1000, 300);
  EXPECT_DOUBLE_EQ(after.soc, 0.5);
}

TEST(LoadRange, SocBands) {
  const auto m = model_y();
  EvState s;
  s.soc = 0.95;
  EXPECT_EQ(load_range(s, m, stay_home(), 0, 300), (LoadRange{-7400, 0}));
  s.soc = 0.90;
  EXPECT_EQ(load_range(s, m, stay_home(), 0, 300), (LoadRange{-7400, 7400}));
  s.soc = 0.5;
  EXPECT_EQ(load_range(s, m, stay_home(), 0, 300), (LoadRange{-7400, 7400}));
  s.soc = 0.30;
  EXPECT_EQ(load_range(s, m, stay_home(), 0, 300), (LoadRange{-7400, 7400}));
  s.soc = 0.25;
  EXPECT_EQ(load_range(s, m, stay_home(), 0, 300), (LoadRange{0, 7400}));
  s.soc = 0.20;
  EXPECT_EQ(load_range(s, m, stay_home(), 0, 300), (LoadRange{0, 7400}));
  s.soc = 0.15;
  EXPECT_EQ(load_range(s, m, stay_home(), 0, 300), (LoadRange{7400, 7400}));
}

TEST(LoadRange, AwayOrDepartingOffersNothing) {
  const auto m = model_y();
  EvState s;
  s.soc = 0.5;
  Itinerary it{Profile::full_time_worker,
               {{1000, 2000, 10, Destination::work}, {5000, 6000, 10, Destination::home}}};
  EXPECT_EQ(load_range(s, m, it, 800, 300), (LoadRange{0, 0})) << "departs within the round";
  EXPECT_EQ(load_range(s, m, it, 600, 300), (LoadRange{-7400, 7400}));
  s.location = Location::away;
  EXPECT_EQ(load_range(s, m, it, 3000, 300), (LoadRange{0, 0}));
  s.soc = 0.1;
  EXPECT_EQ(load_range(s, m, it, 3000, 300), (LoadRange{0, 0}));
}

TEST(Fleet, MixAndSplit) {
  FleetParams p;
  p.seed = 8;
  const auto fleet = build_fleet(30, 8, p);
  ASSERT_EQ(fleet.size(), 30u);
  int workers = 0, teslas = 0;
  for (const auto& v : fleet) {
    workers += v.itinerary.profile == Profile::full_time_worker;
    teslas += v.model.battery_kwh == 75.0;
    EXPECT_GE(v.state.soc, 0.5);
    EXPECT_LE(v.state.soc, 0.9);
    ASSERT_FALSE(v.itinerary.trips.empty() && v.itinerary.profile == Profile::full_time_worker);
    if (v.itinerary.profile == Profile::full_time_worker) {
      EXPECT_GT(v.itinerary.trips.back().arrive, 8 * 86400.0) << "covers the horizon";
    }
  }
  EXPECT_EQ(workers, 24);
  EXPECT_EQ(teslas, 15);
}

TEST(Fleet, DeterministicAndSeedSensitive) {
  FleetParams p;
  p.seed = 4;
  const auto a = build_fleet(30, 8, p), b = build_fleet(30, 8, p);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].state.soc, b[i].state.soc);
  p.seed = 5;
  const auto c = build_fleet(30, 8, p);
  int same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i].state.soc == c[i].state.soc;
  EXPECT_LT(same, 3);
}

TEST(Fleet, ValidationRejectsBadParameters) {
  FleetParams p;
  p.worker_ratio = 1.2;
  EXPECT_THROW(build_fleet(3, 1, p), ConfigError);
  p = {};
  p.efficiency.charge = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.initial_soc_min = 0.9;
  p.initial_soc_max = 0.5;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Fleet, SocNeverLeavesUnitIntervalUnderPolicyAndDriving) {
  // Drive a fleet with random in-range commands, refreshed every 5 minutes.
  FleetParams p;
  p.seed = 21;
  auto fleet = build_fleet(30, 4, p);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : fleet) {
    LoadRange r;
    for (int k = 0; k < 4 * 1440; ++k) {
      const double t = 60.0 * k;
      if (k % 5 == 0) {
        r = load_range(v.state, v.model, v.itinerary, t, 300.0);
        v.state.commanded_load = r.min + (r.max - r.min) * u(rng);
      }
      ASSERT_TRUE(r.contains(v.state.commanded_load));
      v.state = step_battery(v.state, v.model, v.itinerary, t, 60.0);
      ASSERT_GE(v.state.soc, 0.0);
      ASSERT_LE(v.state.soc, 1.0);
    }
  }
}
