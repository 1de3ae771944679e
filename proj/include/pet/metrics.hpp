#pragma once

// Evaluation metrics: thermal comfort (squared excess temperature), supply
// utilization (unused PV/EV potential) and energy cost (VWAP), aggregated
// over an analysis window with the trapezoidal rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "pet/error.hpp"
#include "pet/market.hpp"
#include "pet/profile.hpp"

namespace pet::metrics {

inline double t_excess2(double T_air, double T_setpoint) {
  const double d = std::max(T_air - T_setpoint, 0.0);
  return d * d;
}

/// Unused potential of a resource; supplying more than the potential is a dispatch bug.
inline double surplus(double potential_w, double supplied_w, double tol_w = 1e-6) {
  if (supplied_w > potential_w + tol_w)
    throw AccountingError(fmt::format("supplied {} W exceeds potential {} W", supplied_w, potential_w));
  return std::max(potential_w - supplied_w, 0.0);
}

struct MetricsSample {
  double t = 0.0;
  double mean_T_excess2 = 0.0;
  double P_target = 0.0;
  double P_supplied = 0.0;
  double P_surplus_pv = 0.0;
  double P_surplus_ev = 0.0;
  std::optional<double> round_vwap;
  double lmp = 0.0;

  // Round breakdown (W / °C) used by the time-series outputs.
  double grid_supplied = 0.0;
  double pv_potential = 0.0;
  double pv_supplied = 0.0;
  double ev_charge = 0.0;
  double ev_discharge = 0.0;
  double hvac_load = 0.0;
  double unresponsive_load = 0.0;
  double mean_T_air = 0.0;
  double mean_setpoint = 0.0;
};

enum class VwapMode { volume_weighted, round_mean };

struct Window {
  double begin_s = 0.0;  // inclusive
  double end_s = 0.0;    // exclusive

  bool contains(double t) const { return t >= begin_s && t < end_s; }
};

struct ScenarioSummary {
  double T_excess2_bar = 0.0;
  std::optional<double> vwap_bar;
  double P_target_bar = 0.0;
  double P_supplied_bar = 0.0;
  double P_surplus_pv_bar = 0.0;
  double P_surplus_ev_bar = 0.0;
  std::size_t violation_count = 0;
  std::size_t rounds = 0;
};

/// Time average of a sampled signal by the trapezoidal rule over
/// [first sample, last sample]; a single sample is its own average.
inline double trapezoid_mean(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw Error("trapezoid over no samples");
  std::sort(points.begin(), points.end());
  if (points.size() == 1 || points.back().first == points.front().first) {
    double sum = 0.0;
    for (const auto& p : points) sum += p.second;
    return sum / static_cast<double>(points.size());
  }
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += 0.5 * (points[i].second + points[i - 1].second) * (points[i].first - points[i - 1].first);
  return area / (points.back().first - points.front().first);
}

/// Integral (not mean) of the same trapezoid; additive over adjoining windows.
inline double trapezoid_integral(std::vector<std::pair<double, double>> points) {
  std::sort(points.begin(), points.end());
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += 0.5 * (points[i].second + points[i - 1].second) * (points[i].first - points[i - 1].first);
  return area;
}

/// Transactions carry their round index; round r clears at r * t_market.
inline ScenarioSummary summarize(std::span<const MetricsSample> samples,
                                 std::span<const market::Transaction> transactions, Window window,
                                 double t_market_s, VwapMode mode = VwapMode::volume_weighted,
                                 std::size_t violations = 0) {
  std::vector<const MetricsSample*> in;
  for (const auto& s : samples)
    if (window.contains(s.t)) in.push_back(&s);
  if (in.empty()) throw Error("summary window contains no samples");

  auto average = [&](auto field) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(in.size());
    for (const auto* s : in) pts.emplace_back(s->t, field(*s));
    return trapezoid_mean(std::move(pts));
  };

  ScenarioSummary out;
  out.rounds = in.size();
  out.violation_count = violations;
  out.T_excess2_bar = average([](const MetricsSample& s) { return s.mean_T_excess2; });
  out.P_target_bar = average([](const MetricsSample& s) { return s.P_target; });
  out.P_supplied_bar = average([](const MetricsSample& s) { return s.P_supplied; });
  out.P_surplus_pv_bar = average([](const MetricsSample& s) { return s.P_surplus_pv; });
  out.P_surplus_ev_bar = average([](const MetricsSample& s) { return s.P_surplus_ev; });

  if (mode == VwapMode::volume_weighted) {
    std::vector<market::Transaction> tx;
    for (const auto& t : transactions)
      if (window.contains(static_cast<double>(t.round) * t_market_s)) tx.push_back(t);
    out.vwap_bar = market::vwap(tx);
  } else {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto* s : in)
      if (s->round_vwap) {
        sum += *s->round_vwap;
        ++n;
      }
    if (n > 0) out.vwap_bar = sum / static_cast<double>(n);
  }
  return out;
}

/// Mean of each time-of-day slot across the days of the window. The slot's
/// `t` is its offset within the day.
inline std::vector<MetricsSample> average_day(std::span<const MetricsSample> samples, Window window,
                                              double t_market_s) {
  const auto slots = static_cast<std::size_t>(std::llround(kSecondsPerDay / t_market_s));
  std::vector<MetricsSample> acc(slots);
  std::vector<std::size_t> count(slots, 0), vwap_count(slots, 0);
  std::vector<double> vwap_sum(slots, 0.0);
  for (const auto& s : samples) {
    if (!window.contains(s.t)) continue;
    const auto k = static_cast<std::size_t>(std::llround(std::fmod(s.t, kSecondsPerDay) / t_market_s)) % slots;
    auto& a = acc[k];
    a.mean_T_excess2 += s.mean_T_excess2;
    a.P_target += s.P_target;
    a.P_supplied += s.P_supplied;
    a.P_surplus_pv += s.P_surplus_pv;
    a.P_surplus_ev += s.P_surplus_ev;
    a.lmp += s.lmp;
    a.grid_supplied += s.grid_supplied;
    a.pv_potential += s.pv_potential;
    a.pv_supplied += s.pv_supplied;
    a.ev_charge += s.ev_charge;
    a.ev_discharge += s.ev_discharge;
    a.hvac_load += s.hvac_load;
    a.unresponsive_load += s.unresponsive_load;
    a.mean_T_air += s.mean_T_air;
    a.mean_setpoint += s.mean_setpoint;
    if (s.round_vwap) {
      vwap_sum[k] += *s.round_vwap;
      ++vwap_count[k];
    }
    ++count[k];
  }
  for (std::size_t k = 0; k < slots; ++k) {
    auto& a = acc[k];
    a.t = static_cast<double>(k) * t_market_s;
    if (count[k] == 0) continue;
    const double n = static_cast<double>(count[k]);
    for (double* f : {&a.mean_T_excess2, &a.P_target, &a.P_supplied, &a.P_surplus_pv, &a.P_surplus_ev,
                      &a.lmp, &a.grid_supplied, &a.pv_potential, &a.pv_supplied, &a.ev_charge,
                      &a.ev_discharge, &a.hvac_load, &a.unresponsive_load, &a.mean_T_air,
                      &a.mean_setpoint})
      *f /= n;
    if (vwap_count[k] > 0) a.round_vwap = vwap_sum[k] / static_cast<double>(vwap_count[k]);
  }
  return acc;
}

} // namespace pet::metrics
