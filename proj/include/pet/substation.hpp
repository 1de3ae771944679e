#pragma once

// Substation business logic: LMP model and history statistics, per-round bid
// formulation for every trader type, and post-market dispatch of cleared
// quantities back to devices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pet/error.hpp"
#include "pet/ev_fleet.hpp"
#include "pet/market.hpp"
#include "pet/profile.hpp"

namespace pet::substation {

using market::Order;
using market::Side;
using market::TraderId;
using market::Watts;

/// Diurnal base price scaled up by grid loading:
///   lmp = p_base(t) * (1 + alpha * u^2),  u = min(demand / capacity, 1).
struct LmpModel {
  double p_base = 0.012;            // $/kWh, daily mean of the base curve
  double alpha = 0.75;
  double diurnal_amplitude = 0.25;  // relative swing of the base curve
  double trough_h = 4.0;
  double peak_h = 18.0;

  double base(double t_s) const {
    return p_base * (1.0 + diurnal_amplitude * warped_cosine(hour_of_day(t_s), trough_h, peak_h));
  }
};

inline double compute_lmp(double prev_round_demand_w, double capacity_w, double t_s,
                          const LmpModel& model = {}) {
  if (!(capacity_w > 0.0)) throw ConfigError("LMP capacity must be positive");
  const double u = std::clamp(prev_round_demand_w / capacity_w, 0.0, 1.0);
  return model.base(t_s) * (1.0 + model.alpha * u * u);
}

/// Linear-interpolation quantile (same convention as numpy's default).
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Rolling LMP record. A sample at time s belongs to a window of length w
/// ending at the latest time t when t - s < w; during warm-up the statistics
/// use whatever has been recorded.
class LmpHistory {
public:
  explicit LmpHistory(double long_window_s = 86400.0, double short_window_s = 1800.0)
      : long_window_(long_window_s), short_window_(short_window_s) {}

  void push(double t_s, double lmp) {
    if (!samples_.empty() && t_s <= samples_.back().t)
      throw Error("LMP history must be pushed in increasing time order");
    samples_.push_back({t_s, lmp});
    while (t_s - samples_.front().t >= long_window_) samples_.pop_front();
  }

  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }

  double ma_long() const { return mean_over(long_window_); }
  double ma_short() const { return mean_over(short_window_); }
  double iqr_long() const {
    std::vector<double> v;
    v.reserve(samples_.size());
    for (const auto& s : samples_) v.push_back(s.lmp);
    return quantile(v, 0.75) - quantile(v, 0.25);
  }

private:
  struct Sample {
    double t;
    double lmp;
  };

  // Deviations are summed about the newest sample so a constant history
  // averages to exactly that constant.
  double mean_over(double window) const {
    if (samples_.empty()) throw Error("LMP history is empty");
    const double latest = samples_.back().t;
    const double ref = samples_.back().lmp;
    double sum = 0.0;
    std::size_t n = 0;
    for (auto it = samples_.rbegin(); it != samples_.rend() && latest - it->t < window; ++it) {
      sum += it->lmp - ref;
      ++n;
    }
    return ref + sum / static_cast<double>(n);
  }

  double long_window_;
  double short_window_;
  std::deque<Sample> samples_;
};

struct EvPrices {
  double buy = 0.0;
  double sell = 0.0;
};

/// Buy at the 24 h mean; sell at the larger of a small IQR premium over the
/// buy price and a larger premium over the 30 min mean.
inline EvPrices ev_prices(double ma_long, double ma_short, double iqr_long) {
  const double buy = ma_long;
  return {buy, std::max(buy + 0.05 * iqr_long, ma_short + 0.1 * iqr_long)};
}

inline EvPrices ev_prices(const LmpHistory& history) {
  return ev_prices(history.ma_long(), history.ma_short(), history.iqr_long());
}

/// Fixed prices of the rule-based bidders ($/kWh).
struct Prices {
  double unresponsive = 1.00;
  double hvac = 0.50;
  double pv_sell = 0.0148;
  double ev_floor = 0.001;
};

struct GridState {
  double capacity_w = 100000.0;
  double lmp = 0.0;
  double supplied_w = 0.0;
};

/// Stand-in capacity for an uncapped grid connection (never binds).
inline constexpr double kUncappedGridW = 1.0e6;

inline constexpr TraderId kGridTrader = 0;

/// Trader ids of house i's devices; the EV's two sides trade under distinct ids.
struct HouseTraders {
  TraderId unresponsive, hvac, pv, ev_buy, ev_sell;

  static HouseTraders of(std::size_t house) {
    const auto base = static_cast<TraderId>(1 + 5 * house);
    return {base, base + 1, base + 2, base + 3, base + 4};
  }
};

inline Order formulate_grid_bid(const GridState& grid) {
  return {kGridTrader, Side::sell, static_cast<Watts>(std::llround(grid.capacity_w)), grid.lmp, true};
}

/// What the substation observed of one house before the round.
struct HouseReading {
  double unresponsive_w = 0.0;
  double hvac_demand_w = 0.0;
  double pv_potential_w = 0.0;
  std::optional<ev::LoadRange> ev_range;  // present when the house owns an EV
};

inline void add_order(std::vector<Order>& out, TraderId id, Side side, Watts q, double price,
                      bool responsive) {
  if (q > 0) out.push_back({id, side, q, price, responsive});
}

inline std::vector<Order> formulate_house_bids(const HouseReading& house, const HouseTraders& ids,
                                               const Prices& prices = {}) {
  std::vector<Order> out;
  add_order(out, ids.unresponsive, Side::buy, std::llround(house.unresponsive_w), prices.unresponsive,
            false);
  add_order(out, ids.hvac, Side::buy, std::llround(house.hvac_demand_w), prices.hvac, true);
  // Never offer more PV than was measured.
  add_order(out, ids.pv, Side::sell, static_cast<Watts>(std::floor(house.pv_potential_w)),
            prices.pv_sell, true);
  return out;
}

inline std::vector<Order> formulate_ev_bids(const ev::LoadRange& range, const EvPrices& ev_price,
                                            const HouseTraders& ids, const Prices& prices = {}) {
  std::vector<Order> out;
  const auto lo = static_cast<Watts>(std::llround(range.min));
  const auto hi = static_cast<Watts>(std::llround(range.max));
  if (lo > 0) {
    add_order(out, ids.ev_buy, Side::buy, lo, prices.unresponsive, false);
  } else if (hi < 0) {
    add_order(out, ids.ev_sell, Side::sell, -hi, prices.ev_floor, false);
  } else {
    add_order(out, ids.ev_buy, Side::buy, hi, ev_price.buy, true);
    add_order(out, ids.ev_sell, Side::sell, -lo, ev_price.sell, true);
  }
  return out;
}

inline std::vector<Order> formulate_ev_bids(const ev::LoadRange& range, const LmpHistory& history,
                                            const HouseTraders& ids, const Prices& prices = {}) {
  return formulate_ev_bids(range, ev_prices(history), ids, prices);
}

/// All orders of one round plus what is needed to dispatch the result.
struct BidSet {
  std::vector<HouseReading> houses;
  Order grid;
  std::vector<Order> orders;
};

inline BidSet formulate_bids(std::vector<HouseReading> houses, const GridState& grid,
                             const LmpHistory& history, const Prices& prices = {}) {
  BidSet set{std::move(houses), formulate_grid_bid(grid), {}};
  set.orders.push_back(set.grid);
  std::optional<EvPrices> ev_price;
  for (std::size_t i = 0; i < set.houses.size(); ++i) {
    const auto ids = HouseTraders::of(i);
    auto house = formulate_house_bids(set.houses[i], ids, prices);
    set.orders.insert(set.orders.end(), house.begin(), house.end());
    if (const auto& range = set.houses[i].ev_range) {
      if (!ev_price) ev_price = ev_prices(history);
      auto evs = formulate_ev_bids(*range, *ev_price, ids, prices);
      set.orders.insert(set.orders.end(), evs.begin(), evs.end());
    }
  }
  return set;
}

enum class ViolationKind { unserved_unresponsive, ev_out_of_range, power_imbalance };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::unserved_unresponsive: return "unserved_unresponsive";
    case ViolationKind::ev_out_of_range: return "ev_out_of_range";
    case ViolationKind::power_imbalance: return "power_imbalance";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::size_t house;
  double amount_w;
};

struct HouseDispatch {
  bool hvac_on = false;
  Watts unresponsive_w = 0;  // always physically served
  bool unresponsive_unserved = false;
  Watts pv_potential_w = 0;
  Watts pv_output_w = 0;
  Watts ev_bought_w = 0;
  Watts ev_sold_w = 0;
  Watts ev_command_w = 0;    // bought - sold
};

struct DispatchResult {
  std::vector<HouseDispatch> houses;
  Watts grid_supplied_w = 0;
  std::vector<Violation> violations;

  Watts pv_supplied() const {
    Watts s = 0;
    for (const auto& h : houses) s += h.pv_output_w;
    return s;
  }
  Watts ev_charge() const {
    Watts s = 0;
    for (const auto& h : houses) s += std::max<Watts>(h.ev_command_w, 0);
    return s;
  }
  Watts ev_discharge() const {
    Watts s = 0;
    for (const auto& h : houses) s += std::max<Watts>(-h.ev_command_w, 0);
    return s;
  }
  Watts hvac_load(const std::vector<Watts>& hvac_w) const {
    Watts s = 0;
    for (std::size_t i = 0; i < houses.size(); ++i)
      if (houses[i].hvac_on) s += hvac_w[i];
    return s;
  }
  /// Supply minus served load at the meter (zero when the round balances).
  Watts imbalance(Watts hvac_total) const {
    Watts unresp = 0;
    for (const auto& h : houses) unresp += h.unresponsive_w;
    return grid_supplied_w + pv_supplied() + ev_discharge() - (unresp + hvac_total + ev_charge());
  }
};

/// Translate cleared quantities into device commands.
inline DispatchResult dispatch(const market::MarketResult& result, const BidSet& bids) {
  DispatchResult out;
  out.houses.resize(bids.houses.size());
  out.grid_supplied_w = result.sold_by(kGridTrader);
  if (out.grid_supplied_w > bids.grid.quantity)
    throw AccountingError("grid sold more than its offer");

  for (std::size_t i = 0; i < bids.houses.size(); ++i) {
    const auto& reading = bids.houses[i];
    const auto ids = HouseTraders::of(i);
    auto& d = out.houses[i];
    d.hvac_on = result.bought_by(ids.hvac) > 0;
    d.unresponsive_w = std::llround(reading.unresponsive_w);
    if (d.unresponsive_w > 0 && result.bought_by(ids.unresponsive) < d.unresponsive_w) {
      d.unresponsive_unserved = true;
      out.violations.push_back({ViolationKind::unserved_unresponsive, i,
                                static_cast<double>(d.unresponsive_w)});
    }
    d.pv_potential_w = static_cast<Watts>(std::floor(reading.pv_potential_w));
    d.pv_output_w = result.sold_by(ids.pv);
    if (d.pv_output_w > d.pv_potential_w)
      throw AccountingError(fmt::format("house {} PV sold {} W above potential {} W", i,
                                        d.pv_output_w, d.pv_potential_w));
    if (reading.ev_range) {
      d.ev_bought_w = result.bought_by(ids.ev_buy);
      d.ev_sold_w = result.sold_by(ids.ev_sell);
      d.ev_command_w = d.ev_bought_w - d.ev_sold_w;
      if (!reading.ev_range->contains(static_cast<double>(d.ev_command_w), 0.5))
        out.violations.push_back({ViolationKind::ev_out_of_range, i,
                                  static_cast<double>(d.ev_command_w)});
    }
  }
  return out;
}

} // namespace pet::substation
