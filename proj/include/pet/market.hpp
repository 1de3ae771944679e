#pragma once

// Price-first continuous double auction for one market round. Buy orders are
// indivisible, sell orders divisible; each buyer (highest bid first) is filled
// from the cheapest price-compatible sellers only when they can cover it in full.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

namespace pet::market {

using TraderId = std::uint32_t;
using Watts = std::int64_t;

enum class Side { buy, sell };

struct Order {
  TraderId trader = 0;
  Side side = Side::buy;
  Watts quantity = 0;  // power held for the whole round
  double price = 0.0;  // $/kWh
  bool responsive = true;

  bool valid() const { return quantity > 0 && price >= 0.0; }
  friend bool operator==(const Order&, const Order&) = default;
};

struct Transaction {
  TraderId buyer = 0;
  TraderId seller = 0;
  Watts quantity = 0;
  double price = 0.0;  // the seller's ask
  std::size_t round = 0;

  friend bool operator==(const Transaction&, const Transaction&) = default;
  friend auto operator<=>(const Transaction& a, const Transaction& b) {
    return std::tie(a.buyer, a.seller, a.quantity, a.price, a.round) <=>
           std::tie(b.buyer, b.seller, b.quantity, b.price, b.round);
  }
};

/// Σ q·p / Σ q, or nullopt when nothing traded.
inline std::optional<double> vwap(std::span<const Transaction> transactions) {
  double volume = 0.0, value = 0.0;
  for (const auto& t : transactions) {
    volume += static_cast<double>(t.quantity);
    value += static_cast<double>(t.quantity) * t.price;
  }
  if (volume <= 0.0) return std::nullopt;
  return value / volume;
}

struct MarketResult {
  std::vector<Transaction> transactions;
  std::map<TraderId, Watts> bought;  // per buyer trader, total filled
  std::map<TraderId, Watts> sold;    // per seller trader, total filled
  std::optional<double> round_vwap;

  Watts bought_by(TraderId id) const {
    auto it = bought.find(id);
    return it == bought.end() ? 0 : it->second;
  }
  Watts sold_by(TraderId id) const {
    auto it = sold.find(id);
    return it == sold.end() ? 0 : it->second;
  }
  Watts volume() const {
    Watts v = 0;
    for (const auto& t : transactions) v += t.quantity;
    return v;
  }
};

/// Priority of buyers: higher price first, then lower trader id.
inline bool buyer_before(const Order& a, const Order& b) {
  return std::tie(b.price, a.trader, a.quantity) < std::tie(a.price, b.trader, b.quantity);
}

/// Priority of sellers: lower ask first, then lower trader id.
inline bool seller_before(const Order& a, const Order& b) {
  return std::tie(a.price, a.trader, a.quantity) < std::tie(b.price, b.trader, b.quantity);
}

inline MarketResult match_orders(std::span<const Order> bids, std::size_t round = 0) {
  std::vector<Order> buyers, sellers;
  for (const auto& o : bids) {
    if (!o.valid()) continue;
    (o.side == Side::buy ? buyers : sellers).push_back(o);
  }
  std::sort(buyers.begin(), buyers.end(), buyer_before);
  std::sort(sellers.begin(), sellers.end(), seller_before);

  std::vector<Watts> remaining(sellers.size());
  for (std::size_t i = 0; i < sellers.size(); ++i) remaining[i] = sellers[i].quantity;

  MarketResult result;
  for (const auto& buyer : buyers) {
    // Shortest ask-ordered prefix of compatible sellers that covers the buyer.
    Watts covered = 0;
    std::size_t end = 0;
    for (; end < sellers.size() && covered < buyer.quantity; ++end) {
      if (sellers[end].price > buyer.price) break;
      covered += remaining[end];
    }
    if (covered < buyer.quantity) continue;

    Watts need = buyer.quantity;
    for (std::size_t i = 0; i < end && need > 0; ++i) {
      const Watts q = std::min(remaining[i], need);
      if (q <= 0) continue;
      remaining[i] -= q;
      need -= q;
      result.transactions.push_back({buyer.trader, sellers[i].trader, q, sellers[i].price, round});
      result.bought[buyer.trader] += q;
      result.sold[sellers[i].trader] += q;
    }
  }
  result.round_vwap = vwap(result.transactions);
  return result;
}

} // namespace pet::market
