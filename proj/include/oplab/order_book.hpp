#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>

#include "oplab/error.hpp"
#include "oplab/market.hpp"

namespace oplab {

using OrderId = std::uint64_t;
using Quantity = std::int64_t;

enum class Side : std::int8_t { Buy = 1, Sell = -1 };

constexpr Side opposite(Side s) noexcept { return s == Side::Buy ? Side::Sell : Side::Buy; }
constexpr char side_code(Side s) noexcept { return s == Side::Buy ? 'B' : 'S'; }

struct Order {
  OrderId id{0};
  Timestamp ts;
  std::uint64_t seq{0};
  Side side{Side::Buy};
  TickPrice price;
  Quantity size{0};

  friend bool operator==(const Order&, const Order&) = default;
};

/// One line of the event stream: a placement or a cancelation.
struct OrderEvent {
  enum class Action : std::uint8_t { Place, Cancel };

  Action action{Action::Place};
  Timestamp ts;
  std::uint64_t seq{0};
  OrderId id{0};
  // Placement-only fields.
  Side side{Side::Buy};
  TickPrice price;
  Quantity size{0};

  static OrderEvent place(const Order& o) {
    return OrderEvent{Action::Place, o.ts, o.seq, o.id, o.side, o.price, o.size};
  }
  static OrderEvent cancel(Timestamp ts, std::uint64_t seq, OrderId id) {
    return OrderEvent{Action::Cancel, ts, seq, id, Side::Buy, TickPrice{}, 0};
  }
  Order order() const { return Order{id, ts, seq, side, price, size}; }
  bool is_place() const noexcept { return action == Action::Place; }

  friend bool operator==(const OrderEvent&, const OrderEvent&) = default;
};

struct Trade {
  Timestamp ts;
  TickPrice price;
  Quantity size{0};
  OrderId buy_order_id{0};
  OrderId sell_order_id{0};

  friend bool operator==(const Trade&, const Trade&) = default;
};

struct Quotes {
  std::optional<TickPrice> best_bid;
  std::optional<TickPrice> best_ask;

  bool two_sided() const noexcept { return best_bid && best_ask; }
  friend bool operator==(const Quotes&, const Quotes&) = default;
};

struct DepthLevel {
  TickPrice price;
  Quantity size{0};
  friend bool operator==(const DepthLevel&, const DepthLevel&) = default;
};

/// Resting limit orders with strict price-time priority.
///
/// Each side maps a tick price to a FIFO queue; the head of the first level
/// is the highest-priority order. Orders keep their original (ts, seq) when
/// partially executed, so a remainder never loses its place in the queue.
class OrderBook {
 public:
  struct Level {
    std::deque<Order> queue;
    Quantity total{0};
    friend bool operator==(const Level&, const Level&) = default;
  };

  explicit OrderBook(PriceBand band) : band_(band) {}

  const PriceBand& band() const noexcept { return band_; }

  void insert(const Order& o) {
    if (o.size <= 0) throw Error(Errc::InvalidArgument, "order size must be positive");
    if (!band_.contains(o.price))
      throw Error(Errc::PriceOutsideBand, "price " + std::to_string(o.price.ticks) + " outside [" +
                                              std::to_string(band_.min.ticks) + ", " +
                                              std::to_string(band_.max.ticks) + "]");
    if (index_.contains(o.id)) throw Error(Errc::DuplicateId, "order id " + std::to_string(o.id));
    index_.emplace(o.id, Locator{o.side, o.price});
    if (o.side == Side::Buy) {
      push(bids_, o);
      bid_total_ += o.size;
    } else {
      push(asks_, o);
      ask_total_ += o.size;
    }
  }

  /// Removes a resting order and returns it with its remaining size.
  Order cancel(OrderId id) {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(Errc::UnknownId, "order id " + std::to_string(id));
    const auto [side, price] = it->second;
    index_.erase(it);
    Order removed = side == Side::Buy ? erase(bids_, price, id) : erase(asks_, price, id);
    (side == Side::Buy ? bid_total_ : ask_total_) -= removed.size;
    return removed;
  }

  Quotes best_quotes() const {
    Quotes q;
    if (!bids_.empty()) q.best_bid = TickPrice{bids_.begin()->first};
    if (!asks_.empty()) q.best_ask = TickPrice{asks_.begin()->first};
    return q;
  }

  std::optional<TickPrice> best(Side side) const {
    const auto q = best_quotes();
    return side == Side::Buy ? q.best_bid : q.best_ask;
  }

  /// rank-th best distinct price level on a side (rank 1 is the touch).
  DepthLevel depth_at(Side side, int rank) const {
    if (rank < 1 || rank > 3) throw Error(Errc::InvalidArgument, "depth rank must be 1..3");
    return side == Side::Buy ? level_at(bids_, rank) : level_at(asks_, rank);
  }

  /// Highest-priority resting order on a side.
  const Order& front(Side side) const {
    if (empty(side)) throw Error(Errc::InsufficientDepth, "side is empty");
    return side == Side::Buy ? bids_.begin()->second.queue.front()
                             : asks_.begin()->second.queue.front();
  }

  /// Executes `qty` against the head order of `side`; removes it once filled.
  void fill_front(Side side, Quantity qty) {
    if (side == Side::Buy) {
      fill_front_impl(bids_, qty);
      bid_total_ -= qty;
    } else {
      fill_front_impl(asks_, qty);
      ask_total_ -= qty;
    }
  }

  bool empty(Side side) const noexcept { return side == Side::Buy ? bids_.empty() : asks_.empty(); }
  bool contains(OrderId id) const { return index_.contains(id); }
  std::size_t order_count() const noexcept { return index_.size(); }
  std::size_t level_count(Side side) const noexcept {
    return side == Side::Buy ? bids_.size() : asks_.size();
  }
  Quantity total_size(Side side) const noexcept {
    return side == Side::Buy ? bid_total_ : ask_total_;
  }

  /// Visits resting orders on a side in priority order.
  template <class Fn>
  void for_each(Side side, Fn&& fn) const {
    auto visit = [&](const auto& levels) {
      for (const auto& [price, level] : levels)
        for (const auto& o : level.queue) fn(o);
    };
    side == Side::Buy ? visit(bids_) : visit(asks_);
  }

  friend bool operator==(const OrderBook&, const OrderBook&) = default;

 private:
  struct Locator {
    Side side;
    TickPrice price;
    friend bool operator==(const Locator&, const Locator&) = default;
  };

  using BidLevels = std::map<std::int64_t, Level, std::greater<>>;
  using AskLevels = std::map<std::int64_t, Level, std::less<>>;

  template <class Levels>
  static void push(Levels& levels, const Order& o) {
    auto& level = levels[o.price.ticks];
    level.queue.push_back(o);
    level.total += o.size;
  }

  template <class Levels>
  static Order erase(Levels& levels, TickPrice price, OrderId id) {
    auto lit = levels.find(price.ticks);
    auto& q = lit->second.queue;
    auto oit = std::find_if(q.begin(), q.end(), [id](const Order& o) { return o.id == id; });
    Order removed = *oit;
    q.erase(oit);
    lit->second.total -= removed.size;
    if (q.empty()) levels.erase(lit);
    return removed;
  }

  template <class Levels>
  static DepthLevel level_at(const Levels& levels, int rank) {
    if (static_cast<int>(levels.size()) < rank)
      throw Error(Errc::InsufficientDepth, "fewer than " + std::to_string(rank) + " levels");
    auto it = std::next(levels.begin(), rank - 1);
    return DepthLevel{TickPrice{it->first}, it->second.total};
  }

  template <class Levels>
  void fill_front_impl(Levels& levels, Quantity qty) {
    if (levels.empty()) throw Error(Errc::InsufficientDepth, "side is empty");
    auto lit = levels.begin();
    auto& head = lit->second.queue.front();
    if (qty <= 0 || qty > head.size) throw Error(Errc::InvalidArgument, "fill exceeds head order");
    head.size -= qty;
    lit->second.total -= qty;
    if (head.size == 0) {
      index_.erase(head.id);
      lit->second.queue.pop_front();
      if (lit->second.queue.empty()) levels.erase(lit);
    }
  }

  PriceBand band_;
  BidLevels bids_;
  AskLevels asks_;
  std::unordered_map<OrderId, Locator> index_;
  Quantity bid_total_{0};
  Quantity ask_total_{0};
};

}  // namespace oplab
