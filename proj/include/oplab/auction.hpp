#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "oplab/error.hpp"
#include "oplab/market.hpp"
#include "oplab/order_book.hpp"

namespace oplab {

struct ClearingResult {
  TickPrice price;
  Quantity volume{0};
  friend bool operator==(const ClearingResult&, const ClearingResult&) = default;
};

/// Trades and the book left behind when a phase hands over to the next one.
struct PhaseOutcome {
  std::vector<Trade> trades;
  OrderBook residual;
};

namespace detail {

/// Clears aggregated per-tick volumes; index k is tick band.min + k.
///
/// Demand at p counts buys bid >= p, supply counts sells asked <= p. A
/// candidate must (i) maximise min(demand, supply), (ii) leave no unfilled
/// strictly-better order on either side and (iii) fully fill one side's
/// orders at p. Survivors are ranked by distance to the previous close, then
/// by the higher price.
inline std::optional<ClearingResult> clear_levels(const PriceBand& band,
                                                  std::span<const Quantity> buy_at,
                                                  std::span<const Quantity> sell_at,
                                                  std::vector<Quantity>& demand_scratch) {
  const auto width = static_cast<std::size_t>(band.width());
  auto& demand = demand_scratch;
  demand.assign(width + 1, 0);
  for (std::size_t k = width; k-- > 0;) demand[k] = demand[k + 1] + buy_at[k];

  Quantity best_volume = 0;
  {
    Quantity supply = 0;
    for (std::size_t k = 0; k < width; ++k) {
      supply += sell_at[k];
      best_volume = std::max(best_volume, std::min(demand[k], supply));
    }
  }
  if (best_volume == 0) return std::nullopt;

  std::optional<std::size_t> chosen;
  std::int64_t chosen_distance = 0;
  Quantity supply_below = 0;  // sells asked strictly below the candidate
  for (std::size_t k = 0; k < width; ++k) {
    const Quantity supply = supply_below + sell_at[k];
    const Quantity volume = std::min(demand[k], supply);
    const bool better_orders_fill = demand[k + 1] <= volume && supply_below <= volume;
    const bool one_side_at_price_fills = demand[k] == volume || supply == volume;
    if (volume == best_volume && better_orders_fill && one_side_at_price_fills) {
      const std::int64_t price = band.min.ticks + static_cast<std::int64_t>(k);
      const std::int64_t distance = std::llabs(price - band.prev_close.ticks);
      // Scanning upward, ">=" prefers the higher price on equal distance.
      if (!chosen || distance <= chosen_distance) {
        chosen = k;
        chosen_distance = distance;
      }
    }
    supply_below = supply;
  }
  if (!chosen) return std::nullopt;  // unreachable when best_volume > 0
  return ClearingResult{TickPrice{band.min.ticks + static_cast<std::int64_t>(*chosen)}, best_volume};
}

}  // namespace detail

/// Call-auction clearing price over whole order sets.
inline std::optional<ClearingResult> clearing_price(std::span<const Order> buys,
                                                    std::span<const Order> sells,
                                                    const PriceBand& band) {
  const auto width = static_cast<std::size_t>(band.width());
  std::vector<Quantity> buy_at(width, 0), sell_at(width, 0), scratch;
  auto accumulate = [&](std::span<const Order> orders, std::vector<Quantity>& at) {
    for (const auto& o : orders) {
      if (!band.contains(o.price)) throw Error(Errc::PriceOutsideBand);
      at[static_cast<std::size_t>(o.price.ticks - band.min.ticks)] += o.size;
    }
  };
  accumulate(buys, buy_at);
  accumulate(sells, sell_at);
  return detail::clear_levels(band, buy_at, sell_at, scratch);
}

/// Opening call auction: accumulates orders and maintains the virtual price.
class CallAuction {
 public:
  explicit CallAuction(PriceBand band)
      : band_(band),
        buy_at_(static_cast<std::size_t>(band.width()), 0),
        sell_at_(static_cast<std::size_t>(band.width()), 0) {}

  const PriceBand& band() const noexcept { return band_; }
  const std::optional<ClearingResult>& virtual_price() const noexcept { return vprice_; }
  bool contains(OrderId id) const { return arrival_of_.contains(id); }
  std::size_t order_count() const noexcept { return by_arrival_.size(); }

  /// Applies one event and returns the refreshed virtual price.
  const std::optional<ClearingResult>& step(const OrderEvent& ev) {
    if (phase_of(ev.ts) != TradingPhase::OpeningCallAuction)
      throw Error(Errc::WrongPhase, "call auction event at " + to_clock_string(ev.ts));
    if (ev.is_place())
      place(ev.order());
    else
      cancel(ev.id, ev.ts);
    return vprice_;
  }

  void place(const Order& o) {
    if (o.size <= 0) throw Error(Errc::InvalidArgument, "order size must be positive");
    if (!band_.contains(o.price)) throw Error(Errc::PriceOutsideBand, std::to_string(o.price.ticks));
    if (arrival_of_.contains(o.id)) throw Error(Errc::DuplicateId, std::to_string(o.id));
    const auto arrival = next_arrival_++;
    by_arrival_.emplace(arrival, o);
    arrival_of_.emplace(o.id, arrival);
    volume_at(o.side)[slot(o.price)] += o.size;
    recompute();
  }

  void cancel(OrderId id, Timestamp ts) {
    if (ts >= session::kCancelCutoff)
      throw Error(Errc::CancelForbidden, "no cancelation after 09:20:00.00");
    auto it = arrival_of_.find(id);
    if (it == arrival_of_.end()) throw Error(Errc::UnknownId, std::to_string(id));
    auto oit = by_arrival_.find(it->second);
    volume_at(oit->second.side)[slot(oit->second.price)] -= oit->second.size;
    by_arrival_.erase(oit);
    arrival_of_.erase(it);
    recompute();
  }

  /// Orders in arrival order.
  std::vector<Order> orders() const {
    std::vector<Order> out;
    out.reserve(by_arrival_.size());
    for (const auto& [_, o] : by_arrival_) out.push_back(o);
    return out;
  }

  /// One-shot execution at the final virtual price.
  ///
  /// Strictly better-priced orders fill completely; orders priced exactly at
  /// the clearing price fill in arrival order until the volume is used up.
  /// Whatever is left becomes the opening book of the next phase.
  PhaseOutcome close(Timestamp at = session::kCallClose) const {
    PhaseOutcome out{{}, OrderBook(band_)};
    std::vector<Order> remaining = orders();
    if (vprice_) {
      const auto price = vprice_->price;
      const auto volume = vprice_->volume;
      auto fills = [&](Side side) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < remaining.size(); ++i)
          if (remaining[i].side == side) idx.push_back(i);
        // Price priority, then arrival (indices are already in arrival order).
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          return side == Side::Buy ? remaining[a].price > remaining[b].price
                                   : remaining[a].price < remaining[b].price;
        });
        std::vector<std::pair<std::size_t, Quantity>> alloc;
        Quantity left = volume;
        for (auto i : idx) {
          if (left == 0) break;
          const auto& o = remaining[i];
          const bool eligible = side == Side::Buy ? o.price >= price : o.price <= price;
          if (!eligible) break;
          const Quantity q = std::min(left, o.size);
          alloc.emplace_back(i, q);
          left -= q;
        }
        return alloc;
      };
      auto buy_fills = fills(Side::Buy);
      auto sell_fills = fills(Side::Sell);
      std::size_t bi = 0, si = 0;
      Quantity buy_left = buy_fills.empty() ? 0 : buy_fills[0].second;
      Quantity sell_left = sell_fills.empty() ? 0 : sell_fills[0].second;
      while (bi < buy_fills.size() && si < sell_fills.size()) {
        const Quantity q = std::min(buy_left, sell_left);
        out.trades.push_back(Trade{at, price, q, remaining[buy_fills[bi].first].id,
                                   remaining[sell_fills[si].first].id});
        buy_left -= q;
        sell_left -= q;
        if (buy_left == 0 && ++bi < buy_fills.size()) buy_left = buy_fills[bi].second;
        if (sell_left == 0 && ++si < sell_fills.size()) sell_left = sell_fills[si].second;
      }
      for (const auto& [i, q] : buy_fills) remaining[i].size -= q;
      for (const auto& [i, q] : sell_fills) remaining[i].size -= q;
    }
    for (const auto& o : remaining)
      if (o.size > 0) out.residual.insert(o);
    return out;
  }

 private:
  std::size_t slot(TickPrice p) const { return static_cast<std::size_t>(p.ticks - band_.min.ticks); }
  std::vector<Quantity>& volume_at(Side s) { return s == Side::Buy ? buy_at_ : sell_at_; }
  void recompute() { vprice_ = detail::clear_levels(band_, buy_at_, sell_at_, scratch_); }

  PriceBand band_;
  std::map<std::uint64_t, Order> by_arrival_;
  std::unordered_map<OrderId, std::uint64_t> arrival_of_;
  std::uint64_t next_arrival_{0};
  std::vector<Quantity> buy_at_;
  std::vector<Quantity> sell_at_;
  std::vector<Quantity> scratch_;
  std::optional<ClearingResult> vprice_;
};

/// Continuous-auction matching of one incoming order.
///
/// The order walks the opposite side while it crosses; every fill prints at
/// the resting order's price. Any remainder rests with its original priority.
inline std::vector<Trade> match_incoming(OrderBook& book, Order incoming, Timestamp trade_ts) {
  if (incoming.size <= 0) throw Error(Errc::InvalidArgument, "order size must be positive");
  if (!book.band().contains(incoming.price))
    throw Error(Errc::PriceOutsideBand, std::to_string(incoming.price.ticks));
  if (book.contains(incoming.id)) throw Error(Errc::DuplicateId, std::to_string(incoming.id));

  std::vector<Trade> trades;
  const Side contra = opposite(incoming.side);
  while (incoming.size > 0 && !book.empty(contra)) {
    const Order& head = book.front(contra);
    const bool crosses = incoming.side == Side::Buy ? incoming.price >= head.price
                                                    : incoming.price <= head.price;
    if (!crosses) break;
    const Quantity q = std::min(incoming.size, head.size);
    if (incoming.side == Side::Buy)
      trades.push_back(Trade{trade_ts, head.price, q, incoming.id, head.id});
    else
      trades.push_back(Trade{trade_ts, head.price, q, head.id, incoming.id});
    book.fill_front(contra, q);
    incoming.size -= q;
  }
  if (incoming.size > 0) book.insert(incoming);
  return trades;
}

/// One continuous-auction event: a placement is matched, a cancel removes.
inline std::vector<Trade> cda_step(OrderBook& book, const OrderEvent& ev) {
  if (phase_of(ev.ts) != TradingPhase::ContinuousAuction)
    throw Error(Errc::WrongPhase, "continuous auction event at " + to_clock_string(ev.ts));
  if (ev.is_place()) return match_incoming(book, ev.order(), ev.ts);
  book.cancel(ev.id);
  return {};
}

/// Cool period: orders queue up unmatched against frozen displayed quotes.
class CoolPeriod {
 public:
  explicit CoolPeriod(OrderBook residual)
      : book_(std::move(residual)), frozen_(book_.best_quotes()) {}

  const Quotes& frozen() const noexcept { return frozen_; }
  const OrderBook& book() const noexcept { return book_; }
  const std::vector<Order>& pending() const noexcept { return pending_; }
  bool contains(OrderId id) const { return book_.contains(id) || pending_ids_.contains(id); }

  void step(const OrderEvent& ev) {
    if (phase_of(ev.ts) != TradingPhase::CoolPeriod)
      throw Error(Errc::WrongPhase, "cool period event at " + to_clock_string(ev.ts));
    if (!ev.is_place()) throw Error(Errc::CancelForbidden, "cool period accepts no cancelation");
    const Order o = ev.order();
    if (o.size <= 0) throw Error(Errc::InvalidArgument, "order size must be positive");
    if (!book_.band().contains(o.price)) throw Error(Errc::PriceOutsideBand, std::to_string(o.price.ticks));
    if (contains(o.id)) throw Error(Errc::DuplicateId, std::to_string(o.id));
    pending_ids_.insert(o.id);
    pending_.push_back(o);
  }

  /// Feeds queued orders into the continuous auction in arrival order.
  PhaseOutcome open_continuous(Timestamp at = session::kCoolClose) && {
    PhaseOutcome out{{}, std::move(book_)};
    for (const auto& o : pending_) {
      auto trades = match_incoming(out.residual, o, at);
      out.trades.insert(out.trades.end(), trades.begin(), trades.end());
    }
    pending_.clear();
    pending_ids_.clear();
    return out;
  }

 private:
  OrderBook book_;
  Quotes frozen_;
  std::vector<Order> pending_;
  std::unordered_set<OrderId> pending_ids_;
};

/// What a trader could see right before placing an order.
struct ReferenceContext {
  TradingPhase phase{TradingPhase::NotTrading};
  std::optional<TickPrice> virtual_price;  // call auction only
  Quotes quotes;                           // frozen (cool) or live (continuous)
  friend bool operator==(const ReferenceContext&, const ReferenceContext&) = default;
};

struct PlacementRecord {
  Order order;
  ReferenceContext before;
  friend bool operator==(const PlacementRecord&, const PlacementRecord&) = default;
};

struct VirtualPricePoint {
  Timestamp ts;
  std::uint64_t seq{0};
  bool on_placement{true};
  std::optional<ClearingResult> virtual_price;
  friend bool operator==(const VirtualPricePoint&, const VirtualPricePoint&) = default;
};

struct QuotePoint {
  Timestamp ts;
  Quotes quotes;
  friend bool operator==(const QuotePoint&, const QuotePoint&) = default;
};

struct Rejection {
  std::size_t event_index{0};
  OrderEvent event;
  Errc code{Errc::InvalidArgument};
  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct DayResult {
  std::vector<Trade> trades;
  std::vector<QuotePoint> quotes;
  std::vector<VirtualPricePoint> virtual_prices;
  std::vector<PlacementRecord> placements;
  std::vector<Rejection> rejections;
  friend bool operator==(const DayResult&, const DayResult&) = default;
};

/// Single-stock trading day: routes events to the phase in force and carries
/// residual orders forward from one phase to the next.
class DayEngine {
 public:
  explicit DayEngine(TickPrice prev_close)
      : band_(compute_band(prev_close)), call_(std::in_place, band_) {}

  const PriceBand& band() const noexcept { return band_; }
  const DayResult& result() const noexcept { return result_; }
  TradingPhase stage() const noexcept { return stage_; }

  /// Applies one event; rejected events are recorded and skipped.
  void apply(const OrderEvent& ev) {
    const std::size_t index = events_seen_++;
    if (last_key_ && std::pair(ev.ts, ev.seq) < *last_key_) {
      reject(index, ev, Errc::UnsortedStream);
      return;
    }
    last_key_ = std::pair(ev.ts, ev.seq);

    const auto phase = phase_of(ev.ts);
    if (phase == TradingPhase::NotTrading) {
      reject(index, ev, Errc::NotTrading);
      return;
    }
    if (phase < stage_) {
      reject(index, ev, Errc::WrongPhase);
      return;
    }
    advance_to(phase);
    try {
      if (ev.is_place() && seen_ids_.contains(ev.id)) throw Error(Errc::DuplicateId);
      const ReferenceContext before = context();
      switch (stage_) {
        case TradingPhase::OpeningCallAuction: {
          const auto& vp = call_->step(ev);
          result_.virtual_prices.push_back(VirtualPricePoint{ev.ts, ev.seq, ev.is_place(), vp});
          if (ev.is_place()) stamped_vprice_ = vp ? std::optional(vp->price) : std::nullopt;
          break;
        }
        case TradingPhase::CoolPeriod:
          cool_->step(ev);
          result_.quotes.push_back(QuotePoint{ev.ts, cool_->frozen()});
          break;
        case TradingPhase::ContinuousAuction: {
          auto trades = cda_step(*book_, ev);
          result_.trades.insert(result_.trades.end(), trades.begin(), trades.end());
          result_.quotes.push_back(QuotePoint{ev.ts, book_->best_quotes()});
          break;
        }
        case TradingPhase::NotTrading:
          break;
      }
      if (ev.is_place()) {
        seen_ids_.insert(ev.id);
        result_.placements.push_back(PlacementRecord{ev.order(), before});
      }
    } catch (const Error& e) {
      reject(index, ev, e.code());
    }
  }

  /// Runs any pending phase transitions so the continuous book is live.
  void finish() { advance_to(TradingPhase::ContinuousAuction); }

  /// Moves forward through phase hand-overs up to `target`.
  void advance_to(TradingPhase target) {
    if (stage_ == TradingPhase::OpeningCallAuction && target >= TradingPhase::CoolPeriod) {
      auto outcome = call_->close(session::kCallClose);
      call_.reset();
      append_trades(outcome.trades);
      cool_.emplace(std::move(outcome.residual));
      stage_ = TradingPhase::CoolPeriod;
    }
    if (stage_ == TradingPhase::CoolPeriod && target >= TradingPhase::ContinuousAuction) {
      auto outcome = std::move(*cool_).open_continuous(session::kCoolClose);
      cool_.reset();
      append_trades(outcome.trades);
      book_.emplace(std::move(outcome.residual));
      stage_ = TradingPhase::ContinuousAuction;
    }
  }

  /// References a new order would be measured against right now.
  ReferenceContext context() const {
    switch (stage_) {
      case TradingPhase::OpeningCallAuction:
        return ReferenceContext{stage_, stamped_vprice_, {}};
      case TradingPhase::CoolPeriod:
        return ReferenceContext{stage_, std::nullopt, cool_->frozen()};
      default:
        return ReferenceContext{stage_, std::nullopt, book_->best_quotes()};
    }
  }

  /// True if the order could still be canceled (it rests or is queued).
  bool is_live(OrderId id) const {
    switch (stage_) {
      case TradingPhase::OpeningCallAuction: return call_->contains(id);
      case TradingPhase::CoolPeriod: return cool_->contains(id);
      default: return book_->contains(id);
    }
  }

  const CallAuction* call_auction() const { return call_ ? &*call_ : nullptr; }
  const CoolPeriod* cool_period() const { return cool_ ? &*cool_ : nullptr; }
  const OrderBook* continuous_book() const { return book_ ? &*book_ : nullptr; }

 private:
  void reject(std::size_t index, const OrderEvent& ev, Errc code) {
    result_.rejections.push_back(Rejection{index, ev, code});
  }
  void append_trades(const std::vector<Trade>& trades) {
    result_.trades.insert(result_.trades.end(), trades.begin(), trades.end());
  }

  PriceBand band_;
  TradingPhase stage_{TradingPhase::OpeningCallAuction};
  std::optional<CallAuction> call_;
  std::optional<CoolPeriod> cool_;
  std::optional<OrderBook> book_;
  std::optional<TickPrice> stamped_vprice_;
  std::unordered_set<OrderId> seen_ids_;
  std::optional<std::pair<Timestamp, std::uint64_t>> last_key_;
  std::size_t events_seen_{0};
  DayResult result_;
};

inline DayResult run_day(std::span<const OrderEvent> events, TickPrice prev_close) {
  DayEngine engine(prev_close);
  for (const auto& ev : events) engine.apply(ev);
  engine.finish();
  return engine.result();
}

}  // namespace oplab
