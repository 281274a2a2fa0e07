#pragma once

#include <optional>
#include <span>
#include <vector>

#include "oplab/auction.hpp"
#include "oplab/error.hpp"
#include "oplab/market.hpp"
#include "oplab/micro_stats.hpp"
#include "oplab/order_book.hpp"

namespace oplab {

/// One placed order measured against the reference it saw.
struct RelPriceSample {
  double x{0.0};
  Side side{Side::Buy};
  TradingPhase phase{TradingPhase::NotTrading};
  Timestamp ts;
  std::optional<double> spread_before;
  std::optional<double> vol_before;

  friend bool operator==(const RelPriceSample&, const RelPriceSample&) = default;
};

/// Reference log prices for buys (r1) and sells (r2).
struct ReferencePrices {
  std::optional<LogPrice> buy;
  std::optional<LogPrice> sell;
};

/// Call auction: both references are the last stamped virtual price.
/// Cool period and continuous auction: the same-side best quote (frozen or live).
inline ReferencePrices reference_prices(const ReferenceContext& ctx) {
  ReferencePrices refs;
  switch (ctx.phase) {
    case TradingPhase::OpeningCallAuction:
      if (ctx.virtual_price) refs.buy = refs.sell = log_price(*ctx.virtual_price);
      break;
    case TradingPhase::CoolPeriod:
    case TradingPhase::ContinuousAuction:
      if (ctx.quotes.best_bid) refs.buy = log_price(*ctx.quotes.best_bid);
      if (ctx.quotes.best_ask) refs.sell = log_price(*ctx.quotes.best_ask);
      break;
    case TradingPhase::NotTrading:
      break;
  }
  return refs;
}

inline LogPrice reference_for(TradingPhase phase, Side side, const ReferenceContext& ctx) {
  ReferenceContext c = ctx;
  c.phase = phase;
  const auto refs = reference_prices(c);
  const auto& ref = side == Side::Buy ? refs.buy : refs.sell;
  if (!ref) throw Error(Errc::MissingReference, std::string(to_string(phase)) + " reference undefined");
  return *ref;
}

/// Signed log distance; larger is more aggressive for both sides.
inline double relative_price_value(Side side, TickPrice price, LogPrice reference) {
  const double pi = log_price(price).value;
  return side == Side::Buy ? pi - reference.value : reference.value - pi;
}

inline RelPriceSample relative_price(const Order& order, TradingPhase phase, const ReferencePrices& refs) {
  const auto& ref = order.side == Side::Buy ? refs.buy : refs.sell;
  if (!ref) throw Error(Errc::MissingReference, "order " + std::to_string(order.id));
  return RelPriceSample{relative_price_value(order.side, order.price, *ref), order.side, phase, order.ts,
                        std::nullopt, std::nullopt};
}

inline RelPriceSample annotate_context(RelPriceSample sample, std::optional<double> spread_before,
                                       std::optional<double> vol_before) {
  sample.spread_before = spread_before;
  sample.vol_before = vol_before;
  return sample;
}

/// |x| may exceed ln(11/9) by at most the band's one-tick rounding slack.
inline double relative_price_bound(const PriceBand& band) {
  return kRelativePriceBound + one_tick_slack(band);
}

/// Turns a replayed day into samples.
///
/// Placements without a defined reference are skipped. Continuous-auction
/// samples carry the spread and the N-return volatility of the mid-price seen
/// before placement; the volatility clock ticks once per placement.
inline std::vector<RelPriceSample> extract_samples(const DayResult& day, int vol_window = kVolatilityWindow) {
  std::vector<RelPriceSample> out;
  out.reserve(day.placements.size());
  RollingVolatility vol(vol_window);
  for (const auto& rec : day.placements) {
    const auto& ctx = rec.before;
    std::optional<double> spread_before, vol_before;
    if (ctx.phase == TradingPhase::ContinuousAuction) {
      if (auto mid = mid_price(ctx.quotes)) {
        vol.push(*mid);
        spread_before = spread(ctx.quotes);
      }
      vol_before = vol.value();
    }
    const auto refs = reference_prices(ctx);
    const auto& ref = rec.order.side == Side::Buy ? refs.buy : refs.sell;
    if (!ref) continue;
    out.push_back(annotate_context(relative_price(rec.order, ctx.phase, refs), spread_before, vol_before));
  }
  return out;
}

enum class ContextKey { Spread, Volatility };

/// Groups samples by the chosen pre-placement context value.
inline ConditionalGroups conditional_pdfs(std::span<const RelPriceSample> samples, ContextKey key,
                                          std::size_t groups = 4, const Binning& binning = {}) {
  std::vector<double> xs, keys;
  xs.reserve(samples.size());
  keys.reserve(samples.size());
  for (const auto& s : samples) {
    const auto& k = key == ContextKey::Spread ? s.spread_before : s.vol_before;
    if (!k) throw Error(Errc::MissingContext, "sample at " + to_clock_string(s.ts) + " lacks context");
    xs.push_back(s.x);
    keys.push_back(*k);
  }
  return conditional_pdfs(std::span<const double>(xs), std::span<const double>(keys), groups, binning);
}

}  // namespace oplab
