#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "oplab/error.hpp"

namespace oplab {

/// Price on the 0.01-yuan tick grid. Prices never live in floating point.
struct TickPrice {
  std::int64_t ticks{0};

  constexpr double yuan() const noexcept { return static_cast<double>(ticks) * 0.01; }
  friend constexpr auto operator<=>(TickPrice, TickPrice) = default;
};

/// Natural log of the yuan price.
struct LogPrice {
  double value{0.0};
  friend constexpr auto operator<=>(LogPrice, LogPrice) = default;
};

inline LogPrice log_price(TickPrice p) {
  if (p.ticks < 1) throw Error(Errc::InvalidArgument, "log_price of non-positive tick price");
  return LogPrice{std::log(static_cast<double>(p.ticks) * 0.01)};
}

/// Daily admissible price interval around the previous close.
struct PriceBand {
  TickPrice prev_close;
  TickPrice min;
  TickPrice max;

  constexpr bool contains(TickPrice p) const noexcept { return p >= min && p <= max; }
  constexpr std::int64_t width() const noexcept { return max.ticks - min.ticks + 1; }
  TickPrice clamp(TickPrice p) const noexcept {
    if (p < min) return min;
    if (p > max) return max;
    return p;
  }
  friend constexpr bool operator==(const PriceBand&, const PriceBand&) = default;
};

/// Round-half-up of numerator/10 in integer arithmetic (numerator >= 0).
constexpr std::int64_t round_tenths_half_up(std::int64_t numerator) noexcept {
  return (numerator + 5) / 10;
}

/// Band [R(0.9 p), R(1.1 p)] with R rounding half-up to the nearest tick.
inline PriceBand compute_band(TickPrice prev_close) {
  if (prev_close.ticks < 1) throw Error(Errc::InvalidArgument, "previous close must be >= 1 tick");
  return PriceBand{prev_close, TickPrice{round_tenths_half_up(9 * prev_close.ticks)},
                   TickPrice{round_tenths_half_up(11 * prev_close.ticks)}};
}

/// log((min + 1) / min): the widest one-tick log step inside the band.
inline double one_tick_slack(const PriceBand& band) {
  const auto lo = static_cast<double>(band.min.ticks);
  return std::log1p(1.0 / lo);
}

/// ln(1.1 / 0.9), the exact width of the relative-price domain.
inline const double kRelativePriceBound = std::log(11.0 / 9.0);

/// Centiseconds since midnight.
struct Timestamp {
  std::int64_t cs{0};

  static constexpr Timestamp hms(int h, int m, int s = 0, int centis = 0) noexcept {
    return Timestamp{((static_cast<std::int64_t>(h) * 60 + m) * 60 + s) * 100 + centis};
  }
  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
};

inline constexpr std::int64_t kCentisecondsPerDay = 24LL * 3600 * 100;

inline std::string to_clock_string(Timestamp t) {
  const auto cs = t.cs % 100;
  const auto total_s = t.cs / 100;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%02lld",
                static_cast<long long>(total_s / 3600), static_cast<long long>(total_s / 60 % 60),
                static_cast<long long>(total_s % 60), static_cast<long long>(cs));
  return buf;
}

enum class TradingPhase : std::uint8_t {
  OpeningCallAuction,
  CoolPeriod,
  ContinuousAuction,
  NotTrading,
};

constexpr std::string_view to_string(TradingPhase p) noexcept {
  switch (p) {
    case TradingPhase::OpeningCallAuction: return "call";
    case TradingPhase::CoolPeriod: return "cool";
    case TradingPhase::ContinuousAuction: return "cda";
    case TradingPhase::NotTrading: return "closed";
  }
  return "closed";
}

// Session windows are half-open [open, close).
namespace session {
inline constexpr Timestamp kCallOpen = Timestamp::hms(9, 15);
inline constexpr Timestamp kCancelCutoff = Timestamp::hms(9, 20);
inline constexpr Timestamp kCallClose = Timestamp::hms(9, 25);
inline constexpr Timestamp kCoolClose = Timestamp::hms(9, 30);
inline constexpr Timestamp kMorningClose = Timestamp::hms(11, 30);
inline constexpr Timestamp kAfternoonOpen = Timestamp::hms(13, 0);
inline constexpr Timestamp kAfternoonClose = Timestamp::hms(15, 0);
}  // namespace session

constexpr TradingPhase phase_of(Timestamp t) noexcept {
  using namespace session;
  if (t >= kCallOpen && t < kCallClose) return TradingPhase::OpeningCallAuction;
  if (t >= kCallClose && t < kCoolClose) return TradingPhase::CoolPeriod;
  if ((t >= kCoolClose && t < kMorningClose) || (t >= kAfternoonOpen && t < kAfternoonClose))
    return TradingPhase::ContinuousAuction;
  return TradingPhase::NotTrading;
}

}  // namespace oplab
