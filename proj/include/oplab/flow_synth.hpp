#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "oplab/auction.hpp"
#include "oplab/error.hpp"
#include "oplab/flow_io.hpp"
#include "oplab/market.hpp"
#include "oplab/order_book.hpp"
#include "oplab/relative_price.hpp"

namespace oplab {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Mixture law of the relative price x for one side in one phase.
///
/// Components: an atom at 0, a truncated power-law bulk on [x_min, x_bulk_max]
/// on each side of zero, an exponential tail beyond +-x_bulk_max on each side
/// and an optional atom at the domain edge for aggressive orders.
struct PlacementMixture {
  double p_zero{0.0};
  double p_bulk_pos{0.5};
  double p_bulk_neg{0.5};
  double p_tail_pos{0.0};
  double p_tail_neg{0.0};
  double p_boost{0.0};
  double alpha_pos{1.5};
  double alpha_neg{1.5};
  double x_min{0.002};
  double x_bulk_max{0.1};
  double tail_rate{40.0};

  double total_mass() const {
    return p_zero + p_bulk_pos + p_bulk_neg + p_tail_pos + p_tail_neg + p_boost;
  }
  friend bool operator==(const PlacementMixture&, const PlacementMixture&) = default;
};

struct PhaseFlow {
  std::size_t count{0};  // placements per stock-day
  double buy_fraction{0.5};
  PlacementMixture buy;
  PlacementMixture sell;
  friend bool operator==(const PhaseFlow&, const PhaseFlow&) = default;
};

struct GeneratorConfig {
  std::string stock_code{"000001"};
  std::size_t stocks{1};  // independent stock-days pooled into one stream
  TickPrice prev_close{1000};
  std::uint64_t seed{1};
  double cancel_fraction{0.1};
  Quantity size_min{100};
  Quantity size_max{10000};
  PhaseFlow call;
  PhaseFlow cool;
  PhaseFlow cda;

  const PhaseFlow& phase(TradingPhase p) const {
    switch (p) {
      case TradingPhase::OpeningCallAuction: return call;
      case TradingPhase::CoolPeriod: return cool;
      default: return cda;
    }
  }
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Calibration defaults: bulk exponents from the reported fits, masses read
/// qualitatively off the measured densities.
inline GeneratorConfig default_generator_config() {
  GeneratorConfig cfg;
  auto mixture = [](double p_zero, double p_pos, double p_neg, double tail_pos, double tail_neg,
                    double a_pos, double a_neg) {
    PlacementMixture m;
    m.p_zero = p_zero;
    m.p_bulk_pos = p_pos;
    m.p_bulk_neg = p_neg;
    m.p_tail_pos = tail_pos;
    m.p_tail_neg = tail_neg;
    m.alpha_pos = a_pos;
    m.alpha_neg = a_neg;
    return m;
  };
  cfg.call.buy_fraction = 0.35;
  cfg.call.buy = mixture(0.0346, 0.35, 0.55, 0.0254, 0.04, 0.13, 1.72);
  cfg.call.sell = mixture(0.0346, 0.35, 0.55, 0.0254, 0.04, -0.31, 1.15);
  cfg.cool.buy_fraction = 0.45;
  cfg.cool.buy = mixture(0.10, 0.30, 0.54, 0.02, 0.04, 1.89, 1.72);
  cfg.cool.sell = mixture(0.10, 0.30, 0.54, 0.02, 0.04, 1.66, 1.15);
  cfg.cda.buy_fraction = 0.5;
  cfg.cda.buy = mixture(0.20, 0.30, 0.45, 0.02, 0.03, 1.66, 1.72);
  cfg.cda.sell = mixture(0.20, 0.30, 0.45, 0.02, 0.03, 1.80, 1.15);
  return cfg;
}

/// Smallest x that always moves an order at least one tick off its reference.
inline double min_tick_distance(const PriceBand& band) {
  if (band.min.ticks < 2) return INFINITY;
  return -std::log1p(-1.0 / static_cast<double>(band.min.ticks));
}

inline void validate(const PlacementMixture& m, const PriceBand& band, const std::string& where) {
  auto bad = [&](const std::string& what) { throw Error(Errc::InvalidConfig, where + ": " + what); };
  for (double p : {m.p_zero, m.p_bulk_pos, m.p_bulk_neg, m.p_tail_pos, m.p_tail_neg, m.p_boost})
    if (!(p >= 0.0 && p <= 1.0)) bad("mixture masses must lie in [0, 1]");
  if (std::abs(m.total_mass() - 1.0) > 1e-12) bad("mixture masses must sum to 1");
  if (!std::isfinite(m.alpha_pos) || !std::isfinite(m.alpha_neg)) bad("exponents must be finite");
  if (!(m.x_bulk_max > m.x_min)) bad("x_bulk_max must exceed x_min");
  if (!(m.x_bulk_max < kRelativePriceBound)) bad("x_bulk_max must lie inside the domain");
  if (!(m.x_min >= min_tick_distance(band))) bad("x_min is below one tick at the band floor");
  if (!(m.tail_rate > 0.0)) bad("tail_rate must be positive");
}

inline void validate(const GeneratorConfig& cfg) {
  auto bad = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
  if (!detail::is_stock_code(cfg.stock_code)) bad("stock_code must be 6 digits");
  if (cfg.stocks < 1) bad("stocks must be >= 1");
  if (std::stoull(cfg.stock_code) + cfg.stocks - 1 > 999999) bad("stock codes overflow 6 digits");
  if (cfg.prev_close.ticks < 1) bad("prev_close must be >= 1 tick");
  if (!(cfg.cancel_fraction >= 0.0 && cfg.cancel_fraction < 0.5)) bad("cancel_fraction must be in [0, 0.5)");
  if (cfg.size_min < 1 || cfg.size_max < cfg.size_min) bad("need 1 <= size_min <= size_max");
  const auto band = compute_band(cfg.prev_close);
  const std::pair<const char*, const PhaseFlow*> phases[] = {{"call", &cfg.call}, {"cool", &cfg.cool}, {"cda", &cfg.cda}};
  for (const auto& [name, flow] : phases) {
    if (!(flow->buy_fraction >= 0.0 && flow->buy_fraction <= 1.0)) bad(std::string(name) + ": buy_fraction");
    if (flow->count == 0) continue;
    validate(flow->buy, band, std::string(name) + ".buy");
    validate(flow->sell, band, std::string(name) + ".sell");
  }
}

/// Inverse CDF of the density proportional to x^-(1+alpha) on [lo, hi].
inline double truncated_power_law(double alpha, double lo, double hi, double u) {
  if (std::abs(alpha) < 1e-12) return lo * std::pow(hi / lo, u);
  const double a = std::pow(lo, -alpha);
  const double b = std::pow(hi, -alpha);
  return std::pow(a - u * (a - b), -1.0 / alpha);
}

/// Analytic CDF matching truncated_power_law().
inline double truncated_power_law_cdf(double alpha, double lo, double hi, double x) {
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  if (std::abs(alpha) < 1e-12) return std::log(x / lo) / std::log(hi / lo);
  const double a = std::pow(lo, -alpha);
  return (a - std::pow(x, -alpha)) / (a - std::pow(hi, -alpha));
}

/// Mixture quantile: u picks the component, v the value inside it.
inline double mixture_x(const PlacementMixture& m, double u, double v) {
  auto tail = [&] {
    const double x = m.x_bulk_max - std::log1p(-v) / m.tail_rate;
    return std::min(x, kRelativePriceBound);
  };
  double edge = m.p_zero;
  if (u < edge) return 0.0;
  if (u < (edge += m.p_bulk_pos)) return truncated_power_law(m.alpha_pos, m.x_min, m.x_bulk_max, v);
  if (u < (edge += m.p_bulk_neg)) return -truncated_power_law(m.alpha_neg, m.x_min, m.x_bulk_max, v);
  if (u < (edge += m.p_tail_pos)) return tail();
  if (u < (edge += m.p_tail_neg)) return -tail();
  if (m.p_boost > 0.0) return kRelativePriceBound;
  return -tail();  // only reachable through rounding of the cumulative masses
}

inline double sample_x(const PlacementMixture& m, Rng& rng) {
  const double u = uniform01(rng);
  return mixture_x(m, u, uniform01(rng));
}

/// Draw from the mixture with the atom at zero removed.
inline double sample_nonzero_x(const PlacementMixture& m, Rng& rng) {
  const double u = m.p_zero + (1.0 - m.p_zero) * uniform01(rng);
  return mixture_x(m, u, uniform01(rng));
}

/// Inverse of the relative-price map: rounds to the nearest tick, clamps to the band.
inline TickPrice x_to_price(double x, Side side, LogPrice reference, const PriceBand& band) {
  const double log_p = side == Side::Buy ? reference.value + x : reference.value - x;
  const double ticks = std::floor(std::exp(log_p) * 100.0 + 0.5);
  if (ticks <= static_cast<double>(band.min.ticks)) return band.min;
  if (ticks >= static_cast<double>(band.max.ticks)) return band.max;
  return TickPrice{static_cast<std::int64_t>(ticks)};
}

inline Order x_to_order(double x, Side side, const ReferencePrices& refs, const PriceBand& band,
                        OrderId id = 0, Timestamp ts = {}, std::uint64_t seq = 0, Quantity size = 100) {
  const auto& ref = side == Side::Buy ? refs.buy : refs.sell;
  if (!ref) throw Error(Errc::MissingReference, "x_to_order needs a reference");
  return Order{id, ts, seq, side, x_to_price(x, side, *ref, band), size};
}

/// Sorted uniform arrival times inside a phase's trading windows.
inline std::vector<Timestamp> arrival_times(TradingPhase phase, std::size_t count, Rng& rng) {
  using namespace session;
  std::vector<std::pair<Timestamp, Timestamp>> windows;
  switch (phase) {
    case TradingPhase::OpeningCallAuction: windows = {{kCallOpen, kCallClose}}; break;
    case TradingPhase::CoolPeriod: windows = {{kCallClose, kCoolClose}}; break;
    case TradingPhase::ContinuousAuction:
      windows = {{kCoolClose, kMorningClose}, {kAfternoonOpen, kAfternoonClose}};
      break;
    case TradingPhase::NotTrading: return {};
  }
  std::int64_t total = 0;
  for (const auto& [a, b] : windows) total += b.cs - a.cs;
  std::vector<std::int64_t> offsets(count);
  for (auto& off : offsets) off = std::min<std::int64_t>(static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(total)), total - 1);
  std::sort(offsets.begin(), offsets.end());
  std::vector<Timestamp> out;
  out.reserve(count);
  for (auto off : offsets) {
    for (const auto& [a, b] : windows) {
      if (off < b.cs - a.cs) {
        out.push_back(Timestamp{a.cs + off});
        break;
      }
      off -= b.cs - a.cs;
    }
  }
  return out;
}

/// Log-uniform size, rounded to whole lots of 100 when the range allows it.
inline Quantity sample_size(const GeneratorConfig& cfg, Rng& rng) {
  const double lo = std::log(static_cast<double>(cfg.size_min));
  const double hi = std::log(static_cast<double>(cfg.size_max));
  auto size = static_cast<Quantity>(std::llround(std::exp(lo + (hi - lo) * uniform01(rng))));
  if (cfg.size_min >= 100) size = std::max<Quantity>(cfg.size_min, size / 100 * 100);
  return std::clamp(size, cfg.size_min, cfg.size_max);
}

inline constexpr int kMaxRedraws = 64;

/// One stock-day of synthetic flow, generated against a co-running engine so
/// every order is drawn relative to the reference it will be measured against.
inline std::vector<OrderEvent> generate_day(const GeneratorConfig& cfg, Rng& rng) {
  validate(cfg);
  DayEngine engine(cfg.prev_close);
  const PriceBand band = engine.band();
  const double cancel_prob = cfg.cancel_fraction / (1.0 - cfg.cancel_fraction);

  std::vector<OrderEvent> events;
  std::vector<OrderId> cancel_candidates;
  OrderId next_id = 1;
  std::uint64_t seq = 1;

  auto emit = [&](const OrderEvent& ev) {
    events.push_back(ev);
    engine.apply(ev);
  };

  for (auto phase : {TradingPhase::OpeningCallAuction, TradingPhase::CoolPeriod, TradingPhase::ContinuousAuction}) {
    const PhaseFlow& flow = cfg.phase(phase);
    if (flow.count == 0) continue;
    for (Timestamp ts : arrival_times(phase, flow.count, rng)) {
      engine.advance_to(phase);
      const bool cancel_allowed = phase == TradingPhase::ContinuousAuction ||
                                  (phase == TradingPhase::OpeningCallAuction && ts < session::kCancelCutoff);
      if (cancel_allowed && cancel_prob > 0.0 && uniform01(rng) < cancel_prob) {
        while (!cancel_candidates.empty()) {
          const auto pick = static_cast<std::size_t>(rng() % cancel_candidates.size());
          const OrderId id = cancel_candidates[pick];
          cancel_candidates[pick] = cancel_candidates.back();
          cancel_candidates.pop_back();
          if (engine.is_live(id)) {
            emit(OrderEvent::cancel(ts, seq++, id));
            break;
          }
        }
      }

      const Side side = uniform01(rng) < flow.buy_fraction ? Side::Buy : Side::Sell;
      const PlacementMixture& mix = side == Side::Buy ? flow.buy : flow.sell;
      double x = sample_x(mix, rng);
      const auto ctx = engine.context();
      auto refs = reference_prices(ctx);
      // Without a measurable reference, anchor on the other quote or the close.
      auto& own = side == Side::Buy ? refs.buy : refs.sell;
      const auto& other = side == Side::Buy ? refs.sell : refs.buy;
      if (!own) own = other ? *other : log_price(cfg.prev_close);
      TickPrice price = x_to_price(x, side, *own, band);
      // A nonzero draw clamped onto a reference sitting at the band edge would
      // pose as the atom; redraw it from the nonzero part.
      const TickPrice at_reference = x_to_price(0.0, side, *own, band);
      for (int tries = 0; x != 0.0 && price == at_reference && mix.p_zero < 1.0 && tries < kMaxRedraws; ++tries) {
        x = sample_nonzero_x(mix, rng);
        price = x_to_price(x, side, *own, band);
      }
      const Order o{next_id++, ts, seq++, side, price, sample_size(cfg, rng)};
      emit(OrderEvent::place(o));
      cancel_candidates.push_back(o.id);
    }
  }
  return events;
}

/// Synthetic multi-stock stream plus the configuration that produced it.
struct SyntheticStream {
  std::vector<FlowRecord> records;
  GeneratorConfig config;
};

inline std::string stock_code_at(const GeneratorConfig& cfg, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(std::stoull(cfg.stock_code) + index));
  return buf;
}

/// Pools `cfg.stocks` independent stock-days into one (ts, seq)-sorted stream.
inline SyntheticStream generate_stream(const GeneratorConfig& cfg) {
  validate(cfg);
  std::vector<FlowRecord> all;
  for (std::size_t s = 0; s < cfg.stocks; ++s) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(s)};
    Rng rng(seq);
    const auto code = stock_code_at(cfg, s);
    for (const auto& ev : generate_day(cfg, rng)) all.push_back(FlowRecord{code, ev});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const FlowRecord& a, const FlowRecord& b) { return a.event.ts < b.event.ts; });
  std::uint64_t seq = 1;
  for (auto& rec : all) rec.event.seq = seq++;
  return SyntheticStream{std::move(all), cfg};
}

// ---------------------------------------------------------------------------
// Flat key = value configuration text.

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::map<std::string, double*> mixture_fields(PlacementMixture& m) {
  return {{"p_zero", &m.p_zero},         {"p_bulk_pos", &m.p_bulk_pos}, {"p_bulk_neg", &m.p_bulk_neg},
          {"p_tail_pos", &m.p_tail_pos}, {"p_tail_neg", &m.p_tail_neg}, {"p_boost", &m.p_boost},
          {"alpha_pos", &m.alpha_pos},   {"alpha_neg", &m.alpha_neg},   {"x_min", &m.x_min},
          {"x_bulk_max", &m.x_bulk_max}, {"tail_rate", &m.tail_rate}};
}

}  // namespace detail

/// Reads `key = value` lines ('#' starts a comment) over the defaults.
inline GeneratorConfig parse_generator_config(std::istream& in, const std::string& source = "<config>",
                                              GeneratorConfig cfg = default_generator_config()) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fail = [&](const std::string& what) {
      throw Error(Errc::InvalidConfig, source + ":" + std::to_string(line_no) + ": " + what);
    };
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const auto key = detail::trim(std::string_view(text).substr(0, eq));
    const auto value = detail::trim(std::string_view(text).substr(eq + 1));

    auto as_double = [&] {
      auto v = detail::parse_number<double>(value);
      if (!v) fail("bad number for " + key);
      return *v;
    };
    auto as_uint = [&] {
      auto v = detail::parse_number<std::uint64_t>(value);
      if (!v) fail("bad integer for " + key);
      return *v;
    };

    if (key == "stock_code") cfg.stock_code = value;
    else if (key == "stocks") cfg.stocks = as_uint();
    else if (key == "prev_close") cfg.prev_close = TickPrice{static_cast<std::int64_t>(as_uint())};
    else if (key == "seed") cfg.seed = as_uint();
    else if (key == "cancel_fraction") cfg.cancel_fraction = as_double();
    else if (key == "size_min") cfg.size_min = static_cast<Quantity>(as_uint());
    else if (key == "size_max") cfg.size_max = static_cast<Quantity>(as_uint());
    else {
      // <phase>.count, <phase>.buy_fraction, <phase>.<buy|sell>.<field>
      const auto dot = key.find('.');
      if (dot == std::string::npos) fail("unknown key " + key);
      const auto phase_name = key.substr(0, dot);
      const auto phase = parse_phase(phase_name);
      if (!phase) fail("unknown phase in " + key);
      PhaseFlow& flow = *phase == TradingPhase::OpeningCallAuction ? cfg.call
                        : *phase == TradingPhase::CoolPeriod       ? cfg.cool
                                                                   : cfg.cda;
      const auto rest = key.substr(dot + 1);
      if (rest == "count") flow.count = as_uint();
      else if (rest == "buy_fraction") flow.buy_fraction = as_double();
      else {
        const auto dot2 = rest.find('.');
        const auto side = rest.substr(0, dot2);
        if (dot2 == std::string::npos || (side != "buy" && side != "sell")) fail("unknown key " + key);
        auto fields = detail::mixture_fields(side == "buy" ? flow.buy : flow.sell);
        auto it = fields.find(rest.substr(dot2 + 1));
        if (it == fields.end()) fail("unknown key " + key);
        *it->second = as_double();
      }
    }
  }
  return cfg;
}

/// Writes every field, so the output reproduces the config exactly when parsed.
inline void write_generator_config(std::ostream& out, const GeneratorConfig& cfg) {
  out << "stock_code = " << cfg.stock_code << '\n'
      << "stocks = " << cfg.stocks << '\n'
      << "prev_close = " << cfg.prev_close.ticks << '\n'
      << "seed = " << cfg.seed << '\n'
      << "cancel_fraction = " << detail::format_double(cfg.cancel_fraction) << '\n'
      << "size_min = " << cfg.size_min << '\n'
      << "size_max = " << cfg.size_max << '\n';
  GeneratorConfig copy = cfg;
  const std::pair<const char*, PhaseFlow*> phases[] = {{"call", &copy.call}, {"cool", &copy.cool}, {"cda", &copy.cda}};
  for (const auto& [name, flow] : phases) {
    out << name << ".count = " << flow->count << '\n'
        << name << ".buy_fraction = " << detail::format_double(flow->buy_fraction) << '\n';
    for (const auto& [side, mix] : {std::pair{"buy", &flow->buy}, std::pair{"sell", &flow->sell}})
      for (const auto& [field, ptr] : detail::mixture_fields(*mix))
        out << name << '.' << side << '.' << field << " = " << detail::format_double(*ptr) << '\n';
  }
}

}  // namespace oplab
