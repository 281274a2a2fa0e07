#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "oplab/auction.hpp"
#include "oplab/error.hpp"
#include "oplab/market.hpp"
#include "oplab/micro_stats.hpp"
#include "oplab/order_book.hpp"
#include "oplab/relative_price.hpp"

namespace oplab {

inline constexpr std::string_view kFlowHeader = "stock,ts_cs,seq,action,order_id,side,price_ticks,size";
inline constexpr std::string_view kTradesHeader = "ts_cs,price_ticks,size,buy_id,sell_id";
inline constexpr std::string_view kQuotesHeader = "ts_cs,best_bid,best_ask";
inline constexpr std::string_view kVirtualPriceHeader = "ts_cs,seq,action,pi_v_ticks,volume";
inline constexpr std::string_view kSamplesHeader = "ts_cs,phase,side,x,spread_before,vol_before";
inline constexpr std::string_view kPdfHeader = "x_mid,density";
inline constexpr std::string_view kFitHeader = "alpha,stderr,x_lo,x_hi,r2,bins,samples";

/// One line of an order-flow file.
struct FlowRecord {
  std::string stock;
  OrderEvent event;
  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline bool is_stock_code(std::string_view s) {
  if (s.size() != 6) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace detail

/// Streaming reader for order-flow files with line-numbered diagnostics.
class FlowReader {
 public:
  FlowReader(std::istream& in, std::string source = "<flow>") : in_(in), source_(std::move(source)) {
    std::string header;
    if (!std::getline(in_, header)) fail(Errc::MalformedLine, "missing header");
    ++line_no_;
    if (detail::chomp(header) != kFlowHeader) fail(Errc::MalformedLine, "unexpected header");
  }

  std::optional<FlowRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto text = detail::chomp(line);
      if (text.empty()) continue;
      FlowRecord rec = parse_line(text);
      const auto key = std::pair(rec.event.ts, rec.event.seq);
      if (last_ && key < *last_) fail(Errc::UnsortedStream, "(ts, seq) decreases");
      last_ = key;
      return rec;
    }
    return std::nullopt;
  }

  std::size_t line_number() const noexcept { return line_no_; }

 private:
  [[noreturn]] void fail(Errc code, const std::string& what) const {
    throw Error(code, source_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  FlowRecord parse_line(std::string_view text) const {
    const auto f = detail::split_csv(text);
    if (f.size() != 8) fail(Errc::MalformedLine, "expected 8 fields, got " + std::to_string(f.size()));
    FlowRecord rec;
    if (!detail::is_stock_code(f[0])) fail(Errc::MalformedLine, "stock code must be 6 digits");
    rec.stock = std::string(f[0]);
    auto& ev = rec.event;
    const auto ts = detail::parse_number<std::int64_t>(f[1]);
    if (!ts || *ts < 0 || *ts >= kCentisecondsPerDay) fail(Errc::MalformedLine, "bad ts_cs");
    ev.ts = Timestamp{*ts};
    const auto seq = detail::parse_number<std::uint64_t>(f[2]);
    if (!seq) fail(Errc::MalformedLine, "bad seq");
    ev.seq = *seq;
    const auto id = detail::parse_number<std::uint64_t>(f[4]);
    if (!id) fail(Errc::MalformedLine, "bad order_id");
    ev.id = *id;
    if (f[3] == "P") {
      ev.action = OrderEvent::Action::Place;
      if (f[5] == "B")
        ev.side = Side::Buy;
      else if (f[5] == "S")
        ev.side = Side::Sell;
      else
        fail(Errc::MalformedLine, "side must be B or S");
      const auto price = detail::parse_number<std::int64_t>(f[6]);
      if (!price || *price < 1) fail(Errc::MalformedLine, "bad price_ticks");
      ev.price = TickPrice{*price};
      const auto size = detail::parse_number<std::int64_t>(f[7]);
      if (!size || *size < 1) fail(Errc::MalformedLine, "bad size");
      ev.size = *size;
    } else if (f[3] == "C") {
      if (!f[5].empty() || !f[6].empty() || !f[7].empty())
        fail(Errc::MalformedLine, "cancel records leave side, price and size empty");
      ev = OrderEvent::cancel(ev.ts, ev.seq, ev.id);
    } else {
      fail(Errc::MalformedLine, "action must be P or C");
    }
    return rec;
  }

  std::istream& in_;
  std::string source_;
  std::size_t line_no_{0};
  std::optional<std::pair<Timestamp, std::uint64_t>> last_;
};

inline std::vector<FlowRecord> parse_flow(std::istream& in, const std::string& source = "<flow>") {
  FlowReader reader(in, source);
  std::vector<FlowRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

inline std::vector<FlowRecord> parse_flow_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse_flow(in, path);
}

inline void write_flow_record(std::ostream& out, const FlowRecord& rec) {
  const auto& ev = rec.event;
  out << rec.stock << ',' << ev.ts.cs << ',' << ev.seq << ',';
  if (ev.is_place())
    out << "P," << ev.id << ',' << side_code(ev.side) << ',' << ev.price.ticks << ',' << ev.size << '\n';
  else
    out << "C," << ev.id << ",,,\n";
}

inline void write_flow(std::ostream& out, std::span<const FlowRecord> records) {
  out << kFlowHeader << '\n';
  for (const auto& rec : records) write_flow_record(out, rec);
  if (!out) throw Error(Errc::Io, "write failed");
}

inline void write_flow_file(const std::string& path, std::span<const FlowRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path + " for writing");
  write_flow(out, records);
}

/// Splits a multi-stock stream into per-stock event lists (stable order).
inline std::map<std::string, std::vector<OrderEvent>> demux_by_stock(std::span<const FlowRecord> records) {
  std::map<std::string, std::vector<OrderEvent>> out;
  for (const auto& rec : records) out[rec.stock].push_back(rec.event);
  return out;
}

inline void write_trades(std::ostream& out, std::span<const Trade> trades) {
  out << kTradesHeader << '\n';
  for (const auto& t : trades)
    out << t.ts.cs << ',' << t.price.ticks << ',' << t.size << ',' << t.buy_order_id << ','
        << t.sell_order_id << '\n';
}

inline void write_quotes(std::ostream& out, std::span<const QuotePoint> quotes) {
  out << kQuotesHeader << '\n';
  for (const auto& q : quotes) {
    out << q.ts.cs << ',';
    if (q.quotes.best_bid) out << q.quotes.best_bid->ticks;
    out << ',';
    if (q.quotes.best_ask) out << q.quotes.best_ask->ticks;
    out << '\n';
  }
}

inline void write_virtual_prices(std::ostream& out, std::span<const VirtualPricePoint> points) {
  out << kVirtualPriceHeader << '\n';
  for (const auto& p : points) {
    out << p.ts.cs << ',' << p.seq << ',' << (p.on_placement ? 'P' : 'C') << ',';
    if (p.virtual_price) out << p.virtual_price->price.ticks << ',' << p.virtual_price->volume;
    else out << ",0";
    out << '\n';
  }
}

inline void write_samples(std::ostream& out, std::span<const RelPriceSample> samples) {
  out << kSamplesHeader << '\n';
  for (const auto& s : samples) {
    out << s.ts.cs << ',' << to_string(s.phase) << ',' << side_code(s.side) << ','
        << detail::format_double(s.x) << ',';
    if (s.spread_before) out << detail::format_double(*s.spread_before);
    out << ',';
    if (s.vol_before) out << detail::format_double(*s.vol_before);
    out << '\n';
  }
}

inline std::optional<TradingPhase> parse_phase(std::string_view s) {
  if (s == "call") return TradingPhase::OpeningCallAuction;
  if (s == "cool") return TradingPhase::CoolPeriod;
  if (s == "cda") return TradingPhase::ContinuousAuction;
  return std::nullopt;
}

inline std::vector<RelPriceSample> read_samples(std::istream& in, const std::string& source = "<samples>") {
  std::string line;
  std::size_t line_no = 1;
  auto fail = [&](const std::string& what) {
    throw Error(Errc::MalformedLine, source + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line) || detail::chomp(line) != kSamplesHeader) fail("unexpected header");
  std::vector<RelPriceSample> out;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::chomp(line);
    if (text.empty()) continue;
    const auto f = detail::split_csv(text);
    if (f.size() != 6) fail("expected 6 fields");
    RelPriceSample s;
    const auto ts = detail::parse_number<std::int64_t>(f[0]);
    const auto phase = parse_phase(f[1]);
    const auto x = detail::parse_number<double>(f[3]);
    if (!ts || !phase || !x || (f[2] != "B" && f[2] != "S")) fail("bad sample fields");
    s.ts = Timestamp{*ts};
    s.phase = *phase;
    s.side = f[2] == "B" ? Side::Buy : Side::Sell;
    s.x = *x;
    if (!f[4].empty()) {
      s.spread_before = detail::parse_number<double>(f[4]);
      if (!s.spread_before) fail("bad spread_before");
    }
    if (!f[5].empty()) {
      s.vol_before = detail::parse_number<double>(f[5]);
      if (!s.vol_before) fail("bad vol_before");
    }
    out.push_back(s);
  }
  return out;
}

inline void write_pdf(std::ostream& out, const PdfEstimate& pdf) {
  out << kPdfHeader << '\n';
  for (std::size_t i = 0; i < pdf.density.size(); ++i)
    out << detail::format_double(pdf.midpoint(i)) << ',' << detail::format_double(pdf.density[i]) << '\n';
}

inline void write_fit_summary(std::ostream& out, const PowerLawFit& fit) {
  out << kFitHeader << '\n'
      << detail::format_double(fit.alpha) << ',' << detail::format_double(fit.stderr_alpha) << ','
      << detail::format_double(fit.x_lo) << ',' << detail::format_double(fit.x_hi) << ','
      << detail::format_double(fit.r2) << ',' << fit.bins_used << ',' << fit.samples_in_range << '\n';
}

}  // namespace oplab
