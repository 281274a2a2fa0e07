#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oplab/auction.hpp"
#include "oplab/flow_io.hpp"
#include "oplab/flow_synth.hpp"
#include "oplab/micro_stats.hpp"
#include "oplab/relative_price.hpp"

namespace oplab::cli {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kUsageError = 2 };

namespace detail {

/// "--prev-close 1000" applies to every stock; "--prev-close 000002=850" to one.
class PrevCloseTable {
 public:
  explicit PrevCloseTable(const std::vector<std::string>& specs) {
    for (const auto& spec : specs) {
      const auto eq = spec.find('=');
      const auto value = oplab::detail::parse_number<std::int64_t>(eq == std::string::npos ? spec : spec.substr(eq + 1));
      if (!value || *value < 1) throw CLI::ValidationError("--prev-close", "bad value '" + spec + "'");
      if (eq == std::string::npos) fallback_ = TickPrice{*value};
      else by_stock_[spec.substr(0, eq)] = TickPrice{*value};
    }
  }

  TickPrice at(const std::string& stock) const {
    if (auto it = by_stock_.find(stock); it != by_stock_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw Error(Errc::InvalidArgument, "no --prev-close given for stock " + stock);
  }

 private:
  std::map<std::string, TickPrice> by_stock_;
  std::optional<TickPrice> fallback_;
};

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  return out;
}

inline std::vector<RelPriceSample> read_samples_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return read_samples(in, path);
}

inline std::vector<RelPriceSample> select(const std::vector<RelPriceSample>& all, TradingPhase phase, Side side) {
  std::vector<RelPriceSample> out;
  for (const auto& s : all)
    if (s.phase == phase && s.side == side) out.push_back(s);
  return out;
}

inline Side parse_side(const std::string& s) { return s == "S" ? Side::Sell : Side::Buy; }

/// Replays every selected stock and pools the relative-price samples.
inline std::vector<RelPriceSample> replay_samples(const std::vector<FlowRecord>& records, const PrevCloseTable& closes,
                                                  const std::string& stock_filter) {
  std::vector<RelPriceSample> pooled;
  for (const auto& [stock, events] : demux_by_stock(records)) {
    if (!stock_filter.empty() && stock != stock_filter) continue;
    const auto day = run_day(events, closes.at(stock));
    const auto samples = extract_samples(day);
    pooled.insert(pooled.end(), samples.begin(), samples.end());
  }
  return pooled;
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Order-placement laboratory: replay, measure and simulate limit-order flow"};
  app.require_subcommand(1);

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a flow file through the three-phase engine");
  std::string replay_flow, replay_out = ".", replay_stock;
  std::vector<std::string> replay_closes;
  replay->add_option("--flow", replay_flow, "Order-flow file")->required();
  replay->add_option("--prev-close", replay_closes, "Previous close in ticks (N or STOCK=N)")->required();
  replay->add_option("--out-dir", replay_out, "Output directory");
  replay->add_option("--stock", replay_stock, "Only this stock code");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Relative-price samples and densities per phase and side");
  std::vector<std::string> analyze_flows;
  std::vector<std::string> analyze_closes;
  std::string analyze_out = ".", analyze_stock;
  double bin_width = 0.002;
  analyze->add_option("--flow", analyze_flows, "Order-flow file(s), pooled as one ensemble")->required();
  analyze->add_option("--prev-close", analyze_closes, "Previous close in ticks (N or STOCK=N)")->required();
  analyze->add_option("--out-dir", analyze_out, "Output directory");
  analyze->add_option("--stock", analyze_stock, "Only this stock code");
  analyze->add_option("--bin-width", bin_width, "Linear bin width")->check(CLI::PositiveNumber);

  // fit
  auto* fit = app.add_subcommand("fit", "Least-squares power-law exponent of one side of the density");
  std::string fit_samples, fit_phase = "cda", fit_side = "B", fit_tail = "pos", fit_out;
  double xlo = 0.0, xhi = 0.0;
  int bins_per_decade = 20;
  fit->add_option("--samples", fit_samples, "Samples file from analyze")->required();
  fit->add_option("--xlo", xlo, "Lower fit bound")->required();
  fit->add_option("--xhi", xhi, "Upper fit bound")->required();
  fit->add_option("--phase", fit_phase, "call | cool | cda")->check(CLI::IsMember({"call", "cool", "cda"}));
  fit->add_option("--side", fit_side, "B | S")->check(CLI::IsMember({"B", "S"}));
  fit->add_option("--tail", fit_tail, "pos (x > 0) | neg (x < 0, fitted on |x|)")->check(CLI::IsMember({"pos", "neg"}));
  fit->add_option("--bins-per-decade", bins_per_decade, "Log bins per decade")->check(CLI::PositiveNumber);
  fit->add_option("--out", fit_out, "Write the fit summary here instead of stdout");

  // condition
  auto* condition = app.add_subcommand("condition", "Densities conditioned on spread or volatility quantile groups");
  std::string cond_samples, cond_key, cond_phase = "cda", cond_side = "B", cond_out;
  std::size_t groups = 4;
  double cond_level = 0.01;
  condition->add_option("--samples", cond_samples, "Samples file from analyze")->required();
  condition->add_option("--key", cond_key, "spread | volatility")->required()->check(CLI::IsMember({"spread", "volatility"}));
  condition->add_option("--groups", groups, "Number of equal-count groups")->check(CLI::PositiveNumber);
  condition->add_option("--phase", cond_phase, "call | cool | cda")->check(CLI::IsMember({"call", "cool", "cda"}));
  condition->add_option("--side", cond_side, "B | S")->check(CLI::IsMember({"B", "S"}));
  condition->add_option("--level", cond_level, "KS significance level")->check(CLI::Range(1e-6, 0.5));
  condition->add_option("--out-dir", cond_out, "Write the group densities here");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic order-flow file");
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--config", sim_config, "Generator config (key = value)")->required();
  simulate->add_option("--seed", sim_seed, "Override the config seed");
  simulate->add_option("--out", sim_out, "Output flow file; the config is written to <out>.meta")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  namespace fs = std::filesystem;
  try {
    if (*replay) {
      const detail::PrevCloseTable closes(replay_closes);
      const auto records = parse_flow_file(replay_flow);
      fs::create_directories(replay_out);
      for (const auto& [stock, events] : demux_by_stock(records)) {
        if (!replay_stock.empty() && stock != replay_stock) continue;
        const auto day = run_day(events, closes.at(stock));
        const fs::path base = fs::path(replay_out) / stock;
        auto trades = detail::open_out(base.string() + ".trades.csv");
        write_trades(trades, day.trades);
        auto quotes = detail::open_out(base.string() + ".quotes.csv");
        write_quotes(quotes, day.quotes);
        auto vprices = detail::open_out(base.string() + ".vprice.csv");
        write_virtual_prices(vprices, day.virtual_prices);
        auto rejects = detail::open_out(base.string() + ".rejects.csv");
        rejects << "event_index,ts_cs,seq,order_id,reason\n";
        for (const auto& r : day.rejections)
          rejects << r.event_index << ',' << r.event.ts.cs << ',' << r.event.seq << ',' << r.event.id << ','
                  << to_string(r.code) << '\n';
        out << stock << ": events=" << events.size() << " trades=" << day.trades.size()
            << " rejected=" << day.rejections.size() << '\n';
      }
      return kOk;
    }

    if (*analyze) {
      const detail::PrevCloseTable closes(analyze_closes);
      std::vector<FlowRecord> records;
      for (const auto& path : analyze_flows) {
        auto part = parse_flow_file(path);
        records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      const auto samples = detail::replay_samples(records, closes, analyze_stock);
      fs::create_directories(analyze_out);
      auto sample_file = detail::open_out(fs::path(analyze_out) / "samples.csv");
      write_samples(sample_file, samples);
      Binning binning;
      binning.width = bin_width;
      out << "phase,side,samples,zero_mass\n";
      for (auto phase : {TradingPhase::OpeningCallAuction, TradingPhase::CoolPeriod, TradingPhase::ContinuousAuction}) {
        for (auto side : {Side::Buy, Side::Sell}) {
          std::vector<double> xs;
          for (const auto& s : samples)
            if (s.phase == phase && s.side == side) xs.push_back(s.x);
          if (xs.empty()) continue;
          const auto pdf = estimate_pdf(xs, binning);
          auto pdf_file = detail::open_out(fs::path(analyze_out) /
                                           ("pdf_" + std::string(to_string(phase)) + "_" + side_code(side) + ".csv"));
          write_pdf(pdf_file, pdf);
          out << to_string(phase) << ',' << side_code(side) << ',' << xs.size() << ','
              << oplab::detail::format_double(pdf.zero_mass()) << '\n';
        }
      }
      return kOk;
    }

    if (*fit) {
      const auto all = detail::read_samples_file(fit_samples);
      std::vector<double> xs;
      for (const auto& s : detail::select(all, *parse_phase(fit_phase), detail::parse_side(fit_side)))
        xs.push_back(fit_tail == "pos" ? s.x : -s.x);
      const auto result = fit_power_law(xs, xlo, xhi, bins_per_decade);
      if (fit_out.empty()) {
        write_fit_summary(out, result);
      } else {
        auto file = detail::open_out(fit_out);
        write_fit_summary(file, result);
      }
      return kOk;
    }

    if (*condition) {
      const auto all = detail::read_samples_file(cond_samples);
      const auto key = cond_key == "spread" ? ContextKey::Spread : ContextKey::Volatility;
      std::vector<RelPriceSample> chosen;
      for (const auto& s : detail::select(all, *parse_phase(cond_phase), detail::parse_side(cond_side)))
        if ((key == ContextKey::Spread ? s.spread_before : s.vol_before).has_value()) chosen.push_back(s);
      const auto result = conditional_pdfs(chosen, key, groups);
      if (!cond_out.empty()) {
        fs::create_directories(cond_out);
        for (std::size_t g = 0; g < result.pdfs.size(); ++g) {
          auto file = detail::open_out(fs::path(cond_out) /
                                       ("cond_" + cond_key + "_" + cond_side + "_g" + std::to_string(g + 1) + ".csv"));
          write_pdf(file, result.pdfs[g]);
        }
      }
      out << "group_a,group_b,n_a,n_b,ks,critical,pass\n";
      for (std::size_t a = 0; a < result.samples.size(); ++a) {
        for (std::size_t b = a + 1; b < result.samples.size(); ++b) {
          const auto& sa = result.samples[a];
          const auto& sb = result.samples[b];
          const double d = ks_statistic(sa, sb);
          const double crit = ks_critical_value(sa.size(), sb.size(), cond_level);
          out << a + 1 << ',' << b + 1 << ',' << sa.size() << ',' << sb.size() << ','
              << oplab::detail::format_double(d) << ',' << oplab::detail::format_double(crit) << ','
              << (d <= crit ? "yes" : "no") << '\n';
        }
      }
      return kOk;
    }

    if (*simulate) {
      std::ifstream in(sim_config, std::ios::binary);
      if (!in) throw Error(Errc::Io, "cannot open " + sim_config);
      auto cfg = parse_generator_config(in, sim_config);
      if (sim_seed) cfg.seed = *sim_seed;
      const auto stream = generate_stream(cfg);
      write_flow_file(sim_out, stream.records);
      auto meta = detail::open_out(sim_out + ".meta");
      write_generator_config(meta, stream.config);
      out << "wrote " << stream.records.size() << " records to " << sim_out << '\n';
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
  return kUsageError;
}

}  // namespace oplab::cli
