#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "oplab/error.hpp"
#include "oplab/market.hpp"
#include "oplab/order_book.hpp"

namespace oplab {

/// Linear histogram bins anchored on x = 0 and covering [lo, hi].
struct Binning {
  double lo{-0.2007};
  double hi{0.2007};
  double width{0.002};
};

struct PdfEstimate {
  std::vector<double> edges;    // size = density.size() + 1
  std::vector<double> density;  // normalised over in-range samples
  std::size_t sample_count{0};
  std::size_t in_range_count{0};
  std::size_t zero_count{0};  // samples exactly at x = 0

  /// Fraction of all samples sitting exactly on x = 0.
  double zero_mass() const {
    return sample_count == 0 ? 0.0 : static_cast<double>(zero_count) / static_cast<double>(sample_count);
  }
  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) s += density[i] * (edges[i + 1] - edges[i]);
    return s;
  }
  double midpoint(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
};

inline PdfEstimate estimate_pdf(std::span<const double> samples, const Binning& binning = {}) {
  if (samples.empty()) throw Error(Errc::EmptySample);
  if (!(binning.width > 0.0) || !(binning.hi > binning.lo))
    throw Error(Errc::InvalidArgument, "binning needs width > 0 and hi > lo");

  const auto k_lo = static_cast<long>(std::floor(binning.lo / binning.width));
  const auto k_hi = static_cast<long>(std::ceil(binning.hi / binning.width));
  const auto nbins = static_cast<std::size_t>(k_hi - k_lo);

  PdfEstimate pdf;
  pdf.edges.resize(nbins + 1);
  for (std::size_t i = 0; i <= nbins; ++i)
    pdf.edges[i] = static_cast<double>(k_lo + static_cast<long>(i)) * binning.width;
  std::vector<std::size_t> counts(nbins, 0);
  pdf.sample_count = samples.size();
  for (double x : samples) {
    if (x == 0.0) ++pdf.zero_count;
    const double k = std::floor(x / binning.width) - static_cast<double>(k_lo);
    if (!(k >= 0.0) || k >= static_cast<double>(nbins)) continue;
    ++counts[static_cast<std::size_t>(k)];
    ++pdf.in_range_count;
  }
  if (pdf.in_range_count == 0) throw Error(Errc::EmptySample, "no sample inside the binning range");

  pdf.density.resize(nbins);
  const auto n = static_cast<double>(pdf.in_range_count);
  for (std::size_t i = 0; i < nbins; ++i)
    pdf.density[i] = static_cast<double>(counts[i]) / (n * (pdf.edges[i + 1] - pdf.edges[i]));
  return pdf;
}

struct PowerLawFit {
  double alpha{0.0};
  double stderr_alpha{0.0};
  double x_lo{0.0};
  double x_hi{0.0};
  double r2{0.0};
  std::size_t bins_used{0};
  std::size_t samples_in_range{0};
};

namespace detail {

inline PowerLawFit ols_log_log(const std::vector<double>& log_x, const std::vector<double>& log_f) {
  const auto n = static_cast<double>(log_x.size());
  const double mx = std::accumulate(log_x.begin(), log_x.end(), 0.0) / n;
  const double my = std::accumulate(log_f.begin(), log_f.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < log_x.size(); ++i) {
    sxx += (log_x[i] - mx) * (log_x[i] - mx);
    sxy += (log_x[i] - mx) * (log_f[i] - my);
    syy += (log_f[i] - my) * (log_f[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < log_x.size(); ++i) {
    const double r = log_f[i] - (intercept + slope * log_x[i]);
    ssr += r * r;
  }
  PowerLawFit fit;
  // f ~ x^-(1 + alpha)
  fit.alpha = -slope - 1.0;
  fit.stderr_alpha = log_x.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  fit.bins_used = log_x.size();
  return fit;
}

inline void check_fit_range(double x_lo, double x_hi) {
  if (!(x_lo > 0.0) || !(x_hi > x_lo))
    throw Error(Errc::InsufficientRange, "fit range needs 0 < x_lo < x_hi");
}

}  // namespace detail

inline constexpr std::size_t kMinFitBins = 5;

/// Least-squares exponent of f(x) ~ x^-(1+alpha) on log-spaced bins.
///
/// Samples outside [x_lo, x_hi] (including the x = 0 atom and every negative
/// value) only contribute to the normalisation.
inline PowerLawFit fit_power_law(std::span<const double> samples, double x_lo, double x_hi,
                                 int bins_per_decade = 20) {
  detail::check_fit_range(x_lo, x_hi);
  if (bins_per_decade < 1) throw Error(Errc::InvalidArgument, "bins_per_decade must be >= 1");
  if (samples.empty()) throw Error(Errc::EmptyBins, "no samples");

  const double decades = std::log10(x_hi / x_lo);
  const auto nbins = static_cast<std::size_t>(std::max(1.0, std::ceil(decades * bins_per_decade - 1e-9)));
  const double log_lo = std::log(x_lo);
  const double log_step = (std::log(x_hi) - log_lo) / static_cast<double>(nbins);

  std::vector<std::size_t> counts(nbins, 0);
  std::size_t in_range = 0;
  for (double x : samples) {
    if (!(x >= x_lo && x <= x_hi)) continue;
    auto k = static_cast<std::size_t>((std::log(x) - log_lo) / log_step);
    if (k >= nbins) k = nbins - 1;
    ++counts[k];
    ++in_range;
  }
  if (in_range == 0) throw Error(Errc::EmptyBins, "no samples inside the fit range");

  const auto total = static_cast<double>(samples.size());
  std::vector<double> log_x, log_f;
  for (std::size_t k = 0; k < nbins; ++k) {
    if (counts[k] == 0) continue;
    const double a = std::exp(log_lo + log_step * static_cast<double>(k));
    const double b = std::exp(log_lo + log_step * static_cast<double>(k + 1));
    log_x.push_back(log_lo + log_step * (static_cast<double>(k) + 0.5));
    log_f.push_back(std::log(static_cast<double>(counts[k]) / (total * (b - a))));
  }
  if (log_x.size() < kMinFitBins)
    throw Error(Errc::InsufficientRange, "fewer than 5 populated bins in the fit range");

  auto fit = detail::ols_log_log(log_x, log_f);
  fit.x_lo = x_lo;
  fit.x_hi = x_hi;
  fit.samples_in_range = in_range;
  return fit;
}

/// Same fit on an existing linear-bin estimate (bins whose midpoint is in range).
inline PowerLawFit fit_power_law(const PdfEstimate& pdf, double x_lo, double x_hi) {
  detail::check_fit_range(x_lo, x_hi);
  std::vector<double> log_x, log_f;
  for (std::size_t i = 0; i < pdf.density.size(); ++i) {
    const double mid = pdf.midpoint(i);
    if (mid < x_lo || mid > x_hi || pdf.density[i] <= 0.0) continue;
    log_x.push_back(std::log(mid));
    log_f.push_back(std::log(pdf.density[i]));
  }
  if (log_x.empty()) throw Error(Errc::EmptyBins, "no populated bins in the fit range");
  if (log_x.size() < kMinFitBins)
    throw Error(Errc::InsufficientRange, "fewer than 5 populated bins in the fit range");
  auto fit = detail::ols_log_log(log_x, log_f);
  fit.x_lo = x_lo;
  fit.x_hi = x_hi;
  return fit;
}

/// Log spread ln(ask) - ln(bid).
inline double spread(TickPrice bid, TickPrice ask) {
  return log_price(ask).value - log_price(bid).value;
}

inline double spread(const Quotes& q) {
  if (!q.two_sided()) throw Error(Errc::MissingQuote, "spread needs both best quotes");
  return spread(*q.best_bid, *q.best_ask);
}

/// Log mid-price, or nothing for a one-sided book.
inline std::optional<double> mid_price(const Quotes& q) {
  if (!q.two_sided()) return std::nullopt;
  return 0.5 * (log_price(*q.best_ask).value + log_price(*q.best_bid).value);
}

inline constexpr int kVolatilityWindow = 50;

/// Mean absolute mid-price return over the last N returns.
///
/// Element j of the result is v at index t = N + j of `mids`.
inline std::vector<double> volatility(std::span<const double> mids, int window = kVolatilityWindow) {
  if (window < 1) throw Error(Errc::InvalidArgument, "window must be >= 1");
  const auto n = static_cast<std::size_t>(window);
  if (mids.size() < n + 1)
    throw Error(Errc::InsufficientHistory, "need at least N + 1 mid-prices");
  std::vector<double> out;
  out.reserve(mids.size() - n);
  for (std::size_t t = n; t < mids.size(); ++t) {
    double sum = 0.0;
    for (std::size_t i = t - n + 1; i <= t; ++i) sum += std::abs(mids[i] - mids[i - 1]);
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

/// Streaming form of volatility() for event-by-event annotation.
class RollingVolatility {
 public:
  explicit RollingVolatility(int window = kVolatilityWindow) : window_(static_cast<std::size_t>(window)) {
    if (window < 1) throw Error(Errc::InvalidArgument, "window must be >= 1");
  }

  void push(double mid) {
    if (last_) {
      const double r = std::abs(mid - *last_);
      returns_.push_back(r);
      if (returns_.size() > window_) returns_.pop_front();
    }
    last_ = mid;
  }

  std::optional<double> value() const {
    if (returns_.size() < window_) return std::nullopt;
    // Summed oldest-first, exactly as volatility() does.
    double s = 0.0;
    for (double r : returns_) s += r;
    return s / static_cast<double>(window_);
  }

 private:
  std::size_t window_;
  std::deque<double> returns_;
  std::optional<double> last_;
};

/// Equal-count groups of x sorted by a context value.
struct ConditionalGroups {
  std::vector<std::vector<double>> samples;
  std::vector<PdfEstimate> pdfs;
  std::vector<std::pair<double, double>> key_range;
};

/// Sizes of `groups` near-equal parts; the remainder goes to the earliest groups.
inline std::vector<std::size_t> group_sizes(std::size_t n, std::size_t groups) {
  std::vector<std::size_t> sizes(groups, n / groups);
  for (std::size_t g = 0; g < n % groups; ++g) ++sizes[g];
  return sizes;
}

inline ConditionalGroups conditional_pdfs(std::span<const double> x, std::span<const double> key,
                                          std::size_t groups = 4, const Binning& binning = {}) {
  if (x.size() != key.size()) throw Error(Errc::InvalidArgument, "x and key sizes differ");
  if (groups < 1) throw Error(Errc::InvalidArgument, "groups must be >= 1");
  if (x.size() < groups) throw Error(Errc::EmptySample, "fewer samples than groups");

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });

  ConditionalGroups out;
  std::size_t pos = 0;
  for (std::size_t size : group_sizes(x.size(), groups)) {
    std::vector<double> xs;
    xs.reserve(size);
    for (std::size_t i = pos; i < pos + size; ++i) xs.push_back(x[order[i]]);
    out.key_range.emplace_back(key[order[pos]], key[order[pos + size - 1]]);
    out.pdfs.push_back(estimate_pdf(xs, binning));
    out.samples.push_back(std::move(xs));
    pos += size;
  }
  return out;
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b| on raw samples.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::EmptySample);
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto na = static_cast<double>(sa.size());
  const auto nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    // Step past every copy of the smaller value so ties move both CDFs together.
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double compare_pdfs(std::span<const double> a, std::span<const double> b) {
  return ks_statistic(a, b);
}

/// Asymptotic critical value of the two-sample statistic at level `alpha`.
inline double ks_critical_value(std::size_t n, std::size_t m, double alpha = 0.01) {
  if (n == 0 || m == 0) throw Error(Errc::EmptySample);
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const auto nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

/// Asymptotic p-value of a two-sample statistic (Kolmogorov distribution).
inline double ks_p_value(double d, std::size_t n, std::size_t m) {
  const auto nn = static_cast<double>(n), mm = static_cast<double>(m);
  const double ne = nn * mm / (nn + mm);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace oplab
