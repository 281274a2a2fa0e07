#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oplab/micro_stats.hpp"
#include "oracles.hpp"

namespace oplab {
namespace {

// Inverse CDF of f(x) ~ x^-(1+alpha) on [lo, hi], written out independently.
std::vector<double> pareto_draws(double alpha, double lo, double hi, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> out(n);
  const double a = std::pow(lo, -alpha), b = std::pow(hi, -alpha);
  for (auto& x : out) x = std::pow(a - u01(rng) * (a - b), -1.0 / alpha);
  return out;
}

TEST(EstimatePdf, UniformIsFlat) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  std::vector<double> xs(1'000'000);
  for (auto& x : xs) x = u(rng);
  const auto pdf = estimate_pdf(xs);
  EXPECT_NEAR(pdf.integral(), 1.0, 1e-9);
  // Each 0.002 bin holds ~10^4 samples: relative sd 1%, allow 5 sd.
  for (std::size_t i = 0; i < pdf.density.size(); ++i) {
    const double mid = pdf.midpoint(i);
    if (mid > 0.0 && mid < 0.2) {
      EXPECT_NEAR(pdf.density[i], 5.0, 0.25) << mid;
    } else {
      EXPECT_EQ(pdf.density[i], 0.0) << mid;
    }
  }
}

TEST(EstimatePdf, BinsAnchoredOnZeroAndCoverDomain) {
  const std::vector<double> xs{0.0};
  const auto pdf = estimate_pdf(xs);
  EXPECT_LE(pdf.edges.front(), -0.2007);
  EXPECT_GE(pdf.edges.back(), 0.2007);
  bool has_zero_edge = false;
  for (double e : pdf.edges) has_zero_edge |= e == 0.0;
  EXPECT_TRUE(has_zero_edge);
  for (std::size_t i = 0; i + 1 < pdf.edges.size(); ++i) EXPECT_NEAR(pdf.edges[i + 1] - pdf.edges[i], 0.002, 1e-12);
}

TEST(EstimatePdf, AllZeroIsFullAtom) {
  const std::vector<double> xs(1000, 0.0);
  const auto pdf = estimate_pdf(xs);
  EXPECT_EQ(pdf.zero_mass(), 1.0);
  EXPECT_NEAR(pdf.integral(), 1.0, 1e-9);
}

TEST(EstimatePdf, UnitIntegralOnRandomInputs) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    std::normal_distribution<double> g(0.0, 0.01 + 0.1 * (rep % 7));
    std::vector<double> xs(1 + rng() % 5000);
    for (auto& x : xs) x = rep % 3 == 0 ? std::round(g(rng) * 100.0) / 100.0 : g(rng);
    xs[0] = 0.0;
    const auto pdf = estimate_pdf(xs);
    ASSERT_NEAR(pdf.integral(), 1.0, 1e-9);
    ASSERT_LE(pdf.in_range_count, pdf.sample_count);
  }
}

TEST(EstimatePdf, Errors) {
  try {
    estimate_pdf(std::vector<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptySample);
  }
  EXPECT_THROW(estimate_pdf(std::vector<double>{5.0}), Error);
}

TEST(FitPowerLaw, RecoversKnownExponent) {
  const auto xs = pareto_draws(1.5, 1e-3, 1e-1, 1'000'000, 42);
  const auto fit = fit_power_law(xs, 2e-3, 5e-2);
  EXPECT_NEAR(fit.alpha, 1.5, 0.05);
  EXPECT_GE(fit.stderr_alpha, 0.0);
  EXPECT_GT(fit.r2, 0.99);
  EXPECT_EQ(fit.x_lo, 2e-3);
  EXPECT_EQ(fit.x_hi, 5e-2);
}

TEST(FitPowerLaw, WithinTwoStandardErrorsAcrossExponents) {
  std::uint64_t seed = 100;
  for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
    const auto xs = pareto_draws(alpha, 1e-3, 1e-1, 1'000'000, seed++);
    const auto fit = fit_power_law(xs, 1e-3, 1e-1);
    EXPECT_NEAR(fit.alpha, alpha, 0.05) << alpha;
    EXPECT_LE(std::abs(fit.alpha - alpha), 2.0 * fit.stderr_alpha + 0.01) << alpha << " se " << fit.stderr_alpha;
  }
}

TEST(FitPowerLaw, IgnoresAtomAndNegativeSide) {
  auto xs = pareto_draws(1.0, 1e-3, 1e-1, 200'000, 9);
  xs.insert(xs.end(), 50'000, 0.0);
  for (int i = 0; i < 50'000; ++i) xs.push_back(-0.01);
  EXPECT_NEAR(fit_power_law(xs, 2e-3, 5e-2).alpha, 1.0, 0.1);
}

TEST(FitPowerLaw, LinearBinPdfVariant) {
  const auto xs = pareto_draws(1.0, 1e-3, 1e-1, 1'000'000, 5);
  const auto pdf = estimate_pdf(xs);
  // Linear 0.002 bins are coarse near 0.003; stay above a few bin widths.
  EXPECT_NEAR(fit_power_law(pdf, 0.01, 0.1).alpha, 1.0, 0.1);
}

TEST(FitPowerLaw, Errors) {
  const std::vector<double> few{0.01, 0.011, 0.012};
  try {
    fit_power_law(few, 0.005, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientRange);
  }
  try {
    fit_power_law(few, 0.1, 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyBins);
  }
  EXPECT_THROW(fit_power_law(few, 0.0, 0.05), Error);
  EXPECT_THROW(fit_power_law(few, 0.05, 0.01), Error);
}

TEST(Spread, Examples) {
  EXPECT_NEAR(spread(TickPrice{1000}, TickPrice{1002}), std::log(10.02 / 10.00), 1e-15);
  EXPECT_NEAR(spread(TickPrice{1000}, TickPrice{1002}), 0.0019980, 1e-7);
  EXPECT_EQ(spread(TickPrice{1000}, TickPrice{1000}), 0.0);
  try {
    spread(Quotes{TickPrice{1000}, std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingQuote);
  }
}

TEST(Volatility, ConstantMidIsZero) {
  const std::vector<double> mids(60, 2.3);
  for (double v : volatility(mids)) EXPECT_EQ(v, 0.0);
}

TEST(Volatility, AlternatingSeries) {
  const double delta = 0.0015;
  std::vector<double> mids;
  for (int i = 0; i < 120; ++i) mids.push_back(2.3 + (i % 2 ? delta : -delta));
  const auto v = volatility(mids);
  ASSERT_EQ(v.size(), 70u);
  for (double x : v) EXPECT_NEAR(x, 2.0 * delta, 1e-15);
}

TEST(Volatility, InsufficientHistory) {
  const std::vector<double> mids(50, 1.0);
  try {
    volatility(mids);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientHistory);
  }
  EXPECT_EQ(volatility(std::vector<double>(51, 1.0)).size(), 1u);
}

TEST(Volatility, RollingMatchesBatchExactly) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.001);
  std::vector<double> mids{2.0};
  for (int i = 0; i < 1000; ++i) mids.push_back(mids.back() + g(rng));
  const auto batch = volatility(mids, 50);
  RollingVolatility roll(50);
  std::vector<double> streamed;
  for (double m : mids) {
    roll.push(m);
    if (auto v = roll.value()) streamed.push_back(*v);
  }
  EXPECT_EQ(streamed, batch);
  for (double v : batch) EXPECT_GE(v, 0.0);
}

TEST(GroupSizes, RemainderToEarliest) {
  EXPECT_EQ(group_sizes(8, 4), (std::vector<std::size_t>{2, 2, 2, 2}));
  EXPECT_EQ(group_sizes(10, 4), (std::vector<std::size_t>{3, 3, 2, 2}));
  for (std::size_t n = 4; n < 200; ++n) {
    const auto s = group_sizes(n, 4);
    ASSERT_EQ(std::accumulate(s.begin(), s.end(), std::size_t{0}), n);
    ASSERT_LE(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()), 1u);
  }
}

TEST(ConditionalPdfs, PartitionsInKeyOrderWithStableTies) {
  std::vector<double> x, key;
  for (int i = 0; i < 10; ++i) {
    x.push_back(0.001 * i);
    key.push_back(i < 6 ? 1.0 : 0.5);  // ties: input order must survive
  }
  const auto g = conditional_pdfs(x, key, 4);
  ASSERT_EQ(g.samples.size(), 4u);
  EXPECT_EQ(g.samples[0], (std::vector<double>{x[6], x[7], x[8]}));
  EXPECT_EQ(g.samples[1], (std::vector<double>{x[9], x[0], x[1]}));
  EXPECT_EQ(g.samples[2], (std::vector<double>{x[2], x[3]}));
  EXPECT_EQ(g.samples[3], (std::vector<double>{x[4], x[5]}));
  EXPECT_EQ(g.key_range[0], (std::pair{0.5, 0.5}));
  EXPECT_EQ(g.key_range[1], (std::pair{0.5, 1.0}));
}

TEST(ConditionalPdfs, IndependentContextGivesMatchingGroups) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gx(0.0, 0.03), gk(0.0, 1.0);
  std::vector<double> x(40'000), key(40'000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = gx(rng);
    key[i] = gk(rng);
  }
  const auto g = conditional_pdfs(x, key, 4);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      const double d = ks_statistic(g.samples[a], g.samples[b]);
      EXPECT_LT(d, ks_critical_value(g.samples[a].size(), g.samples[b].size(), 0.01)) << a << "," << b;
    }
}

TEST(KsStatistic, IdenticalSetsGiveZero) {
  const std::vector<double> a{0.1, 0.2, 0.2, 0.5};
  EXPECT_EQ(ks_statistic(a, a), 0.0);
}

TEST(KsStatistic, SeparatedNormals) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g0(0.0, 1.0), g3(3.0, 1.0);
  std::vector<double> a(10'000), b(10'000);
  for (auto& v : a) v = g0(rng);
  for (auto& v : b) v = g3(rng);
  const double d = ks_statistic(a, b);
  EXPECT_GT(d, 0.8);
  EXPECT_NEAR(d, oracle::ecdf_ks(a, b), 1e-12);
  EXPECT_LT(ks_p_value(d, a.size(), b.size()), 1e-6);
}

TEST(KsStatistic, MatchesEcdfOracleWithTies) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> a(1 + rng() % 60), b(1 + rng() % 60);
    for (auto& v : a) v = static_cast<double>(rng() % 7);
    for (auto& v : b) v = static_cast<double>(rng() % 9);
    const double d = ks_statistic(a, b);
    ASSERT_NEAR(d, oracle::ecdf_ks(a, b), 1e-12);
    ASSERT_GE(d, 0.0);
    ASSERT_LE(d, 1.0);
  }
  EXPECT_THROW(ks_statistic(std::vector<double>{}, std::vector<double>{1.0}), Error);
}

TEST(KsCriticalValue, KnownCoefficient) {
  // c(0.01) = 1.6276 for the asymptotic two-sample test.
  EXPECT_NEAR(ks_critical_value(1'000'000, 1'000'000, 0.01) / std::sqrt(2.0 / 1e6), 1.6276, 1e-4);
  EXPECT_NEAR(ks_p_value(1.6276 * std::sqrt(2.0 / 2e6), 2'000'000, 2'000'000), 0.01, 5e-4);
}

}  // namespace
}  // namespace oplab
