#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oplab/order_book.hpp"

namespace oplab {
namespace {

const PriceBand kBand = compute_band(TickPrice{1000});

Order buy(OrderId id, std::int64_t px, Quantity qty, std::int64_t ts = 0) {
  return Order{id, Timestamp{ts}, id, Side::Buy, TickPrice{px}, qty};
}
Order sell(OrderId id, std::int64_t px, Quantity qty, std::int64_t ts = 0) {
  return Order{id, Timestamp{ts}, id, Side::Sell, TickPrice{px}, qty};
}

TEST(OrderBookInsert, SingleBuySetsBestBid) {
  OrderBook book(kBand);
  book.insert(buy(1, 1000, 100));
  const auto q = book.best_quotes();
  ASSERT_TRUE(q.best_bid);
  EXPECT_EQ(q.best_bid->ticks, 1000);
  EXPECT_FALSE(q.best_ask);
}

TEST(OrderBookInsert, SamePriceQueuesFifo) {
  OrderBook book(kBand);
  book.insert(buy(1, 1000, 100, 10));
  book.insert(buy(2, 1000, 50, 20));
  EXPECT_EQ(book.front(Side::Buy).id, 1u);
  std::vector<OrderId> order;
  book.for_each(Side::Buy, [&](const Order& o) { order.push_back(o.id); });
  EXPECT_EQ(order, (std::vector<OrderId>{1, 2}));
}

TEST(OrderBookInsert, Errors) {
  OrderBook book(kBand);
  try {
    book.insert(buy(1, 1200, 100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PriceOutsideBand);
  }
  book.insert(buy(1, 1000, 100));
  try {
    book.insert(sell(1, 1001, 100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateId);
  }
  EXPECT_THROW(book.insert(buy(2, 1000, 0)), Error);
}

TEST(OrderBookCancel, OnlyOrderEmptiesBook) {
  OrderBook book(kBand);
  book.insert(buy(1, 1000, 100));
  const auto removed = book.cancel(1);
  EXPECT_EQ(removed.size, 100);
  EXPECT_EQ(book.best_quotes(), Quotes{});
  EXPECT_EQ(book.order_count(), 0u);
}

TEST(OrderBookCancel, HeadCancelPromotesSecond) {
  OrderBook book(kBand);
  book.insert(sell(1, 1002, 100, 1));
  book.insert(sell(2, 1002, 70, 2));
  book.cancel(1);
  EXPECT_EQ(book.front(Side::Sell).id, 2u);
  EXPECT_EQ(book.depth_at(Side::Sell, 1), (DepthLevel{TickPrice{1002}, 70}));
}

TEST(OrderBookCancel, UnknownId) {
  OrderBook book(kBand);
  try {
    book.cancel(999);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownId);
  }
}

TEST(OrderBookQuotes, MaxBidMinAsk) {
  OrderBook book(kBand);
  book.insert(buy(1, 999, 10));
  book.insert(buy(2, 1000, 10));
  book.insert(sell(3, 1002, 10));
  EXPECT_EQ(book.best_quotes(), (Quotes{TickPrice{1000}, TickPrice{1002}}));
  EXPECT_EQ(OrderBook(kBand).best_quotes(), Quotes{});
  book.cancel(2);
  EXPECT_EQ(book.best_quotes().best_bid, TickPrice{999});
}

TEST(OrderBookDepth, RanksAndAggregates) {
  OrderBook book(kBand);
  book.insert(buy(1, 1000, 100));
  book.insert(buy(2, 999, 200));
  book.insert(buy(3, 998, 50));
  EXPECT_EQ(book.depth_at(Side::Buy, 2), (DepthLevel{TickPrice{999}, 200}));
  book.insert(buy(4, 1000, 25));
  EXPECT_EQ(book.depth_at(Side::Buy, 1), (DepthLevel{TickPrice{1000}, 125}));
  EXPECT_EQ(book.depth_at(Side::Buy, 3), (DepthLevel{TickPrice{998}, 50}));

  OrderBook thin(kBand);
  thin.insert(buy(1, 1000, 100));
  try {
    thin.depth_at(Side::Buy, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientDepth);
  }
}

TEST(OrderBookFill, PartialFillKeepsPriority) {
  OrderBook book(kBand);
  book.insert(sell(1, 1001, 100, 1));
  book.insert(sell(2, 1001, 100, 2));
  book.fill_front(Side::Sell, 40);
  EXPECT_EQ(book.front(Side::Sell).id, 1u);
  EXPECT_EQ(book.front(Side::Sell).size, 60);
  book.fill_front(Side::Sell, 60);
  EXPECT_EQ(book.front(Side::Sell).id, 2u);
  EXPECT_FALSE(book.contains(1));
  EXPECT_EQ(book.total_size(Side::Sell), 100);
}

TEST(OrderBookProperty, InsertThenCancelRestoresState) {
  std::mt19937_64 rng(7);
  OrderBook book(kBand);
  OrderId next = 1;
  for (int i = 0; i < 500; ++i) {
    const bool is_buy = rng() % 2;
    const std::int64_t px = 950 + static_cast<std::int64_t>(rng() % 100);
    book.insert(Order{next, Timestamp{i}, next, is_buy ? Side::Buy : Side::Sell, TickPrice{px},
                      1 + static_cast<Quantity>(rng() % 500)});
    ++next;
    const OrderBook before = book;
    const Order probe{next, Timestamp{i}, next, rng() % 2 ? Side::Buy : Side::Sell,
                      TickPrice{950 + static_cast<std::int64_t>(rng() % 100)}, 7};
    book.insert(probe);
    book.cancel(probe.id);
    ASSERT_EQ(book, before) << "iteration " << i;
    ++next;
  }
}

TEST(OrderBookProperty, QuotesAndTotalsMatchBruteForceScan) {
  std::mt19937_64 rng(11);
  OrderBook book(kBand);
  std::vector<Order> live;
  OrderId next = 1;
  for (int i = 0; i < 5000; ++i) {
    if (!live.empty() && rng() % 3 == 0) {
      const auto k = rng() % live.size();
      book.cancel(live[k].id);
      live.erase(live.begin() + static_cast<long>(k));
    } else {
      const Order o{next, Timestamp{i}, next, rng() % 2 ? Side::Buy : Side::Sell,
                    TickPrice{900 + static_cast<std::int64_t>(rng() % 201)}, 1 + static_cast<Quantity>(rng() % 99)};
      ++next;
      book.insert(o);
      live.push_back(o);
    }
    Quotes expected;
    Quantity bid_total = 0, ask_total = 0;
    for (const auto& o : live) {
      if (o.side == Side::Buy) {
        bid_total += o.size;
        if (!expected.best_bid || o.price > *expected.best_bid) expected.best_bid = o.price;
      } else {
        ask_total += o.size;
        if (!expected.best_ask || o.price < *expected.best_ask) expected.best_ask = o.price;
      }
    }
    ASSERT_EQ(book.best_quotes(), expected);
    ASSERT_EQ(book.total_size(Side::Buy), bid_total);
    ASSERT_EQ(book.total_size(Side::Sell), ask_total);
  }
}

TEST(OrderBookProperty, LevelQueuesAscendByArrival) {
  std::mt19937_64 rng(3);
  OrderBook book(kBand);
  for (OrderId id = 1; id <= 2000; ++id)
    book.insert(Order{id, Timestamp{static_cast<std::int64_t>(id)}, id, rng() % 2 ? Side::Buy : Side::Sell,
                      TickPrice{990 + static_cast<std::int64_t>(rng() % 20)}, 10});
  for (auto side : {Side::Buy, Side::Sell}) {
    std::optional<Order> prev;
    book.for_each(side, [&](const Order& o) {
      if (prev && prev->price == o.price) EXPECT_LT(std::pair(prev->ts, prev->seq), std::pair(o.ts, o.seq));
      prev = o;
    });
  }
}

}  // namespace
}  // namespace oplab
