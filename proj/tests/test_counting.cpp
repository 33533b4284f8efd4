#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "segbias/counting.hpp"
#include "segbias/error.hpp"

using namespace segbias;

namespace {

BinaryMask full(std::size_t w, std::size_t h, bool fg) {
  return BinaryMask(w, h, std::vector<std::uint8_t>(w * h, fg ? 1 : 0));
}

}  // namespace

TEST_CASE("identical all-foreground masks") {
  const ConfusionCounts c = confusion_counts(full(4, 4, true), full(4, 4, true));
  CHECK(c == ConfusionCounts{16, 0, 0, 0});
}

TEST_CASE("total miss") {
  const ConfusionCounts c = confusion_counts(full(2, 2, false), full(2, 2, true));
  CHECK(c == ConfusionCounts{0, 0, 0, 4});
}

TEST_CASE("one pixel per confusion cell") {
  // pred [T,T,F,F] vs gt [T,F,T,F]: pixel 0 TP, 1 FP, 2 FN, 3 TN.
  const ConfusionCounts c = confusion_counts(BinaryMask(4, 1, {1, 1, 0, 0}), BinaryMask(4, 1, {1, 0, 1, 0}));
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 1);
}

TEST_CASE("size mismatch") {
  CHECK_THROWS_AS(confusion_counts(full(2, 2, true), full(2, 3, true)), DimensionMismatch);
}

TEST_CASE("closed-form metric values") {
  const CountingMetrics m = counting_metrics({.tp = 3, .fp = 1, .tn = 10, .fn = 2});
  // 13/16, 3/4, 3/5, 3/6, 6/9, 10/11
  CHECK(*m.accuracy() == doctest::Approx(0.8125).epsilon(1e-15));
  CHECK(*m.precision() == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(*m.recall() == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(*m.iou() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(*m.f1() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(*m.specificity() == doctest::Approx(10.0 / 11.0).epsilon(1e-15));
}

TEST_CASE("empty ground truth and empty prediction") {
  const CountingMetrics m = counting_metrics({.tp = 0, .fp = 0, .tn = 9, .fn = 0});
  CHECK(m.accuracy() == 1.0);
  CHECK_FALSE(m.precision());
  CHECK_FALSE(m.recall());
  CHECK_FALSE(m.iou());
  CHECK_FALSE(m.f1());
  CHECK(m.specificity() == 1.0);
}

TEST_CASE("perfect all-foreground prediction") {
  const CountingMetrics m = counting_metrics({.tp = 7, .fp = 0, .tn = 0, .fn = 0});
  for (Metric k : kCountingMetrics) {
    if (k == Metric::kSpecificity) CHECK_FALSE(m[k]);
    else CHECK(m[k] == 1.0);
  }
}

TEST_CASE("macro mean") {
  CountingMetrics a, b;
  a[Metric::kRecall] = 0.4;
  b[Metric::kRecall] = 0.8;
  const std::vector<CountingMetrics> v = {a, b};
  const AggregatedMetrics r = aggregate(v, {}, {});
  CHECK(*r.metrics.recall() == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(r.excluded_for(Metric::kRecall) == 0);
}

TEST_CASE("macro excludes undefined values") {
  CountingMetrics a, b;
  a[Metric::kRecall] = 0.5;
  const std::vector<CountingMetrics> v = {a, b};
  const AggregatedMetrics r = aggregate(v, {}, {});
  CHECK(r.metrics.recall() == 0.5);
  CHECK(r.excluded_for(Metric::kRecall) == 1);
}

TEST_CASE("macro metric with no defined image is undefined") {
  const std::vector<CountingMetrics> v(3);
  const AggregatedMetrics r = aggregate(v, {}, {});
  CHECK_FALSE(r.metrics.precision());
  CHECK(r.excluded_for(Metric::kPrecision) == 3);
}

TEST_CASE("micro uses pooled counts") {
  const ConfusionCounts pooled{.tp = 3, .fp = 1, .tn = 10, .fn = 2};
  const std::vector<CountingMetrics> v(2);
  const AggregatedMetrics r = aggregate(v, {.mode = AggregationMode::kMicro}, pooled);
  CHECK(r.metrics == counting_metrics(pooled));
  CHECK(*r.metrics.accuracy() == 0.8125);
  for (Metric k : kCountingMetrics) CHECK(r.excluded_for(k) == 0);
}

TEST_CASE("empty list is rejected") {
  CHECK_THROWS_AS(aggregate({}, {}, {}), std::invalid_argument);
}

TEST_SUITE("properties") {
  TEST_CASE("counts and metrics agree with a per-pixel recount") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 300; ++t) {
      const std::size_t w = 1 + rng() % 12, h = 1 + rng() % 12;
      const double d1 = (rng() % 5) / 4.0, d2 = (rng() % 5) / 4.0;
      const BinaryMask pred = oracle::random_mask(rng, w, h, d1);
      const BinaryMask gt = oracle::random_mask(rng, w, h, d2);
      const ConfusionCounts c = confusion_counts(pred, gt);
      const oracle::Counts o = oracle::count_pixels(pred, gt);
      REQUIRE(c == ConfusionCounts{o.tp, o.fp, o.tn, o.fn});
      const auto expected = oracle::metrics(o);
      const CountingMetrics m = counting_metrics(c);
      for (std::size_t k = 0; k < 6; ++k) CHECK(m.values[k] == expected[k]);
    }
  }

  TEST_CASE("f1 and iou identity, range, swap symmetry") {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 500; ++t) {
      const BinaryMask a = oracle::random_mask(rng, 8, 8, (rng() % 10) / 9.0);
      const BinaryMask b = oracle::random_mask(rng, 8, 8, (rng() % 10) / 9.0);
      const CountingMetrics ab = counting_metrics(confusion_counts(a, b));
      const CountingMetrics ba = counting_metrics(confusion_counts(b, a));
      if (ab.f1() && ab.iou()) CHECK(std::abs(*ab.f1() - 2 * *ab.iou() / (1 + *ab.iou())) <= 1e-12);
      for (Metric k : kCountingMetrics) {
        if (ab[k]) {
          CHECK(*ab[k] >= 0.0);
          CHECK(*ab[k] <= 1.0);
        }
      }
      CHECK(ab.precision() == ba.recall());
      CHECK(ab.recall() == ba.precision());
      CHECK(ab.f1() == ba.f1());
      CHECK(ab.iou() == ba.iou());
      CHECK(ab.accuracy() == ba.accuracy());

      const CountingMetrics self = counting_metrics(confusion_counts(a, a));
      for (Metric k : kCountingMetrics) {
        if (self[k]) CHECK(*self[k] == 1.0);
      }
    }
  }

  TEST_CASE("micro over copies equals the single image") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 50; ++t) {
      const ConfusionCounts c = confusion_counts(oracle::random_mask(rng, 6, 6, 0.5), oracle::random_mask(rng, 6, 6, 0.3));
      const std::size_t k = 1 + rng() % 7;
      ConfusionCounts pooled;
      for (std::size_t i = 0; i < k; ++i) pooled += c;
      const std::vector<CountingMetrics> v(k, counting_metrics(c));
      const AggregatedMetrics r = aggregate(v, {.mode = AggregationMode::kMicro}, pooled);
      for (Metric m : kCountingMetrics) {
        const auto single = counting_metrics(c)[m];
        REQUIRE(r.metrics[m].has_value() == single.has_value());
        if (single) CHECK(std::abs(*r.metrics[m] - *single) <= 1e-15);
      }
    }
  }
}
