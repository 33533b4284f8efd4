#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "segbias/mask.hpp"

namespace segbias {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& other) noexcept {
    tp += other.tp;
    fp += other.fp;
    tn += other.tn;
    fn += other.fn;
    return *this;
  }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws DimensionMismatch when the masks differ in size.
ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt);

enum class Metric { kAccuracy, kPrecision, kRecall, kIou, kF1, kSpecificity };

inline constexpr std::array<Metric, 6> kCountingMetrics = {
    Metric::kAccuracy, Metric::kPrecision, Metric::kRecall,
    Metric::kIou,      Metric::kF1,        Metric::kSpecificity,
};

std::string_view metric_name(Metric metric);

/// The six counting metrics. An empty optional is the UNDEFINED state and
/// arises exactly when the metric's denominator is zero.
struct CountingMetrics {
  std::array<std::optional<double>, 6> values{};

  std::optional<double> operator[](Metric m) const { return values[static_cast<std::size_t>(m)]; }
  std::optional<double>& operator[](Metric m) { return values[static_cast<std::size_t>(m)]; }

  std::optional<double> accuracy() const { return (*this)[Metric::kAccuracy]; }
  std::optional<double> precision() const { return (*this)[Metric::kPrecision]; }
  std::optional<double> recall() const { return (*this)[Metric::kRecall]; }
  std::optional<double> iou() const { return (*this)[Metric::kIou]; }
  std::optional<double> f1() const { return (*this)[Metric::kF1]; }
  std::optional<double> specificity() const { return (*this)[Metric::kSpecificity]; }

  friend bool operator==(const CountingMetrics&, const CountingMetrics&) = default;
};

CountingMetrics counting_metrics(const ConfusionCounts& c);

enum class AggregationMode { kMacro, kMicro };
enum class UndefinedHandling { kExclude };

struct AggregationPolicy {
  AggregationMode mode = AggregationMode::kMacro;
  UndefinedHandling undefined_handling = UndefinedHandling::kExclude;  // MACRO only
};

struct AggregatedMetrics {
  CountingMetrics metrics;
  AggregationMode mode = AggregationMode::kMacro;
  /// Per metric: images whose value was UNDEFINED and therefore dropped
  /// from the mean. Always zero under MICRO.
  std::array<std::size_t, 6> excluded{};
  std::array<std::size_t, 6> defined{};

  std::size_t excluded_for(Metric m) const { return excluded[static_cast<std::size_t>(m)]; }
};

/// MACRO: per-metric mean of the defined per-image values, in input order.
/// MICRO: counting_metrics(pooled). Throws std::invalid_argument on an empty list.
AggregatedMetrics aggregate(std::span<const CountingMetrics> per_image, const AggregationPolicy& policy,
                            const ConfusionCounts& pooled);

}  // namespace segbias
