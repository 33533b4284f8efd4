#include "segbias/counting.hpp"

#include <stdexcept>
#include <string>

#include "segbias/error.hpp"

namespace segbias {

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw DimensionMismatch("confusion_counts: prediction " + std::to_string(pred.width()) + "x" +
                            std::to_string(pred.height()) + " vs ground truth " +
                            std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
  // Index 2*pred + gt selects tn, fn, fp, tp.
  std::array<std::uint64_t, 4> tally{};
  const auto p = pred.data();
  const auto g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) ++tally[2u * p[i] + g[i]];
  return {.tp = tally[3], .fp = tally[2], .tn = tally[0], .fn = tally[1]};
}

std::string_view metric_name(Metric metric) {
  switch (metric) {
    case Metric::kAccuracy: return "accuracy";
    case Metric::kPrecision: return "precision";
    case Metric::kRecall: return "recall";
    case Metric::kIou: return "iou";
    case Metric::kF1: return "f1";
    case Metric::kSpecificity: return "specificity";
  }
  return "unknown";
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

CountingMetrics counting_metrics(const ConfusionCounts& c) {
  CountingMetrics m;
  m[Metric::kAccuracy] = ratio(c.tp + c.tn, c.total());
  m[Metric::kPrecision] = ratio(c.tp, c.tp + c.fp);
  m[Metric::kRecall] = ratio(c.tp, c.tp + c.fn);
  m[Metric::kIou] = ratio(c.tp, c.tp + c.fp + c.fn);
  m[Metric::kF1] = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  m[Metric::kSpecificity] = ratio(c.tn, c.tn + c.fp);
  return m;
}

AggregatedMetrics aggregate(std::span<const CountingMetrics> per_image, const AggregationPolicy& policy,
                            const ConfusionCounts& pooled) {
  if (per_image.empty()) throw std::invalid_argument("aggregate: empty list of per-image metrics");

  AggregatedMetrics out;
  out.mode = policy.mode;
  if (policy.mode == AggregationMode::kMicro) {
    out.metrics = counting_metrics(pooled);
    for (std::size_t k = 0; k < 6; ++k) out.defined[k] = out.metrics.values[k] ? per_image.size() : 0;
    return out;
  }

  std::array<double, 6> sum{};
  for (const auto& image : per_image) {
    for (std::size_t k = 0; k < 6; ++k) {
      if (image.values[k]) {
        sum[k] += *image.values[k];
        ++out.defined[k];
      } else {
        ++out.excluded[k];
      }
    }
  }
  for (std::size_t k = 0; k < 6; ++k) {
    if (out.defined[k] > 0) out.metrics.values[k] = sum[k] / static_cast<double>(out.defined[k]);
  }
  return out;
}

}  // namespace segbias
