#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segbias/counting.hpp"
#include "segbias/distance.hpp"
#include "segbias/loss.hpp"
#include "segbias/manifest.hpp"
#include "segbias/trainer.hpp"

namespace segbias {

struct EvalOptions {
  /// Foreground iff probability > threshold.
  double threshold = 0.5;
  AggregationPolicy aggregation;
  EmptyPredPolicy empty_pred = EmptyPredPolicy::kExclude;
};

struct ImageEvaluation {
  std::string image_id;
  ConfusionCounts counts;
  CountingMetrics metrics;
  /// Only for images whose ground truth has foreground.
  std::optional<DistanceMetrics> distance;
};

/// Mean HD/ASSD over class-positive images with a defined value.
struct DistanceSummary {
  std::optional<double> hd;
  std::optional<double> assd;
  std::size_t evaluated = 0;
  /// Class-positive images with an empty prediction.
  std::size_t empty_predictions = 0;
};

struct EvaluationResult {
  std::vector<ImageEvaluation> images;
  ConfusionCounts pooled;
  AggregatedMetrics counting;
  DistanceSummary distance;
};

/// Scores predictions against ground truth, image by image in the given
/// order. `ids`, `predictions` and `ground_truth` are parallel.
EvaluationResult evaluate_masks(std::span<const std::string> ids, std::span<const BinaryMask> predictions,
                                std::span<const BinaryMask> ground_truth, const EvalOptions& options);

/// Ground truth of a record: its mask, or all background when it has none.
BinaryMask ground_truth_mask(const DatasetManifest& manifest, const ImageRecord& record);

/// Evaluates `model` on the TEST split of `manifest`, in manifest order.
/// Throws std::invalid_argument if the split is empty.
EvaluationResult evaluate(const PixelModel& model, const DatasetManifest& manifest, const EvalOptions& options);

/// Spearman rank correlation with average ranks for ties. Empty when either
/// side is constant or sizes differ or fewer than two points are given.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

inline constexpr double kSweepMinRatio = 0.7;
inline constexpr double kSweepMaxRatio = 15.0;
inline const std::vector<double> kDefaultSweepRatios = {0.7, 1.0, 2.0, 3.0, 5.0, 10.0, 15.0};

struct SweepRow {
  double ratio = 1.0;
  Composition composition = Composition::kSupplemented;
  EvaluationResult evaluation;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  TrainOptions train;
  EvalOptions eval;
  /// Permit ratios outside [0.7, 15].
  bool allow_any_ratio = false;
};

/// For each ratio r (strictly increasing): train with w_pos = r, w_neg = 1 on
/// the TRAIN split, evaluate on TEST.
SweepResult weight_sweep(const DatasetManifest& manifest, std::span<const double> ratios,
                         const SweepOptions& options);

struct ExperimentOptions {
  TrainOptions train;
  EvalOptions eval;
};

struct CompositionArm {
  Composition composition;
  PixelModel model;
  EvaluationResult evaluation;
};

struct CompositionResult {
  CompositionArm organ_specific;
  CompositionArm supplemented;
  /// supplemented minus organ-specific, per counting metric; empty when
  /// either side is UNDEFINED.
  CountingMetrics delta;
  /// Pooled false-positive counts on the shared test split.
  std::uint64_t fp_organ_specific = 0;
  std::uint64_t fp_supplemented = 0;
};

/// Trains one model per training composition and evaluates both on the TEST
/// split of `supplemented`. The class-positive TEST records of both manifests
/// must coincide; otherwise std::invalid_argument.
CompositionResult composition_experiment(const DatasetManifest& organ_specific,
                                         const DatasetManifest& supplemented, const LossWeights& weights,
                                         const ExperimentOptions& options);

struct SizeEffectRow {
  std::string label;
  double organ_size = 0.0;
  EvaluationResult evaluation;
};

/// One train + evaluate per dataset with constant hyperparameters. Rows are
/// sorted by organ size (stable).
std::vector<SizeEffectRow> size_effect_experiment(std::span<const DatasetManifest> ladder,
                                                  const LossWeights& weights, const ExperimentOptions& options);

}  // namespace segbias
