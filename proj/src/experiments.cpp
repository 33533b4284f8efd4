#include "segbias/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "segbias/error.hpp"

namespace segbias {

EvaluationResult evaluate_masks(std::span<const std::string> ids, std::span<const BinaryMask> predictions,
                                std::span<const BinaryMask> ground_truth, const EvalOptions& options) {
  if (ids.size() != predictions.size() || ids.size() != ground_truth.size()) {
    throw std::invalid_argument("evaluate: ids, predictions and ground truth differ in length");
  }
  if (ids.empty()) throw std::invalid_argument("evaluate: nothing to evaluate");

  EvaluationResult out;
  std::vector<CountingMetrics> per_image;
  double hd_sum = 0.0;
  double assd_sum = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ImageEvaluation e;
    e.image_id = ids[i];
    e.counts = confusion_counts(predictions[i], ground_truth[i]);
    e.metrics = counting_metrics(e.counts);
    if (!ground_truth[i].empty_foreground()) {
      e.distance = distance_metrics(predictions[i], ground_truth[i], options.empty_pred);
      if (e.distance->empty_pred_policy_applied) ++out.distance.empty_predictions;
      if (e.distance->hd) {
        hd_sum += *e.distance->hd;
        assd_sum += *e.distance->assd;
        ++out.distance.evaluated;
      }
    }
    out.pooled += e.counts;
    per_image.push_back(e.metrics);
    out.images.push_back(std::move(e));
  }
  out.counting = aggregate(per_image, options.aggregation, out.pooled);
  if (out.distance.evaluated > 0) {
    out.distance.hd = hd_sum / static_cast<double>(out.distance.evaluated);
    out.distance.assd = assd_sum / static_cast<double>(out.distance.evaluated);
  }
  return out;
}

BinaryMask ground_truth_mask(const DatasetManifest& manifest, const ImageRecord& record) {
  if (record.mask_path) return load_mask(manifest.mask_path(record));
  const IntensityImage image = load_intensity(manifest.image_path(record));
  return BinaryMask(image.width(), image.height());
}

EvaluationResult evaluate(const PixelModel& model, const DatasetManifest& manifest, const EvalOptions& options) {
  std::vector<std::string> ids;
  std::vector<BinaryMask> predictions;
  std::vector<BinaryMask> truths;
  for (const auto& r : manifest.records) {
    if (r.split != Split::kTest) continue;
    const IntensityImage image = load_intensity(manifest.image_path(r));
    predictions.push_back(predict(model, image).threshold(options.threshold));
    truths.push_back(r.mask_path ? load_mask(manifest.mask_path(r)) : BinaryMask(image.width(), image.height()));
    ids.push_back(r.image_id);
  }
  if (ids.empty()) throw std::invalid_argument("evaluate: manifest has no TEST records");
  return evaluate_masks(ids, predictions, truths, options);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

SweepResult weight_sweep(const DatasetManifest& manifest, std::span<const double> ratios,
                         const SweepOptions& options) {
  if (ratios.empty()) throw std::invalid_argument("weight_sweep: no ratios");
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (i > 0 && !(ratios[i] > ratios[i - 1])) {
      throw std::invalid_argument("weight_sweep: ratios must be strictly increasing");
    }
    if (!options.allow_any_ratio && (ratios[i] < kSweepMinRatio || ratios[i] > kSweepMaxRatio)) {
      throw std::invalid_argument("weight_sweep: ratio " + std::to_string(ratios[i]) +
                                  " outside [0.7, 15]");
    }
  }
  auto samples = load_training_samples(manifest, Split::kTrain);
  if (samples.empty()) throw TrainingError("weight_sweep: manifest has no TRAIN records");
  const std::string hash = manifest_hash(manifest);

  SweepResult out;
  for (double ratio : ratios) {
    const PixelModel model = train_samples(samples, LossWeights(ratio, 1.0), options.train, hash);
    out.rows.push_back({ratio, manifest.composition, evaluate(model, manifest, options.eval)});
  }
  return out;
}

namespace {

std::set<std::string> test_positive_ids(const DatasetManifest& m) {
  std::set<std::string> ids;
  for (const auto& r : m.records) {
    if (r.split == Split::kTest && r.mask_path) ids.insert(r.image_id);
  }
  return ids;
}

}  // namespace

CompositionResult composition_experiment(const DatasetManifest& organ_specific,
                                         const DatasetManifest& supplemented, const LossWeights& weights,
                                         const ExperimentOptions& options) {
  if (test_positive_ids(organ_specific) != test_positive_ids(supplemented)) {
    throw std::invalid_argument("composition_experiment: manifests do not share the TEST split definition");
  }
  auto run_arm = [&](const DatasetManifest& training) {
    PixelModel model = train(training, weights, options.train);
    EvaluationResult evaluation = evaluate(model, supplemented, options.eval);
    return CompositionArm{training.composition, std::move(model), std::move(evaluation)};
  };
  CompositionResult out{run_arm(organ_specific), run_arm(supplemented), {}, 0, 0};
  for (Metric m : kCountingMetrics) {
    const auto o = out.organ_specific.evaluation.counting.metrics[m];
    const auto s = out.supplemented.evaluation.counting.metrics[m];
    if (o && s) out.delta[m] = *s - *o;
  }
  out.fp_organ_specific = out.organ_specific.evaluation.pooled.fp;
  out.fp_supplemented = out.supplemented.evaluation.pooled.fp;
  return out;
}

std::vector<SizeEffectRow> size_effect_experiment(std::span<const DatasetManifest> ladder,
                                                  const LossWeights& weights, const ExperimentOptions& options) {
  if (ladder.empty()) throw std::invalid_argument("size_effect_experiment: empty ladder");
  std::vector<SizeEffectRow> rows;
  for (const auto& manifest : ladder) {
    const PixelModel model = train(manifest, weights, options.train);
    rows.push_back({manifest.organ, manifest_stats(manifest).organ_size, evaluate(model, manifest, options.eval)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SizeEffectRow& a, const SizeEffectRow& b) { return a.organ_size < b.organ_size; });
  return rows;
}

}  // namespace segbias
