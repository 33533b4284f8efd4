#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segbias/loss.hpp"
#include "segbias/manifest.hpp"
#include "segbias/mask.hpp"

namespace segbias {

inline constexpr std::size_t kFeatureCount = 6;
inline constexpr int kModelSchemaVersion = 1;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "bias", "x", "y", "intensity", "mean3x3", "std3x3"};

using FeatureVector = std::array<double, kFeatureCount>;

/// Per-pixel features [1, col/W, row/H, intensity, 3x3 mean, 3x3 std] with
/// edge-replicated windows at the border. Pixel-major storage.
class FeatureMatrix {
 public:
  FeatureMatrix(std::size_t width, std::size_t height, std::vector<FeatureVector> rows)
      : width_(width), height_(height), rows_(std::move(rows)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return rows_.size(); }
  const FeatureVector& operator[](std::size_t pixel) const { return rows_[pixel]; }
  std::span<const FeatureVector> rows() const noexcept { return rows_; }

  /// Multiplies every feature (bias included) by `factor`.
  FeatureMatrix scaled(double factor) const;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<FeatureVector> rows_;
};

/// Throws std::invalid_argument for images smaller than 3x3.
FeatureMatrix extract_features(const IntensityImage& image);

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double lr = 0.0;
  /// lr after divergence halvings.
  double effective_lr = 0.0;
  int lr_halvings = 0;
  double w_pos = 1.0;
  double w_neg = 1.0;
  std::string manifest_hash;
  double final_loss = 0.0;
};

struct PixelModel {
  FeatureVector weights{};
  TrainingMetadata metadata;
};

struct TrainOptions {
  std::size_t epochs = 500;
  double lr = 0.5;
  std::uint64_t seed = 0;
  /// Descend in standardized coordinates: every non-bias feature centered and
  /// scaled to unit variance over the training pixels, the bias column divided
  /// by its mean. The learned weights are folded back onto the raw features.
  bool standardize = true;
  /// Receives the objective before the first step and after every epoch of
  /// the successful attempt.
  std::vector<double>* loss_history = nullptr;
};

/// One training image. Without a mask it is a supplementary negative sample.
struct TrainingSample {
  std::string image_id;
  FeatureMatrix features;
  std::optional<BinaryMask> mask;
};

inline constexpr double kDivergenceTolerance = 1e-9;
inline constexpr int kMaxLrHalvings = 20;

/// Batch objective: sum over samples of loss_pos + loss_neg (class-positive)
/// or loss_suppl (negative), evaluated at `weights`.
double training_objective(const FeatureVector& weights, std::span<const TrainingSample> samples,
                          const LossWeights& loss_weights);

/// Full-batch gradient descent from zero weights. Each step moves by
/// lr * (batch gradient / sample count); samples are visited in image_id
/// order. With options.standardize the descent runs on standardized
/// features. If the objective rises by more than kDivergenceTolerance the run
/// restarts with lr halved, up to kMaxLrHalvings times, then throws
/// TrainingError.
PixelModel train_samples(std::vector<TrainingSample> samples, const LossWeights& weights,
                         const TrainOptions& options, std::string manifest_hash = {});

/// Trains on the TRAIN split of `manifest`, loading images from disk.
PixelModel train(const DatasetManifest& manifest, const LossWeights& weights, const TrainOptions& options);

/// logistic(weights . features), clamped.
ProbMap predict(const PixelModel& model, const FeatureMatrix& features);
ProbMap predict(const PixelModel& model, const IntensityImage& image);

std::string serialize_model(const PixelModel& model);
/// Throws std::runtime_error on a schema version or feature list mismatch.
PixelModel parse_model(std::string_view json_text);
void save_model(const PixelModel& model, const std::filesystem::path& path);
PixelModel load_model(const std::filesystem::path& path);

/// Loads the records of one split as training samples, sorted by image_id.
std::vector<TrainingSample> load_training_samples(const DatasetManifest& manifest, Split split);

}  // namespace segbias
