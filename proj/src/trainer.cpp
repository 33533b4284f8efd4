#include "segbias/trainer.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "segbias/error.hpp"

namespace segbias {

FeatureMatrix FeatureMatrix::scaled(double factor) const {
  std::vector<FeatureVector> rows = rows_;
  for (auto& row : rows) {
    for (auto& v : row) v *= factor;
  }
  return FeatureMatrix(width_, height_, std::move(rows));
}

FeatureMatrix extract_features(const IntensityImage& image) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  if (w < 3 || h < 3) {
    throw std::invalid_argument("extract_features: image " + std::to_string(w) + "x" + std::to_string(h) +
                                " is smaller than 3x3");
  }
  auto clamp_index = [](std::ptrdiff_t i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  std::vector<FeatureVector> rows(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::array<double, 9> window{};
      std::size_t k = 0;
      for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
          window[k++] = image.at(clamp_index(static_cast<std::ptrdiff_t>(r) + dr, h),
                                 clamp_index(static_cast<std::ptrdiff_t>(c) + dc, w));
        }
      }
      double sum = 0.0;
      for (double v : window) sum += v;
      const double mean = sum / 9.0;
      double var = 0.0;
      for (double v : window) var += (v - mean) * (v - mean);
      var /= 9.0;
      rows[r * w + c] = {1.0,
                         static_cast<double>(c) / static_cast<double>(w),
                         static_cast<double>(r) / static_cast<double>(h),
                         image.at(r, c),
                         mean,
                         std::sqrt(var)};
    }
  }
  return FeatureMatrix(w, h, std::move(rows));
}

namespace {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) s += a[k] * b[k];
  return s;
}

ProbMap predict_weights(const FeatureVector& weights, const FeatureMatrix& features) {
  std::vector<double> p(features.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = logistic(dot(weights, features[i]));
  return ProbMap(features.width(), features.height(), std::move(p));
}

// Objective at `weights` plus its gradient with respect to the weights.
double objective_and_gradient(const FeatureVector& weights, std::span<const TrainingSample> samples,
                              const LossWeights& loss_weights, FeatureVector* gradient) {
  double total = 0.0;
  if (gradient) gradient->fill(0.0);
  for (const auto& sample : samples) {
    const ProbMap prob = predict_weights(weights, sample.features);
    std::vector<double> dloss_dprob;
    if (sample.mask) {
      total += loss_comb(prob, *sample.mask, {}, loss_weights).l_comb;
      if (gradient) dloss_dprob = positive_image_gradient(prob, *sample.mask, loss_weights);
    } else {
      total += loss_suppl(std::span<const ProbMap>(&prob, 1), loss_weights.w_neg());
      if (gradient) dloss_dprob = supplementary_gradient(prob, loss_weights.w_neg());
    }
    if (!gradient) continue;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      // Chain rule through the logistic: dp/dz = p (1 - p).
      const double dz = dloss_dprob[i] * prob[i] * (1.0 - prob[i]);
      const auto& x = sample.features[i];
      for (std::size_t k = 0; k < kFeatureCount; ++k) (*gradient)[k] += dz * x[k];
    }
  }
  return total;
}

// Affine map raw -> standardized features: x'_0 = x_0 / offset_0 and
// x'_k = (x_k - offset_k) / scale_k for k > 0.
struct Standardizer {
  FeatureVector offset{};
  FeatureVector scale{};

  static Standardizer identity() {
    Standardizer s;
    s.scale.fill(1.0);
    return s;
  }

  static Standardizer fit(std::span<const TrainingSample> samples) {
    FeatureVector sum{};
    FeatureVector sum_sq{};
    double count = 0.0;
    for (const auto& sample : samples) {
      for (const auto& row : sample.features.rows()) {
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
          sum[k] += row[k];
          sum_sq[k] += row[k] * row[k];
        }
      }
      count += static_cast<double>(sample.features.size());
    }
    Standardizer s = identity();
    if (sum[0] != 0.0) s.scale[0] = sum[0] / count;
    for (std::size_t k = 1; k < kFeatureCount; ++k) {
      const double mean = sum[k] / count;
      const double var = sum_sq[k] / count - mean * mean;
      s.offset[k] = mean;
      if (var > 1e-24) s.scale[k] = std::sqrt(var);
    }
    return s;
  }

  FeatureMatrix apply(const FeatureMatrix& m) const {
    std::vector<FeatureVector> rows(m.rows().begin(), m.rows().end());
    for (auto& row : rows) {
      row[0] /= scale[0];
      for (std::size_t k = 1; k < kFeatureCount; ++k) row[k] = (row[k] - offset[k]) / scale[k];
    }
    return FeatureMatrix(m.width(), m.height(), std::move(rows));
  }

  // Weights on raw features giving the same logits as `w` on standardized ones.
  FeatureVector fold(const FeatureVector& w) const {
    FeatureVector raw{};
    double shift = 0.0;
    for (std::size_t k = 1; k < kFeatureCount; ++k) {
      raw[k] = w[k] / scale[k];
      shift += raw[k] * offset[k];
    }
    raw[0] = (w[0] - shift) / scale[0];
    return raw;
  }
};

}  // namespace

double training_objective(const FeatureVector& weights, std::span<const TrainingSample> samples,
                          const LossWeights& loss_weights) {
  return objective_and_gradient(weights, samples, loss_weights, nullptr);
}

PixelModel train_samples(std::vector<TrainingSample> samples, const LossWeights& weights,
                         const TrainOptions& options, std::string manifest_hash) {
  if (samples.empty()) throw TrainingError("train: empty training set");
  if (!(options.lr > 0.0) || !std::isfinite(options.lr)) {
    throw std::invalid_argument("train: learning rate must be finite and > 0");
  }
  for (const auto& s : samples) {
    if (s.mask && (s.mask->width() != s.features.width() || s.mask->height() != s.features.height())) {
      throw DimensionMismatch("train: mask and image of " + s.image_id + " differ in size");
    }
  }
  std::sort(samples.begin(), samples.end(),
            [](const TrainingSample& a, const TrainingSample& b) { return a.image_id < b.image_id; });
  const auto n = static_cast<double>(samples.size());

  const Standardizer standardizer = options.standardize ? Standardizer::fit(samples) : Standardizer::identity();
  if (options.standardize) {
    for (auto& s : samples) s.features = standardizer.apply(s.features);
  }

  for (int halvings = 0; halvings <= kMaxLrHalvings; ++halvings) {
    const double lr = std::ldexp(options.lr, -halvings);
    FeatureVector w{};
    FeatureVector grad{};
    std::vector<double> history;
    history.reserve(options.epochs + 1);
    double previous = objective_and_gradient(w, samples, weights, &grad);
    history.push_back(previous);
    bool diverged = false;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      for (std::size_t k = 0; k < kFeatureCount; ++k) w[k] -= lr * grad[k] / n;
      const double current = objective_and_gradient(w, samples, weights, &grad);
      history.push_back(current);
      if (!std::isfinite(current) || current > previous + kDivergenceTolerance) {
        diverged = true;
        break;
      }
      previous = current;
    }
    if (diverged) continue;

    PixelModel model;
    model.weights = standardizer.fold(w);
    model.metadata = {.seed = options.seed,
                      .epochs = options.epochs,
                      .lr = options.lr,
                      .effective_lr = lr,
                      .lr_halvings = halvings,
                      .w_pos = weights.w_pos(),
                      .w_neg = weights.w_neg(),
                      .manifest_hash = std::move(manifest_hash),
                      .final_loss = previous};
    if (options.loss_history) *options.loss_history = std::move(history);
    return model;
  }
  throw TrainingError("train: objective kept increasing after " + std::to_string(kMaxLrHalvings) +
                      " learning-rate halvings");
}

std::vector<TrainingSample> load_training_samples(const DatasetManifest& manifest, Split split) {
  std::vector<TrainingSample> samples;
  for (const auto& r : manifest.records) {
    if (r.split != split) continue;
    TrainingSample s{r.image_id, extract_features(load_intensity(manifest.image_path(r))), std::nullopt};
    if (r.mask_path) s.mask = load_mask(manifest.mask_path(r));
    samples.push_back(std::move(s));
  }
  std::sort(samples.begin(), samples.end(),
            [](const TrainingSample& a, const TrainingSample& b) { return a.image_id < b.image_id; });
  return samples;
}

PixelModel train(const DatasetManifest& manifest, const LossWeights& weights, const TrainOptions& options) {
  auto samples = load_training_samples(manifest, Split::kTrain);
  if (samples.empty()) throw TrainingError("train: manifest has no TRAIN records");
  return train_samples(std::move(samples), weights, options, manifest_hash(manifest));
}

ProbMap predict(const PixelModel& model, const FeatureMatrix& features) {
  return predict_weights(model.weights, features);
}

ProbMap predict(const PixelModel& model, const IntensityImage& image) {
  return predict(model, extract_features(image));
}

// ---------------------------------------------------------------------------
// Persistence

std::string serialize_model(const PixelModel& model) {
  nlohmann::ordered_json j;
  j["schema_version"] = kModelSchemaVersion;
  j["features"] = nlohmann::ordered_json::array();
  for (auto name : kFeatureNames) j["features"].push_back(std::string(name));
  j["weights"] = model.weights;
  const auto& m = model.metadata;
  nlohmann::ordered_json t;
  t["seed"] = m.seed;
  t["epochs"] = m.epochs;
  t["lr"] = m.lr;
  t["effective_lr"] = m.effective_lr;
  t["lr_halvings"] = m.lr_halvings;
  t["w_pos"] = m.w_pos;
  t["w_neg"] = m.w_neg;
  t["manifest_hash"] = m.manifest_hash;
  t["final_loss"] = m.final_loss;
  j["training"] = std::move(t);
  return j.dump(2) + "\n";
}

PixelModel parse_model(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (!j.contains("schema_version") || j["schema_version"] != kModelSchemaVersion) {
    throw std::runtime_error("model: unsupported schema_version (expected " +
                             std::to_string(kModelSchemaVersion) + ")");
  }
  std::vector<std::string> names = j.at("features").get<std::vector<std::string>>();
  if (!std::equal(names.begin(), names.end(), kFeatureNames.begin(), kFeatureNames.end())) {
    throw std::runtime_error("model: feature schema does not match this build");
  }
  PixelModel model;
  const auto weights = j.at("weights").get<std::vector<double>>();
  if (weights.size() != kFeatureCount) throw std::runtime_error("model: expected 6 weights");
  std::copy(weights.begin(), weights.end(), model.weights.begin());
  const auto& t = j.at("training");
  auto& m = model.metadata;
  m.seed = t.at("seed").get<std::uint64_t>();
  m.epochs = t.at("epochs").get<std::size_t>();
  m.lr = t.at("lr").get<double>();
  m.effective_lr = t.at("effective_lr").get<double>();
  m.lr_halvings = t.at("lr_halvings").get<int>();
  m.w_pos = t.at("w_pos").get<double>();
  m.w_neg = t.at("w_neg").get<double>();
  m.manifest_hash = t.at("manifest_hash").get<std::string>();
  m.final_loss = t.at("final_loss").get<double>();
  return model;
}

void save_model(const PixelModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

PixelModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace segbias
