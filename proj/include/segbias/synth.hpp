#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "segbias/manifest.hpp"
#include "segbias/mask.hpp"

namespace segbias {

/// Configuration of a synthetic single-organ dataset. Counts are per split,
/// indexed by Split.
struct SynthConfig {
  std::size_t width = 64;
  std::size_t height = 64;
  /// Target mean foreground fraction, in [0.005, 0.5].
  double fg_fraction = 0.1;
  std::array<std::size_t, 3> n_positive{30, 0, 15};
  std::array<std::size_t, 3> n_negative{30, 0, 15};
  std::array<std::size_t, 3> n_patients{6, 2, 3};
  double noise_sigma = 0.25;
  double fg_level = 0.7;
  double bg_level = 0.3;
  std::uint64_t seed = 0;
  std::string organ = "organ";
};

/// Per-image area tolerance of the ellipse relative to fg_fraction * W * H.
inline constexpr double kAreaTolerance = 0.2;

struct SynthImage {
  IntensityImage intensity;
  BinaryMask mask;
  ImageRecord record;
};

/// Throws std::invalid_argument for an unusable config.
void validate_config(const SynthConfig& config);

/// All images, in stream order: for each split TRAIN, VAL, TEST the
/// positives, then the negatives. Intensities are rounded to float32 so they
/// equal what a reload from disk yields.
std::vector<SynthImage> generate_images(const SynthConfig& config);

struct SynthDataset {
  /// Organ-specific manifest (`manifest.jsonl`).
  DatasetManifest manifest;
  /// Class-negative records (`pool.jsonl`), usable with supplement().
  std::vector<ImageRecord> pool;
  std::filesystem::path root;
};

/// Writes <out>/images/<id>.f32(+.json), <out>/masks/<id>.pgm,
/// <out>/manifest.jsonl and <out>/pool.jsonl.
SynthDataset generate(const SynthConfig& config, const std::filesystem::path& out_dir);

/// One dataset per fraction under <out>/<rung_dir_name(i, f)>, seeded with
/// config.seed + i. Fractions must be ascending.
std::vector<SynthDataset> size_ladder(const SynthConfig& config, std::span<const double> fractions,
                                      const std::filesystem::path& out_dir);

std::string rung_dir_name(std::size_t index, double fraction);

}  // namespace segbias
