#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segbias {

/// Probabilities are kept in [kProbEpsilon, 1 - kProbEpsilon] so that the
/// cross-entropy terms never evaluate log(0).
inline constexpr double kProbEpsilon = 1e-7;

double clamp_probability(double p) noexcept;

/// H x W boolean grid, row-major, true = foreground. Immutable.
class BinaryMask {
 public:
  /// All-background mask.
  BinaryMask(std::size_t width, std::size_t height);
  /// Any nonzero byte becomes foreground.
  BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool operator[](std::size_t index) const { return data_[index] != 0; }
  bool at(std::size_t row, std::size_t col) const { return data_[row * width_ + col] != 0; }
  /// One byte per pixel, each 0 or 1.
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  std::size_t foreground_count() const noexcept;
  double foreground_fraction() const noexcept;
  bool empty_foreground() const noexcept { return foreground_count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> data_;
};

/// Predicted foreground probabilities. Values are validated to lie in [0, 1]
/// and then clamped to [kProbEpsilon, 1 - kProbEpsilon].
class ProbMap {
 public:
  ProbMap(std::size_t width, std::size_t height, std::vector<double> values);
  /// Constant map, clamped.
  static ProbMap filled(std::size_t width, std::size_t height, double value);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t index) const { return values_[index]; }
  std::span<const double> values() const noexcept { return values_; }

  /// Foreground iff probability > threshold.
  BinaryMask threshold(double threshold) const;

  friend bool operator==(const ProbMap&, const ProbMap&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> values_;
};

/// Grayscale intensities in [0, 1] (synthetic images, model input).
class IntensityImage {
 public:
  IntensityImage(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t index) const { return values_[index]; }
  double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const IntensityImage&, const IntensityImage&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> values_;
};

// Binary PGM (P5, maxval 255). Encoding writes 255 for foreground.
std::string encode_pgm(const BinaryMask& mask);
BinaryMask decode_pgm(std::string_view bytes);
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// Sidecar for a raw float grid: `foo.f32` pairs with `foo.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& payload_path);

// Raw little-endian float32 payload plus {"width":W,"height":H} sidecar.
ProbMap decode_probmap(std::string_view payload, std::string_view sidecar_json);
ProbMap load_probmap(const std::filesystem::path& path);
void save_probmap(const ProbMap& probmap, const std::filesystem::path& path);

IntensityImage load_intensity(const std::filesystem::path& path);
void save_intensity(const IntensityImage& image, const std::filesystem::path& path);

// Whole-file helpers shared by the other modules.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace segbias
