#include "segbias/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "segbias/splitmix64.hpp"

namespace segbias {

namespace {

constexpr int kMaxEllipseAttempts = 1000;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string numbered(const std::string& prefix, std::size_t index, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", digits, index);
  return prefix + buf;
}

double target_area(const SynthConfig& c) {
  return c.fg_fraction * static_cast<double>(c.width) * static_cast<double>(c.height);
}

BinaryMask rasterize_ellipse(std::size_t width, std::size_t height, double cx, double cy, double ax,
                             double ay) {
  std::vector<std::uint8_t> data(width * height, 0);
  for (std::size_t r = 0; r < height; ++r) {
    const double dy = (static_cast<double>(r) - cy) / ay;
    for (std::size_t c = 0; c < width; ++c) {
      const double dx = (static_cast<double>(c) - cx) / ax;
      if (dx * dx + dy * dy <= 1.0) data[r * width + c] = 1;
    }
  }
  return BinaryMask(width, height, std::move(data));
}

// Axis-aligned ellipse with aspect ratio in [1/2, 2], fully inside the image,
// redrawn until its pixel area is within tolerance of the target.
BinaryMask draw_ellipse(const SynthConfig& c, SplitMix64& rng) {
  const double area = target_area(c);
  const double half_w = (static_cast<double>(c.width) - 1.0) / 2.0;
  const double half_h = (static_cast<double>(c.height) - 1.0) / 2.0;
  for (int attempt = 0; attempt < kMaxEllipseAttempts; ++attempt) {
    const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    const double ax = std::sqrt(area / (std::numbers::pi * aspect));
    const double ay = aspect * ax;
    const double cx_u = rng.uniform();
    const double cy_u = rng.uniform();
    if (ax > half_w || ay > half_h) continue;
    const double cx = ax + cx_u * (static_cast<double>(c.width) - 1.0 - 2.0 * ax);
    const double cy = ay + cy_u * (static_cast<double>(c.height) - 1.0 - 2.0 * ay);
    BinaryMask mask = rasterize_ellipse(c.width, c.height, cx, cy, ax, ay);
    const auto count = static_cast<double>(mask.foreground_count());
    if (std::abs(count - area) <= kAreaTolerance * area) return mask;
  }
  throw std::invalid_argument("synth: could not place an ellipse of fraction " +
                              std::to_string(c.fg_fraction) + " within tolerance");
}

IntensityImage render(const SynthConfig& c, const BinaryMask& mask, SplitMix64& rng) {
  std::vector<double> values(mask.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double level = mask[i] ? c.fg_level : c.bg_level;
    const double v = std::clamp(level + c.noise_sigma * rng.normal(), 0.0, 1.0);
    values[i] = static_cast<double>(static_cast<float>(v));
  }
  return IntensityImage(c.width, c.height, std::move(values));
}

}  // namespace

void validate_config(const SynthConfig& c) {
  if (c.width < 3 || c.height < 3) throw std::invalid_argument("synth: image must be at least 3x3");
  if (!(c.fg_fraction >= 0.005 && c.fg_fraction <= 0.5)) {
    throw std::invalid_argument("synth: fg_fraction " + std::to_string(c.fg_fraction) +
                                " outside [0.005, 0.5]");
  }
  const double max_area = std::numbers::pi * (static_cast<double>(c.width) - 1.0) / 2.0 *
                          (static_cast<double>(c.height) - 1.0) / 2.0;
  if (target_area(c) > max_area) {
    throw std::invalid_argument("synth: fg_fraction " + std::to_string(c.fg_fraction) +
                                " unachievable, the ellipse would exceed the image");
  }
  std::size_t positives = 0;
  for (Split s : kSplits) {
    const auto k = static_cast<std::size_t>(s);
    positives += c.n_positive[k];
    if (c.n_positive[k] + c.n_negative[k] > 0 && c.n_patients[k] == 0) {
      throw std::invalid_argument("synth: split " + std::string(to_string(s)) + " has images but no patients");
    }
  }
  if (positives == 0) throw std::invalid_argument("synth: n_positive is zero, nothing to emulate");
  if (!(c.noise_sigma >= 0.0) || c.fg_level < 0.0 || c.fg_level > 1.0 || c.bg_level < 0.0 || c.bg_level > 1.0) {
    throw std::invalid_argument("synth: levels must lie in [0, 1] and noise_sigma must be >= 0");
  }
  if (c.organ.empty()) throw std::invalid_argument("synth: organ name is empty");
}

std::vector<SynthImage> generate_images(const SynthConfig& c) {
  validate_config(c);
  SplitMix64 rng(c.seed);
  std::vector<SynthImage> images;
  for (Split s : kSplits) {
    const auto k = static_cast<std::size_t>(s);
    const std::string split_name = lower(to_string(s));
    for (int positive = 1; positive >= 0; --positive) {
      const std::size_t count = positive ? c.n_positive[k] : c.n_negative[k];
      for (std::size_t i = 0; i < count; ++i) {
        BinaryMask mask = positive ? draw_ellipse(c, rng) : BinaryMask(c.width, c.height);
        IntensityImage intensity = render(c, mask, rng);
        ImageRecord record;
        record.image_id = numbered(split_name + (positive ? "_pos_" : "_neg_"), i, 4);
        record.patient_id = numbered(split_name + "_p", i % c.n_patients[k], 2);
        record.split = s;
        const bool present = !mask.empty_foreground();
        if (present) record.mask_path = "masks/" + record.image_id + ".pgm";
        record.weak_labels[c.organ] = present ? 1 : 0;
        images.push_back({std::move(intensity), std::move(mask), std::move(record)});
      }
    }
  }
  return images;
}

SynthDataset generate(const SynthConfig& c, const std::filesystem::path& out_dir) {
  auto images = generate_images(c);
  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "masks");

  SynthDataset out;
  out.root = out_dir;
  out.manifest.organ = c.organ;
  out.manifest.composition = Composition::kOrganSpecific;
  out.manifest.base_dir = out_dir;
  for (auto& image : images) {
    save_intensity(image.intensity, out_dir / "images" / (image.record.image_id + ".f32"));
    if (image.record.mask_path) {
      save_mask(image.mask, out_dir / *image.record.mask_path);
      out.manifest.records.push_back(std::move(image.record));
    } else {
      out.pool.push_back(std::move(image.record));
    }
  }
  validate_manifest(out.manifest);
  save_manifest(out.manifest, out_dir / "manifest.jsonl");
  save_records(out.pool, out_dir / "pool.jsonl");
  return out;
}

std::string rung_dir_name(std::size_t index, double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "rung%02zu_fg%.4f", index, fraction);
  return buf;
}

std::vector<SynthDataset> size_ladder(const SynthConfig& config, std::span<const double> fractions,
                                      const std::filesystem::path& out_dir) {
  if (fractions.empty()) throw std::invalid_argument("size_ladder: no fractions");
  if (!std::is_sorted(fractions.begin(), fractions.end())) {
    throw std::invalid_argument("size_ladder: fractions must be sorted ascending");
  }
  std::vector<SynthDataset> out;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    SynthConfig rung = config;
    rung.fg_fraction = fractions[i];
    rung.seed = config.seed + i;
    out.push_back(generate(rung, out_dir / rung_dir_name(i, fractions[i])));
  }
  return out;
}

}  // namespace segbias
