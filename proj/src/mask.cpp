#include "segbias/mask.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "segbias/error.hpp"

namespace segbias {

std::string_view to_string(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::kMalformedHeader: return "malformed-header";
    case ParseError::Kind::kUnsupportedMaxval: return "unsupported-maxval";
    case ParseError::Kind::kTruncatedPayload: return "truncated-payload";
    case ParseError::Kind::kTrailingData: return "trailing-data";
    case ParseError::Kind::kSizeMismatch: return "size-mismatch";
    case ParseError::Kind::kNotANumber: return "not-a-number";
    case ParseError::Kind::kOutOfRange: return "out-of-range";
  }
  return "unknown";
}

double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

namespace {

void check_extent(std::size_t width, std::size_t height, std::size_t length, const char* what) {
  if (width == 0 || height == 0) {
    throw std::invalid_argument(std::string(what) + ": width and height must be >= 1");
  }
  if (length != width * height) {
    throw DimensionMismatch(std::string(what) + ": data length " + std::to_string(length) +
                            " != " + std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

BinaryMask::BinaryMask(std::size_t width, std::size_t height)
    : BinaryMask(width, height, std::vector<std::uint8_t>(width * height, 0)) {}

BinaryMask::BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_extent(width_, height_, data_.size(), "BinaryMask");
  for (auto& v : data_) v = v != 0 ? 1 : 0;
}

std::size_t BinaryMask::foreground_count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

double BinaryMask::foreground_fraction() const noexcept {
  return static_cast<double>(foreground_count()) / static_cast<double>(data_.size());
}

ProbMap::ProbMap(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_extent(width_, height_, values_.size(), "ProbMap");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (std::isnan(v)) {
      throw ParseError(ParseError::Kind::kNotANumber, i,
                       "probability at pixel " + std::to_string(i) + " is NaN");
    }
    if (v < 0.0 || v > 1.0) {
      std::ostringstream msg;
      msg << "probability at pixel " << i << " is " << v << ", outside [0, 1]";
      throw ParseError(ParseError::Kind::kOutOfRange, i, msg.str());
    }
    values_[i] = clamp_probability(v);
  }
}

ProbMap ProbMap::filled(std::size_t width, std::size_t height, double value) {
  return ProbMap(width, height, std::vector<double>(width * height, value));
}

BinaryMask ProbMap::threshold(double threshold) const {
  std::vector<std::uint8_t> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(),
                 [threshold](double p) { return static_cast<std::uint8_t>(p > threshold); });
  return BinaryMask(width_, height_, std::move(out));
}

IntensityImage::IntensityImage(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_extent(width_, height_, values_.size(), "IntensityImage");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::isnan(values_[i])) {
      throw ParseError(ParseError::Kind::kNotANumber, i,
                       "intensity at pixel " + std::to_string(i) + " is NaN");
    }
    if (values_[i] < 0.0 || values_[i] > 1.0) {
      throw ParseError(ParseError::Kind::kOutOfRange, i,
                       "intensity at pixel " + std::to_string(i) + " outside [0, 1]");
    }
  }
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// PGM

namespace {

bool is_pnm_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_pnm_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_number(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (std::size_t{1} << 32)) {
        throw ParseError(ParseError::Kind::kMalformedHeader, start,
                         std::string("PGM ") + field + " too large at byte " + std::to_string(start));
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw ParseError(ParseError::Kind::kMalformedHeader, start,
                       std::string("PGM header: expected ") + field + " at byte " +
                           std::to_string(start));
    }
    return value;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_;
};

}  // namespace

std::string encode_pgm(const BinaryMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) +
                    "\n255\n";
  out.reserve(out.size() + mask.size());
  for (auto v : mask.data()) out.push_back(v ? static_cast<char>(255) : '\0');
  return out;
}

BinaryMask decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError(ParseError::Kind::kMalformedHeader, 0, "PGM header: missing P5 magic at byte 0");
  }
  HeaderReader reader(bytes, 2);
  if (reader.pos() >= bytes.size() || !is_pnm_space(bytes[reader.pos()])) {
    throw ParseError(ParseError::Kind::kMalformedHeader, 2,
                     "PGM header: expected whitespace after magic at byte 2");
  }
  const std::size_t width = reader.read_number("width");
  const std::size_t height = reader.read_number("height");
  reader.skip_space_and_comments();
  const std::size_t maxval_offset = reader.pos();
  const std::size_t maxval = reader.read_number("maxval");
  if (width == 0 || height == 0) {
    throw ParseError(ParseError::Kind::kMalformedHeader, maxval_offset,
                     "PGM header: zero width or height");
  }
  if (maxval != 255) {
    throw ParseError(ParseError::Kind::kUnsupportedMaxval, maxval_offset,
                     "PGM maxval " + std::to_string(maxval) + " at byte " +
                         std::to_string(maxval_offset) + " unsupported (need 255)");
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (reader.pos() >= bytes.size() || !is_pnm_space(bytes[reader.pos()])) {
    throw ParseError(ParseError::Kind::kMalformedHeader, reader.pos(),
                     "PGM header: expected single whitespace after maxval at byte " +
                         std::to_string(reader.pos()));
  }
  const std::size_t payload_offset = reader.pos() + 1;
  const std::size_t expected = width * height;
  const std::size_t available = bytes.size() - payload_offset;
  if (available < expected) {
    throw ParseError(ParseError::Kind::kTruncatedPayload, bytes.size(),
                     "PGM payload truncated at byte " + std::to_string(bytes.size()) + ": expected " +
                         std::to_string(expected) + " bytes, found " + std::to_string(available));
  }
  if (available > expected) {
    throw ParseError(ParseError::Kind::kTrailingData, payload_offset + expected,
                     "PGM has trailing data at byte " + std::to_string(payload_offset + expected));
  }
  const auto* first = reinterpret_cast<const std::uint8_t*>(bytes.data() + payload_offset);
  return BinaryMask(width, height, std::vector<std::uint8_t>(first, first + expected));
}

BinaryMask load_mask(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  write_file(path, encode_pgm(mask));
}

// ---------------------------------------------------------------------------
// Raw float32 grids

std::filesystem::path sidecar_path(const std::filesystem::path& payload_path) {
  auto p = payload_path;
  p.replace_extension(".json");
  return p;
}

namespace {

struct FloatGrid {
  std::size_t width;
  std::size_t height;
  std::vector<double> values;
};

FloatGrid decode_float_grid(std::string_view payload, std::string_view sidecar_json) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(sidecar_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ParseError::Kind::kMalformedHeader, e.byte,
                     std::string("sidecar JSON: ") + e.what());
  }
  auto dimension = [&meta](const char* key) -> std::size_t {
    if (!meta.is_object() || !meta.contains(key) || !meta[key].is_number_unsigned() ||
        meta[key].get<std::size_t>() == 0) {
      throw ParseError(ParseError::Kind::kMalformedHeader, 0,
                       std::string("sidecar JSON: missing or invalid \"") + key + "\"");
    }
    return meta[key].get<std::size_t>();
  };
  const std::size_t width = dimension("width");
  const std::size_t height = dimension("height");
  const std::size_t expected = width * height * 4;
  if (payload.size() != expected) {
    throw ParseError(ParseError::Kind::kSizeMismatch, payload.size(),
                     "float payload has " + std::to_string(payload.size()) + " bytes, sidecar " +
                         std::to_string(width) + "x" + std::to_string(height) + " needs " +
                         std::to_string(expected));
  }
  std::vector<double> values(width * height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) {
      bits = (bits << 8) | static_cast<std::uint8_t>(payload[i * 4 + static_cast<std::size_t>(b)]);
    }
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return {width, height, std::move(values)};
}

std::string encode_float_payload(std::span<const double> values) {
  std::string out;
  out.reserve(values.size() * 4);
  for (double v : values) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) {
      out.push_back(static_cast<char>(bits & 0xFFu));
      bits >>= 8;
    }
  }
  return out;
}

std::string encode_sidecar(std::size_t width, std::size_t height) {
  nlohmann::ordered_json meta;
  meta["width"] = width;
  meta["height"] = height;
  return meta.dump();
}

void save_float_grid(std::size_t width, std::size_t height, std::span<const double> values,
                     const std::filesystem::path& path) {
  write_file(path, encode_float_payload(values));
  write_file(sidecar_path(path), encode_sidecar(width, height));
}

}  // namespace

ProbMap decode_probmap(std::string_view payload, std::string_view sidecar_json) {
  auto grid = decode_float_grid(payload, sidecar_json);
  return ProbMap(grid.width, grid.height, std::move(grid.values));
}

ProbMap load_probmap(const std::filesystem::path& path) {
  return decode_probmap(read_file(path), read_file(sidecar_path(path)));
}

void save_probmap(const ProbMap& probmap, const std::filesystem::path& path) {
  save_float_grid(probmap.width(), probmap.height(), probmap.values(), path);
}

IntensityImage load_intensity(const std::filesystem::path& path) {
  auto grid = decode_float_grid(read_file(path), read_file(sidecar_path(path)));
  return IntensityImage(grid.width, grid.height, std::move(grid.values));
}

void save_intensity(const IntensityImage& image, const std::filesystem::path& path) {
  save_float_grid(image.width(), image.height(), image.values(), path);
}

}  // namespace segbias
