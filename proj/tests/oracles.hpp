#pragma once

// Independent reference implementations used by the tests. Everything here is
// written from the definitions, as directly as possible, and shares no code
// with the library beyond its value types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "segbias/counting.hpp"
#include "segbias/distance.hpp"
#include "segbias/mask.hpp"

namespace oracle {

using segbias::BinaryMask;
using segbias::ProbMap;

struct Counts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Counts count_pixels(const BinaryMask& pred, const BinaryMask& gt) {
  Counts c;
  for (std::size_t r = 0; r < gt.height(); ++r) {
    for (std::size_t col = 0; col < gt.width(); ++col) {
      const bool p = pred.at(r, col);
      const bool g = gt.at(r, col);
      if (p && g) ++c.tp;
      if (p && !g) ++c.fp;
      if (!p && !g) ++c.tn;
      if (!p && g) ++c.fn;
    }
  }
  return c;
}

inline std::optional<double> frac(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

// Order: accuracy, precision, recall, iou, f1, specificity.
inline std::array<std::optional<double>, 6> metrics(const Counts& c) {
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  return {frac(tp + tn, tp + tn + fp + fn), frac(tp, tp + fp), frac(tp, tp + fn),
          frac(tp, tp + fp + fn),          frac(2 * tp, 2 * tp + fp + fn), frac(tn, tn + fp)};
}

inline bool is_boundary(const BinaryMask& m, std::size_t r, std::size_t c) {
  if (!m.at(r, c)) return false;
  if (r == 0 || c == 0 || r + 1 == m.height() || c + 1 == m.width()) return true;
  return !m.at(r - 1, c) || !m.at(r + 1, c) || !m.at(r, c - 1) || !m.at(r, c + 1);
}

inline std::vector<segbias::Pixel> boundary(const BinaryMask& m) {
  std::vector<segbias::Pixel> out;
  for (std::size_t r = 0; r < m.height(); ++r) {
    for (std::size_t c = 0; c < m.width(); ++c) {
      if (is_boundary(m, r, c)) out.push_back({r, c});
    }
  }
  return out;
}

inline double dist(const segbias::Pixel& a, const segbias::Pixel& b) {
  const double dr = static_cast<double>(a.row) - static_cast<double>(b.row);
  const double dc = static_cast<double>(a.col) - static_cast<double>(b.col);
  return std::sqrt(dr * dr + dc * dc);
}

inline double nearest(const segbias::Pixel& p, const std::vector<segbias::Pixel>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, dist(p, q));
  return best;
}

inline std::vector<double> edt(const std::vector<segbias::Pixel>& points, std::size_t w, std::size_t h) {
  std::vector<double> out(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = nearest({r, c}, points);
  }
  return out;
}

struct Surface {
  double hd = 0.0;
  double assd = 0.0;
};

// O(|A|.|B|) over both directions.
inline Surface surface(const std::vector<segbias::Pixel>& a, const std::vector<segbias::Pixel>& b) {
  Surface s;
  double sum = 0.0;
  for (const auto& p : a) {
    const double d = nearest(p, b);
    s.hd = std::max(s.hd, d);
    sum += d;
  }
  for (const auto& p : b) {
    const double d = nearest(p, a);
    s.hd = std::max(s.hd, d);
    sum += d;
  }
  s.assd = sum / static_cast<double>(a.size() + b.size());
  return s;
}

inline double mean_bce(const ProbMap& p, const BinaryMask& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double yi = y[i] ? 1.0 : 0.0;
    s += yi * std::log(p[i]) + (1.0 - yi) * std::log(1.0 - p[i]);
  }
  return -s / static_cast<double>(p.size());
}

// Weighted objective written as one expression over raw probability vectors.
// Accumulates in long double so that finite differences of it are not
// dominated by summation rounding.
inline long double weighted_objective(const std::vector<double>& p, const BinaryMask& y,
                                      const std::vector<std::vector<double>>& z, double w_pos, double w_neg) {
  long double pos = 0.0L;
  long double neg = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i]) pos += std::log(static_cast<long double>(p[i]));
    else neg += std::log(1.0L - static_cast<long double>(p[i]));
  }
  long double total = -(w_pos * pos + w_neg * neg) / static_cast<long double>(p.size());
  for (const auto& zs : z) {
    long double s = 0.0L;
    for (double v : zs) s += std::log(1.0L - static_cast<long double>(v));
    total += -w_neg * s / static_cast<long double>(zs.size());
  }
  return total;
}

// One pixel's contribution to weighted_objective; foreground pixels weigh
// w_pos * -log(p), background and supplementary pixels w_neg * -log(1 - p).
inline long double pixel_term(double p, bool foreground, double weight, std::size_t n) {
  const long double v = foreground ? std::log(static_cast<long double>(p)) : std::log(1.0L - static_cast<long double>(p));
  return -weight * v / static_cast<long double>(n);
}

inline double central_difference(const std::function<long double(double)>& f, double x, double h) {
  const double up = x + h;
  const double down = x - h;
  return static_cast<double>((f(up) - f(down)) / (static_cast<long double>(up) - down));
}

// ---------------------------------------------------------------------------
// Fixtures

inline BinaryMask random_mask(std::mt19937_64& rng, std::size_t w, std::size_t h, double density) {
  std::bernoulli_distribution fg(density);
  std::vector<std::uint8_t> bytes(w * h);
  for (auto& b : bytes) b = fg(rng) ? 1 : 0;
  return BinaryMask(w, h, std::move(bytes));
}

inline BinaryMask mask_from_bits(unsigned bits, std::size_t w, std::size_t h) {
  std::vector<std::uint8_t> bytes(w * h);
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = (bits >> i) & 1u;
  return BinaryMask(w, h, std::move(bytes));
}

inline std::vector<double> random_probs(std::mt19937_64& rng, std::size_t n, double lo = 0.01, double hi = 0.99) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("segbias_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
