#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "segbias/mask.hpp"

namespace segbias {

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Foreground pixels with at least one 4-neighbor that is background or
/// outside the image. Points are in row-major order.
struct BoundarySet {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Pixel> points;

  bool empty() const noexcept { return points.empty(); }
  std::size_t size() const noexcept { return points.size(); }
};

BoundarySet extract_boundary(const BinaryMask& mask);

/// Euclidean distance (pixel units) from every pixel to the nearest source point.
class DistanceField {
 public:
  DistanceField(std::size_t width, std::size_t height, std::vector<double> values)
      : width_(width), height_(height), values_(std::move(values)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  double at(const Pixel& p) const { return at(p.row, p.col); }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> values_;
};

/// Exact EDT: separable squared-distance lower-envelope passes (columns, then
/// rows) followed by a square root. Throws std::invalid_argument if `points`
/// is empty or a point lies outside width x height.
DistanceField exact_edt(std::span<const Pixel> points, std::size_t width, std::size_t height);
DistanceField exact_edt(const BoundarySet& boundary);

enum class EmptyPredPolicy { kExclude, kDiagonal };

struct DistanceMetrics {
  std::optional<double> hd;
  std::optional<double> assd;
  bool empty_pred_policy_applied = false;
};

/// Hausdorff distance and average symmetric surface distance between two
/// non-empty boundary sets of the same image size.
DistanceMetrics surface_distance_metrics(const BoundarySet& a, const BoundarySet& b);

/// HD/ASSD between boundary(pred) and boundary(gt). An empty prediction is
/// handled by `policy`: kExclude leaves both UNDEFINED, kDiagonal reports the
/// image diagonal. Throws DimensionMismatch, or std::invalid_argument when gt
/// has no foreground.
DistanceMetrics distance_metrics(const BinaryMask& pred, const BinaryMask& gt,
                                 EmptyPredPolicy policy = EmptyPredPolicy::kExclude);

}  // namespace segbias
