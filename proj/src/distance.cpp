#include "segbias/distance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "segbias/error.hpp"

namespace segbias {

BoundarySet extract_boundary(const BinaryMask& mask) {
  BoundarySet out{.width = mask.width(), .height = mask.height(), .points = {}};
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      const bool interior = r > 0 && r + 1 < h && c > 0 && c + 1 < w && mask.at(r - 1, c) &&
                            mask.at(r + 1, c) && mask.at(r, c - 1) && mask.at(r, c + 1);
      if (!interior) out.points.push_back({r, c});
    }
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (q - v)^2 + f[v] over the finite entries of f.
// `f` and `out` are strided views of length n.
void squared_distance_1d(const double* f, double* out, std::size_t n, std::size_t stride,
                         std::vector<std::ptrdiff_t>& vertex, std::vector<double>& bound) {
  vertex.resize(n);
  bound.resize(n + 1);
  std::ptrdiff_t k = -1;
  for (std::size_t qi = 0; qi < n; ++qi) {
    const double fq = f[qi * stride];
    if (fq == kInf) continue;
    const auto q = static_cast<double>(qi);
    if (k < 0) {
      k = 0;
      vertex[0] = static_cast<std::ptrdiff_t>(qi);
      bound[0] = -kInf;
      bound[1] = kInf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const auto v = static_cast<double>(vertex[static_cast<std::size_t>(k)]);
      const double fv = f[static_cast<std::size_t>(vertex[static_cast<std::size_t>(k)]) * stride];
      s = ((fq + q * q) - (fv + v * v)) / (2.0 * q - 2.0 * v);
      if (s > bound[static_cast<std::size_t>(k)]) break;
      --k;
    }
    ++k;
    vertex[static_cast<std::size_t>(k)] = static_cast<std::ptrdiff_t>(qi);
    bound[static_cast<std::size_t>(k)] = s;
    bound[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    for (std::size_t qi = 0; qi < n; ++qi) out[qi * stride] = kInf;
    return;
  }
  std::size_t j = 0;
  for (std::size_t qi = 0; qi < n; ++qi) {
    const auto q = static_cast<double>(qi);
    while (bound[j + 1] < q) ++j;
    const auto v = static_cast<std::size_t>(vertex[j]);
    const double d = q - static_cast<double>(v);
    out[qi * stride] = d * d + f[v * stride];
  }
}

}  // namespace

DistanceField exact_edt(std::span<const Pixel> points, std::size_t width, std::size_t height) {
  if (points.empty()) throw std::invalid_argument("exact_edt: empty point set");
  if (width == 0 || height == 0) throw std::invalid_argument("exact_edt: zero-sized image");

  std::vector<double> grid(width * height, kInf);
  for (const auto& p : points) {
    if (p.row >= height || p.col >= width) {
      throw std::invalid_argument("exact_edt: point outside image");
    }
    grid[p.row * width + p.col] = 0.0;
  }

  std::vector<double> scratch(width * height);
  std::vector<std::ptrdiff_t> vertex;
  std::vector<double> bound;
  for (std::size_t c = 0; c < width; ++c) {
    squared_distance_1d(grid.data() + c, scratch.data() + c, height, width, vertex, bound);
  }
  for (std::size_t r = 0; r < height; ++r) {
    squared_distance_1d(scratch.data() + r * width, grid.data() + r * width, width, 1, vertex, bound);
  }
  for (auto& v : grid) v = std::sqrt(v);
  return DistanceField(width, height, std::move(grid));
}

DistanceField exact_edt(const BoundarySet& boundary) {
  return exact_edt(boundary.points, boundary.width, boundary.height);
}

DistanceMetrics surface_distance_metrics(const BoundarySet& a, const BoundarySet& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("surface_distance_metrics: empty boundary");
  if (a.width != b.width || a.height != b.height) {
    throw DimensionMismatch("surface_distance_metrics: boundary sets from different image sizes");
  }
  const DistanceField to_a = exact_edt(a);
  const DistanceField to_b = exact_edt(b);

  double hd = 0.0;
  double sum = 0.0;
  for (const auto& p : a.points) {
    const double d = to_b.at(p);
    hd = std::max(hd, d);
    sum += d;
  }
  for (const auto& p : b.points) {
    const double d = to_a.at(p);
    hd = std::max(hd, d);
    sum += d;
  }
  return {.hd = hd,
          .assd = sum / static_cast<double>(a.size() + b.size()),
          .empty_pred_policy_applied = false};
}

DistanceMetrics distance_metrics(const BinaryMask& pred, const BinaryMask& gt, EmptyPredPolicy policy) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw DimensionMismatch("distance_metrics: prediction and ground truth differ in size");
  }
  const BoundarySet gt_boundary = extract_boundary(gt);
  if (gt_boundary.empty()) {
    throw std::invalid_argument("distance_metrics: ground truth has no foreground");
  }
  const BoundarySet pred_boundary = extract_boundary(pred);
  if (pred_boundary.empty()) {
    DistanceMetrics out{.hd = std::nullopt, .assd = std::nullopt, .empty_pred_policy_applied = true};
    if (policy == EmptyPredPolicy::kDiagonal) {
      const auto w = static_cast<double>(gt.width());
      const auto h = static_cast<double>(gt.height());
      out.hd = out.assd = std::sqrt(w * w + h * h);
    }
    return out;
  }
  return surface_distance_metrics(pred_boundary, gt_boundary);
}

}  // namespace segbias
