#pragma once

#include <span>
#include <vector>

#include "segbias/mask.hpp"

namespace segbias {

/// Foreground and background loss weights. Both must be finite and > 0.
class LossWeights {
 public:
  LossWeights() = default;
  LossWeights(double w_pos, double w_neg);

  double w_pos() const noexcept { return w_pos_; }
  double w_neg() const noexcept { return w_neg_; }
  double ratio() const noexcept { return w_pos_ / w_neg_; }

  friend bool operator==(const LossWeights&, const LossWeights&) = default;

 private:
  double w_pos_ = 1.0;
  double w_neg_ = 1.0;
};

struct LossBreakdown {
  double l_pos = 0.0;
  double l_neg = 0.0;
  double l_suppl = 0.0;
  double l_comb = 0.0;
};

/// d l_comb / d prob for every pixel of the class-positive image and of each
/// supplementary negative sample.
struct LossGradient {
  std::vector<double> positive;
  std::vector<std::vector<double>> supplementary;
};

// All losses use the natural log and divide each image's sum by that image's
// own pixel count N. Probabilities come pre-clamped from ProbMap.

/// -(w_pos / N) * sum_i y_i * log(p_i)
double loss_pos(const ProbMap& prob, const BinaryMask& gt, double w_pos);
/// -(w_neg / N) * sum_i (1 - y_i) * log(1 - p_i)
double loss_neg(const ProbMap& prob, const BinaryMask& gt, double w_neg);
/// Sum over samples z of -(w_neg / N_z) * sum_i log(1 - z_i); every pixel is background.
double loss_suppl(std::span<const ProbMap> suppl_probs, double w_neg);

LossBreakdown loss_comb(const ProbMap& prob, const BinaryMask& gt, std::span<const ProbMap> suppl_probs,
                        const LossWeights& weights);

/// Gradient of loss_pos + loss_neg for one class-positive image.
std::vector<double> positive_image_gradient(const ProbMap& prob, const BinaryMask& gt,
                                            const LossWeights& weights);
/// Gradient of one supplementary sample's share of loss_suppl.
std::vector<double> supplementary_gradient(const ProbMap& prob, double w_neg);

LossGradient loss_gradient(const ProbMap& prob, const BinaryMask& gt, std::span<const ProbMap> suppl_probs,
                           const LossWeights& weights);

}  // namespace segbias
