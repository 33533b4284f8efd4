#include "segbias/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "segbias/error.hpp"

namespace segbias {

LossWeights::LossWeights(double w_pos, double w_neg) : w_pos_(w_pos), w_neg_(w_neg) {
  if (!std::isfinite(w_pos) || !std::isfinite(w_neg) || w_pos <= 0.0 || w_neg <= 0.0) {
    throw std::invalid_argument("loss weights must be finite and strictly positive (got w_pos=" +
                                std::to_string(w_pos) + ", w_neg=" + std::to_string(w_neg) + ")");
  }
}

namespace {

void require_same_size(const ProbMap& prob, const BinaryMask& gt, const char* who) {
  if (prob.width() != gt.width() || prob.height() != gt.height()) {
    throw DimensionMismatch(std::string(who) + ": probability map " + std::to_string(prob.width()) +
                            "x" + std::to_string(prob.height()) + " vs mask " +
                            std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
}

}  // namespace

double loss_pos(const ProbMap& prob, const BinaryMask& gt, double w_pos) {
  require_same_size(prob, gt, "loss_pos");
  double sum = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (gt[i]) sum += std::log(prob[i]);
  }
  return -(w_pos / static_cast<double>(prob.size())) * sum;
}

double loss_neg(const ProbMap& prob, const BinaryMask& gt, double w_neg) {
  require_same_size(prob, gt, "loss_neg");
  double sum = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (!gt[i]) sum += std::log(1.0 - prob[i]);
  }
  return -(w_neg / static_cast<double>(prob.size())) * sum;
}

double loss_suppl(std::span<const ProbMap> suppl_probs, double w_neg) {
  double total = 0.0;
  for (const auto& z : suppl_probs) {
    double sum = 0.0;
    for (double p : z.values()) sum += std::log(1.0 - p);
    total += -(w_neg / static_cast<double>(z.size())) * sum;
  }
  return total;
}

LossBreakdown loss_comb(const ProbMap& prob, const BinaryMask& gt, std::span<const ProbMap> suppl_probs,
                        const LossWeights& weights) {
  LossBreakdown out;
  out.l_pos = loss_pos(prob, gt, weights.w_pos());
  out.l_neg = loss_neg(prob, gt, weights.w_neg());
  out.l_suppl = loss_suppl(suppl_probs, weights.w_neg());
  out.l_comb = out.l_pos + out.l_neg + out.l_suppl;
  return out;
}

std::vector<double> positive_image_gradient(const ProbMap& prob, const BinaryMask& gt,
                                            const LossWeights& weights) {
  require_same_size(prob, gt, "loss_gradient");
  const auto n = static_cast<double>(prob.size());
  std::vector<double> grad(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    grad[i] = gt[i] ? -weights.w_pos() / (n * prob[i]) : weights.w_neg() / (n * (1.0 - prob[i]));
  }
  return grad;
}

std::vector<double> supplementary_gradient(const ProbMap& prob, double w_neg) {
  const auto n = static_cast<double>(prob.size());
  std::vector<double> grad(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) grad[i] = w_neg / (n * (1.0 - prob[i]));
  return grad;
}

LossGradient loss_gradient(const ProbMap& prob, const BinaryMask& gt, std::span<const ProbMap> suppl_probs,
                           const LossWeights& weights) {
  LossGradient out;
  out.positive = positive_image_gradient(prob, gt, weights);
  out.supplementary.reserve(suppl_probs.size());
  for (const auto& z : suppl_probs) out.supplementary.push_back(supplementary_gradient(z, weights.w_neg()));
  return out;
}

}  // namespace segbias
