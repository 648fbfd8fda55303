#pragma once

#include "tmr/nn/tensor.hpp"

namespace tmr::segmenter {

/// Focal loss for a single predicted probability of the true class:
/// -alpha * (1 - p_t)^gamma * log(p_t). With gamma=0, alpha=1 this reduces
/// to cross-entropy. p_t is clamped to [1e-7, 1] internally; p_t <= 0 or
/// > 1 is a domain error.
double focal_loss(double p_t, double gamma, double alpha);

/// Analytic d(focal_loss)/dp_t on the same domain.
double focal_loss_grad(double p_t, double gamma, double alpha);

/// Batched pixelwise focal loss on logits for a binary target (1 = text).
/// The text class is weighted by alpha, the non-text class by 1 - alpha.
/// Returns the mean loss over all pixels and writes d(mean loss)/dlogit
/// into dlogits (same shape as logits).
double focal_loss_with_logits(const nn::Tensor& logits, const nn::Tensor& targets, double gamma,
                              double alpha, nn::Tensor& dlogits);

}  // namespace tmr::segmenter
