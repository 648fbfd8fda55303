#pragma once

#include <opencv2/core.hpp>

namespace tmr::dataset {

/// Canonical catalog preprocessing: scale so the longer side equals
/// `target_side` (aspect preserved), center on a white square canvas.
/// Grayscale inputs are replicated to 3 channels. Idempotent on its own
/// output. Throws std::invalid_argument for empty images or unsupported
/// channel counts.
cv::Mat preprocess_image(const cv::Mat& image, int target_side = 300);

/// Central square crop covering `fraction` of the shorter side; the
/// center-crop ablation from the feature extraction path.
cv::Mat center_crop_square(const cv::Mat& image, double fraction = 0.875);

}  // namespace tmr::dataset
