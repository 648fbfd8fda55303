#pragma once

#include <opencv2/core.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmr {

// Image conventions used throughout:
//   - images are cv::Mat (CV_8UC3, BGR); the canonical catalog form is a
//     white-padded square produced by dataset::preprocess_image
//   - probability masks are cv::Mat1f with values in [0,1]
//   - binary masks are cv::Mat1b, nonzero (canonically 255) = text; this is
//     also the on-disk mask file convention
//   - attention maps are cv::Mat1f with nonnegative finite values

/// Inclusive-exclusive pixel rectangle.
struct BBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long long area() const { return (long long)width() * height(); }

    bool valid_within(int img_w, int img_h) const {
        return 0 <= x0 && x0 < x1 && x1 <= img_w && 0 <= y0 && y0 < y1 && y1 <= img_h;
    }

    cv::Rect rect() const { return cv::Rect(x0, y0, width(), height()); }

    bool operator==(const BBox& o) const = default;
};

/// H x W x K activation grid from a backbone tap layer, stored as K
/// contiguous HxW planes.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> v;

    FeatureMap() = default;
    FeatureMap(int k, int h, int w)
        : channels(k), height(h), width(w), v(size_t(k) * h * w, 0.f) {
        if (k <= 0 || h <= 0 || w <= 0) throw std::invalid_argument("FeatureMap: non-positive shape");
    }

    size_t plane_size() const { return size_t(height) * width; }
    float* plane(int k) { return v.data() + size_t(k) * plane_size(); }
    const float* plane(int k) const { return v.data() + size_t(k) * plane_size(); }

    float at(int k, int y, int x) const { return plane(k)[size_t(y) * width + x]; }
    float& at(int k, int y, int x) { return plane(k)[size_t(y) * width + x]; }
};

/// Fixed-length global image descriptor plus the tag of the method that
/// produced it (e.g. "ATRHA_MAC", "SPOC_PCAW"). `zero` flags an all-zero
/// vector that could not be l2-normalized.
struct GlobalDescriptor {
    std::vector<float> values;
    std::string method_tag;
    bool zero = false;

    int dim() const { return int(values.size()); }
};

/// Throws std::invalid_argument unless m is a [0,1] float mask.
void validate_probability_mask(const cv::Mat1f& m);

/// Probability -> binary mask (255 = text) at the given threshold.
cv::Mat1b binarize_mask(const cv::Mat1f& prob, float threshold = 0.5f);

/// Binary mask (any nonzero = text) -> {0,1} float mask.
cv::Mat1f mask_to_float01(const cv::Mat1b& bin);

}  // namespace tmr
