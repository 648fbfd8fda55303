#include "tmr/core/types.hpp"

#include <cmath>

namespace tmr {

void validate_probability_mask(const cv::Mat1f& m) {
    if (m.empty()) throw std::invalid_argument("probability mask is empty");
    for (int y = 0; y < m.rows; ++y) {
        const float* row = m[y];
        for (int x = 0; x < m.cols; ++x) {
            float v = row[x];
            if (!(v >= 0.f && v <= 1.f)) {
                throw std::invalid_argument("probability mask value outside [0,1]");
            }
        }
    }
}

cv::Mat1b binarize_mask(const cv::Mat1f& prob, float threshold) {
    cv::Mat1b out(prob.size());
    for (int y = 0; y < prob.rows; ++y) {
        const float* src = prob[y];
        uchar* dst = out[y];
        for (int x = 0; x < prob.cols; ++x) dst[x] = src[x] > threshold ? 255 : 0;
    }
    return out;
}

cv::Mat1f mask_to_float01(const cv::Mat1b& bin) {
    cv::Mat1f out(bin.size());
    for (int y = 0; y < bin.rows; ++y) {
        const uchar* src = bin[y];
        float* dst = out[y];
        for (int x = 0; x < bin.cols; ++x) dst[x] = src[x] ? 1.f : 0.f;
    }
    return out;
}

}  // namespace tmr
