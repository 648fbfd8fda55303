#include "tmr/dataset/preprocess.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <stdexcept>

namespace tmr::dataset {

cv::Mat preprocess_image(const cv::Mat& image, int target_side) {
    if (image.empty() || image.rows <= 0 || image.cols <= 0) {
        throw std::invalid_argument("preprocess_image: empty image");
    }
    if (target_side <= 0) throw std::invalid_argument("preprocess_image: target_side must be positive");

    cv::Mat bgr;
    if (image.channels() == 3) {
        bgr = image;
    } else if (image.channels() == 1) {
        cv::cvtColor(image, bgr, cv::COLOR_GRAY2BGR);
    } else if (image.channels() == 4) {
        cv::cvtColor(image, bgr, cv::COLOR_BGRA2BGR);
    } else {
        throw std::invalid_argument("preprocess_image: unsupported channel count");
    }
    if (bgr.type() != CV_8UC3) bgr.convertTo(bgr, CV_8UC3);

    const int longer = std::max(bgr.cols, bgr.rows);
    int new_w = bgr.cols, new_h = bgr.rows;
    cv::Mat scaled = bgr;
    if (longer != target_side) {
        double s = double(target_side) / longer;
        new_w = std::max(1, int(std::lround(bgr.cols * s)));
        new_h = std::max(1, int(std::lround(bgr.rows * s)));
        // the longer side maps exactly onto the canvas
        if (bgr.cols >= bgr.rows) new_w = target_side; else new_h = target_side;
        int interp = s < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR;
        cv::resize(bgr, scaled, cv::Size(new_w, new_h), 0, 0, interp);
    }

    if (new_w == target_side && new_h == target_side) return scaled.clone();

    cv::Mat canvas(target_side, target_side, CV_8UC3, cv::Scalar(255, 255, 255));
    int x0 = (target_side - new_w) / 2;
    int y0 = (target_side - new_h) / 2;
    scaled.copyTo(canvas(cv::Rect(x0, y0, new_w, new_h)));
    return canvas;
}

cv::Mat center_crop_square(const cv::Mat& image, double fraction) {
    if (image.empty()) throw std::invalid_argument("center_crop_square: empty image");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("center_crop_square: fraction in (0,1]");
    int side = std::max(1, int(std::lround(std::min(image.cols, image.rows) * fraction)));
    int x0 = (image.cols - side) / 2;
    int y0 = (image.rows - side) / 2;
    return image(cv::Rect(x0, y0, side, side)).clone();
}

}  // namespace tmr::dataset
