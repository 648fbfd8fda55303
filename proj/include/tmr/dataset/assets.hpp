#pragma once

#include "tmr/core/rng.hpp"

#include <opencv2/core.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace tmr::dataset {

/// Renders word images from .ttf/.otf files found in a font directory,
/// falling back to OpenCV's built-in vector fonts when the directory holds
/// none. Rendered glyphs are single-channel alpha images (255 = ink).
class FontBank {
public:
    static FontBank load(const std::filesystem::path& font_dir);
    static FontBank builtin();  // Hershey-only

    bool has_truetype() const { return !faces_.empty(); }

    /// Renders `text` at roughly `pixel_height` tall; face chosen by rng.
    cv::Mat1b render_word(Rng& rng, const std::string& text, int pixel_height) const;

    /// Random pronounceable-ish token of letters/digits.
    static std::string random_word(Rng& rng);

private:
    struct Face;
    std::vector<std::shared_ptr<Face>> faces_;
};

/// Procedural figurative mark: random shape composition on a transparent
/// canvas (BGRA, alpha 255 = figure ink).
cv::Mat render_procedural_figure(Rng& rng, int side);

/// Procedural background texture (BGR): flat tones, gradients, mild noise,
/// stripes. Biased toward light backgrounds.
cv::Mat render_procedural_background(Rng& rng, int side);

/// Directory of images loaded in sorted filename order.
struct AssetPool {
    std::vector<cv::Mat> images;

    static AssetPool load(const std::filesystem::path& dir, bool keep_alpha = false);
    bool empty() const { return images.empty(); }
    const cv::Mat& pick(Rng& rng) const;
};

struct AssetCounts {
    int backgrounds = 32;
    int figures = 48;
    int glyphs = 160;
};

/// Writes default pools under root/{backgrounds,figures,glyphs}. Existing
/// non-empty pools are left untouched. Returns true if anything was written.
bool generate_default_assets(const std::filesystem::path& root, const AssetCounts& counts,
                             uint64_t seed, const std::filesystem::path& font_dir);

}  // namespace tmr::dataset
