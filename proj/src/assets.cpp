#include "tmr/dataset/assets.hpp"

#include <opencv2/freetype.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <stdexcept>

namespace fs = std::filesystem;

namespace tmr::dataset {

struct FontBank::Face {
    cv::Ptr<cv::freetype::FreeType2> ft;
};

FontBank FontBank::load(const fs::path& font_dir) {
    FontBank bank;
    if (font_dir.empty() || !fs::exists(font_dir)) return bank;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(font_dir)) {
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".ttf" || ext == ".otf") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            auto face = std::make_shared<Face>();
            face->ft = cv::freetype::createFreeType2();
            face->ft->loadFontData(f.string(), 0);
            bank.faces_.push_back(std::move(face));
        } catch (const cv::Exception&) {
            // unusable font file; skip
        }
    }
    return bank;
}

FontBank FontBank::builtin() { return FontBank(); }

std::string FontBank::random_word(Rng& rng) {
    static const char* kLetters = "abcdefghijklmnopqrstuvwxyz";
    int len = int(rng.uniform_int(3, 9));
    std::string w;
    for (int i = 0; i < len; ++i) w.push_back(kLetters[rng.uniform_int(0, 25)]);
    if (rng.bernoulli(0.3)) w[0] = char(::toupper(w[0]));
    if (rng.bernoulli(0.15)) {
        for (auto& c : w) c = char(::toupper(c));
    }
    return w;
}

namespace {

cv::Mat1b tighten(const cv::Mat1b& alpha) {
    // trim fully transparent margins
    int x0 = alpha.cols, x1 = 0, y0 = alpha.rows, y1 = 0;
    for (int y = 0; y < alpha.rows; ++y) {
        const uchar* row = alpha[y];
        for (int x = 0; x < alpha.cols; ++x) {
            if (row[x]) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
        }
    }
    if (x1 < x0) return alpha.clone();
    return alpha(cv::Rect(x0, y0, x1 - x0 + 1, y1 - y0 + 1)).clone();
}

}  // namespace

cv::Mat1b FontBank::render_word(Rng& rng, const std::string& text, int pixel_height) const {
    pixel_height = std::max(8, pixel_height);
    if (!faces_.empty()) {
        const auto& face = faces_[size_t(rng.next() % faces_.size())];
        int baseline = 0;
        cv::Size sz = face->ft->getTextSize(text, pixel_height, -1, &baseline);
        int margin = std::max(2, pixel_height / 4);
        cv::Mat canvas(sz.height + baseline + 2 * margin, sz.width + 2 * margin, CV_8UC3, cv::Scalar(0, 0, 0));
        face->ft->putText(canvas, text, cv::Point(margin, margin + sz.height), pixel_height,
                          cv::Scalar(255, 255, 255), -1, cv::LINE_AA, false);
        cv::Mat1b alpha;
        cv::extractChannel(canvas, alpha, 0);
        return tighten(alpha);
    }
    // Hershey fallback; base glyph height is ~22 px at scale 1
    static const int kFonts[] = {cv::FONT_HERSHEY_SIMPLEX, cv::FONT_HERSHEY_DUPLEX,
                                 cv::FONT_HERSHEY_TRIPLEX, cv::FONT_HERSHEY_COMPLEX};
    int font = kFonts[rng.uniform_int(0, 3)];
    double scale = pixel_height / 22.0;
    int thickness = std::max(1, int(std::lround(scale * 1.5)));
    int baseline = 0;
    cv::Size sz = cv::getTextSize(text, font, scale, thickness, &baseline);
    int margin = std::max(2, pixel_height / 4);
    cv::Mat canvas(sz.height + baseline + 2 * margin, sz.width + 2 * margin, CV_8UC3, cv::Scalar(0, 0, 0));
    cv::putText(canvas, text, cv::Point(margin, margin + sz.height), font, scale,
                cv::Scalar(255, 255, 255), thickness, cv::LINE_AA);
    cv::Mat1b alpha;
    cv::extractChannel(canvas, alpha, 0);
    return tighten(alpha);
}

namespace {

cv::Scalar random_saturated_color(Rng& rng) {
    // HSV with high saturation/value, converted to BGR
    cv::Mat3b hsv(1, 1, cv::Vec3b(uchar(rng.uniform_int(0, 179)), uchar(rng.uniform_int(120, 255)),
                                  uchar(rng.uniform_int(60, 220))));
    cv::Mat3b bgr;
    cv::cvtColor(hsv, bgr, cv::COLOR_HSV2BGR);
    cv::Vec3b c = bgr(0, 0);
    return cv::Scalar(c[0], c[1], c[2], 255);
}

std::vector<cv::Point> star_points(Rng& rng, cv::Point c, int r_outer, int r_inner, int spikes) {
    std::vector<cv::Point> pts;
    for (int i = 0; i < spikes * 2; ++i) {
        double ang = i * CV_PI / spikes + rng.uniform(-0.08, 0.08);
        int r = (i % 2 == 0) ? r_outer : r_inner;
        pts.emplace_back(int(c.x + r * std::cos(ang)), int(c.y + r * std::sin(ang)));
    }
    return pts;
}

std::vector<cv::Point> blob_points(Rng& rng, cv::Point c, int r_base, int n) {
    std::vector<cv::Point> pts;
    for (int i = 0; i < n; ++i) {
        double ang = 2.0 * CV_PI * i / n;
        double r = r_base * rng.uniform(0.55, 1.0);
        pts.emplace_back(int(c.x + r * std::cos(ang)), int(c.y + r * std::sin(ang)));
    }
    return pts;
}

}  // namespace

cv::Mat render_procedural_figure(Rng& rng, int side) {
    cv::Mat fig(side, side, CV_8UC4, cv::Scalar(0, 0, 0, 0));
    cv::Point center(side / 2, side / 2);
    int r = side * 2 / 5;
    int n_parts = int(rng.uniform_int(1, 3));
    for (int part = 0; part < n_parts; ++part) {
        cv::Scalar color = random_saturated_color(rng);
        cv::Point c(center.x + int(rng.uniform_int(-side / 8, side / 8)),
                    center.y + int(rng.uniform_int(-side / 8, side / 8)));
        int rr = std::max(6, int(r * rng.uniform(0.5, 1.0)));
        switch (rng.uniform_int(0, 6)) {
            case 0:
                cv::circle(fig, c, rr, color, cv::FILLED, cv::LINE_AA);
                break;
            case 1:
                cv::ellipse(fig, c, cv::Size(rr, std::max(5, int(rr * rng.uniform(0.4, 0.9)))),
                            rng.uniform(0, 180), 0, 360, color, cv::FILLED, cv::LINE_AA);
                break;
            case 2: {
                int hw = int(rr * rng.uniform(0.6, 1.0));
                int hh = int(rr * rng.uniform(0.4, 1.0));
                cv::rectangle(fig, c - cv::Point(hw, hh), c + cv::Point(hw, hh), color, cv::FILLED, cv::LINE_AA);
                break;
            }
            case 3: {
                auto pts = star_points(rng, c, rr, std::max(4, rr / 2), int(rng.uniform_int(5, 9)));
                cv::fillConvexPoly(fig, pts, color, cv::LINE_AA);  // near-convex; fine for marks
                break;
            }
            case 4: {
                auto pts = blob_points(rng, c, rr, int(rng.uniform_int(6, 12)));
                std::vector<std::vector<cv::Point>> poly{pts};
                cv::fillPoly(fig, poly, color, cv::LINE_AA);
                break;
            }
            case 5:
                cv::circle(fig, c, rr, color, std::max(3, rr / 4), cv::LINE_AA);  // ring
                break;
            default: {
                // cross
                int t = std::max(4, rr / 3);
                cv::rectangle(fig, c - cv::Point(rr, t), c + cv::Point(rr, t), color, cv::FILLED, cv::LINE_AA);
                cv::rectangle(fig, c - cv::Point(t, rr), c + cv::Point(t, rr), color, cv::FILLED, cv::LINE_AA);
                break;
            }
        }
    }
    return fig;
}

cv::Mat render_procedural_background(Rng& rng, int side) {
    cv::Mat bg(side, side, CV_8UC3);
    int kind = int(rng.uniform_int(0, 9));
    auto light = [&](int lo) { return uchar(rng.uniform_int(lo, 255)); };
    if (kind <= 3) {
        // flat, mostly light (trademark convention)
        cv::Vec3b c = kind == 0 ? cv::Vec3b(255, 255, 255) : cv::Vec3b(light(190), light(190), light(190));
        bg.setTo(c);
    } else if (kind <= 5) {
        // vertical or horizontal gradient between two light tones
        cv::Vec3d a(light(150), light(150), light(150)), b(light(150), light(150), light(150));
        bool vertical = rng.bernoulli(0.5);
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                double t = vertical ? double(y) / (side - 1) : double(x) / (side - 1);
                cv::Vec3d c = a * (1 - t) + b * t;
                bg.at<cv::Vec3b>(y, x) = cv::Vec3b(uchar(c[0]), uchar(c[1]), uchar(c[2]));
            }
        }
    } else if (kind <= 7) {
        // flat base with mild white noise
        cv::Vec3b base(light(170), light(170), light(170));
        int amp = int(rng.uniform_int(4, 18));
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                cv::Vec3b c;
                for (int ch = 0; ch < 3; ++ch) {
                    int v = base[ch] + int(rng.uniform_int(-amp, amp));
                    c[ch] = uchar(std::clamp(v, 0, 255));
                }
                bg.at<cv::Vec3b>(y, x) = c;
            }
        }
    } else {
        // wide soft stripes
        cv::Vec3b a(light(170), light(170), light(170)), b(light(170), light(170), light(170));
        int period = int(rng.uniform_int(24, 80));
        bool vertical = rng.bernoulli(0.5);
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                int t = vertical ? y : x;
                bg.at<cv::Vec3b>(y, x) = ((t / period) % 2 == 0) ? a : b;
            }
        }
    }
    return bg;
}

AssetPool AssetPool::load(const fs::path& dir, bool keep_alpha) {
    AssetPool pool;
    if (!fs::exists(dir)) return pool;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        cv::Mat img = cv::imread(f.string(), keep_alpha ? cv::IMREAD_UNCHANGED : cv::IMREAD_COLOR);
        if (!img.empty()) pool.images.push_back(img);
    }
    return pool;
}

const cv::Mat& AssetPool::pick(Rng& rng) const {
    if (images.empty()) throw std::runtime_error("asset pool is empty");
    return images[size_t(rng.next() % images.size())];
}

bool generate_default_assets(const fs::path& root, const AssetCounts& counts, uint64_t seed,
                             const fs::path& font_dir) {
    bool wrote = false;
    auto nonempty = [](const fs::path& d) {
        return fs::exists(d) && fs::directory_iterator(d) != fs::directory_iterator();
    };

    char buf[64];
    fs::path bg_dir = root / "backgrounds";
    if (!nonempty(bg_dir)) {
        fs::create_directories(bg_dir);
        Rng rng = Rng::child(seed, 1);
        for (int i = 0; i < counts.backgrounds; ++i) {
            std::snprintf(buf, sizeof(buf), "bg_%04d.png", i);
            cv::imwrite((bg_dir / buf).string(), render_procedural_background(rng, 320));
        }
        wrote = true;
    }

    fs::path fig_dir = root / "figures";
    if (!nonempty(fig_dir)) {
        fs::create_directories(fig_dir);
        Rng rng = Rng::child(seed, 2);
        for (int i = 0; i < counts.figures; ++i) {
            std::snprintf(buf, sizeof(buf), "fig_%04d.png", i);
            cv::imwrite((fig_dir / buf).string(), render_procedural_figure(rng, 256));
        }
        wrote = true;
    }

    fs::path glyph_dir = root / "glyphs";
    if (!nonempty(glyph_dir)) {
        fs::create_directories(glyph_dir);
        FontBank fonts = FontBank::load(font_dir);
        Rng rng = Rng::child(seed, 3);
        for (int i = 0; i < counts.glyphs; ++i) {
            std::snprintf(buf, sizeof(buf), "word_%04d.png", i);
            std::string word = FontBank::random_word(rng);
            cv::imwrite((glyph_dir / buf).string(), fonts.render_word(rng, word, 64));
        }
        wrote = true;
    }
    return wrote;
}

}  // namespace tmr::dataset
