#include "tmr/dataset/synthesis.hpp"

#include "tmr/dataset/preprocess.hpp"
#include "tmr/nn/layers.hpp"  // parallel_for

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fs = std::filesystem;

namespace tmr::dataset {

void SynthesisConfig::validate() const {
    if (count <= 0) throw std::invalid_argument("synthesis count must be > 0");
    if (canvas_side < 32) throw std::invalid_argument("canvas side too small");
    if (glyph_count_min < 0 || glyph_count_max < glyph_count_min) {
        throw std::invalid_argument("bad glyph count range");
    }
    if (glyph_height_min < 8 || glyph_height_max < glyph_height_min) {
        throw std::invalid_argument("bad glyph height range");
    }
    if (!(mask_threshold > 0.0 && mask_threshold < 1.0)) {
        throw std::invalid_argument("mask threshold must be in (0,1)");
    }
    if (figure_probability < 0.0 || figure_probability > 1.0) {
        throw std::invalid_argument("figure probability must be in [0,1]");
    }
}

LoadedPools LoadedPools::open(const SynthesisConfig& cfg) {
    LoadedPools p;
    p.glyphs = AssetPool::load(cfg.text_asset_pool);
    p.backgrounds = AssetPool::load(cfg.background_pool);
    p.figures = AssetPool::load(cfg.figure_pool, /*keep_alpha=*/true);
    if (p.glyphs.empty()) throw std::runtime_error("text asset pool is empty: " + cfg.text_asset_pool.string());
    if (p.backgrounds.empty()) {
        throw std::runtime_error("background pool is empty: " + cfg.background_pool.string());
    }
    if (p.figures.empty()) throw std::runtime_error("figure pool is empty: " + cfg.figure_pool.string());
    return p;
}

namespace {

struct FigurePose {
    double scale_fraction;  // of canvas side
    double dx, dy;          // center offset fractions
};

cv::Mat1b paste_figure(cv::Mat& canvas, const cv::Mat& fig_bgra, const FigurePose& pose) {
    const int side = canvas.cols;
    int target = std::max(16, int(std::lround(side * pose.scale_fraction)));
    cv::Mat fig;
    cv::resize(fig_bgra, fig, cv::Size(target, target), 0, 0, cv::INTER_AREA);

    int cx = side / 2 + int(std::lround(pose.dx * side));
    int cy = side / 2 + int(std::lround(pose.dy * side));
    int x0 = std::clamp(cx - target / 2, 0, side - target);
    int y0 = std::clamp(cy - target / 2, 0, side - target);

    cv::Mat1b coverage(canvas.rows, canvas.cols, uchar(0));
    for (int y = 0; y < target; ++y) {
        const cv::Vec4b* src = fig.ptr<cv::Vec4b>(y);
        cv::Vec3b* dst = canvas.ptr<cv::Vec3b>(y0 + y) + x0;
        uchar* cov = coverage.ptr<uchar>(y0 + y) + x0;
        for (int x = 0; x < target; ++x) {
            int a = src[x][3];
            if (a == 0) continue;
            for (int ch = 0; ch < 3; ++ch) {
                dst[x][ch] = uchar((src[x][ch] * a + dst[x][ch] * (255 - a) + 127) / 255);
            }
            if (a > 127) cov[x] = 255;
        }
    }
    return coverage;
}

cv::Mat1b prepare_glyph(Rng& rng, const SynthesisConfig& cfg, const cv::Mat& word_img, int max_height) {
    cv::Mat1b alpha;
    if (word_img.channels() == 1) {
        alpha = word_img;
    } else {
        cv::extractChannel(word_img, alpha, 0);
    }
    int hi = std::min(cfg.glyph_height_max, std::max(cfg.glyph_height_min, max_height));
    int target_h = int(rng.uniform_int(cfg.glyph_height_min, hi));
    double s = double(target_h) / alpha.rows;
    cv::Mat1b scaled;
    cv::resize(alpha, scaled, cv::Size(std::max(4, int(std::lround(alpha.cols * s))), target_h), 0, 0,
               s < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);

    double angle = rng.uniform(cfg.rotation_min_deg, cfg.rotation_max_deg);
    if (std::abs(angle) < 1e-9) return scaled;
    cv::Point2f center(scaled.cols / 2.f, scaled.rows / 2.f);
    cv::Mat rot = cv::getRotationMatrix2D(center, angle, 1.0);
    double rad = std::abs(angle) * CV_PI / 180.0;
    int bw = int(std::ceil(scaled.cols * std::cos(rad) + scaled.rows * std::sin(rad)));
    int bh = int(std::ceil(scaled.cols * std::sin(rad) + scaled.rows * std::cos(rad)));
    rot.at<double>(0, 2) += bw / 2.0 - center.x;
    rot.at<double>(1, 2) += bh / 2.0 - center.y;
    cv::Mat1b out;
    cv::warpAffine(scaled, out, rot, cv::Size(bw, bh), cv::INTER_LINEAR, cv::BORDER_CONSTANT, cv::Scalar(0));
    return out;
}

cv::Vec3b sample_text_color(Rng& rng, const cv::Mat& pretext, const cv::Rect& roi, double band,
                            bool prefer_dark) {
    cv::Scalar mean = cv::mean(pretext(roi));
    for (int attempt = 0; attempt < 64; ++attempt) {
        cv::Vec3b c;
        if (prefer_dark) {
            for (int ch = 0; ch < 3; ++ch) c[ch] = uchar(rng.uniform_int(0, 140));
        } else {
            for (int ch = 0; ch < 3; ++ch) c[ch] = uchar(rng.uniform_int(0, 255));
        }
        double d = 0.0;
        for (int ch = 0; ch < 3; ++ch) d = std::max(d, std::abs(double(c[ch]) - mean[ch]) / 255.0);
        if (d > band + 0.02) return c;  // small headroom keeps anti-aliased cores solid
    }
    // fall back to the farthest primary tone
    return mean[0] + mean[1] + mean[2] > 3 * 127 ? cv::Vec3b(0, 0, 0) : cv::Vec3b(255, 255, 255);
}

void stamp_glyph(cv::Mat& canvas, const cv::Mat1b& alpha, cv::Point tl, cv::Vec3b color) {
    cv::Rect glyph_rect(tl.x, tl.y, alpha.cols, alpha.rows);
    cv::Rect img_rect(0, 0, canvas.cols, canvas.rows);
    cv::Rect inter = glyph_rect & img_rect;
    for (int y = inter.y; y < inter.y + inter.height; ++y) {
        const uchar* a = alpha.ptr<uchar>(y - tl.y);
        cv::Vec3b* dst = canvas.ptr<cv::Vec3b>(y);
        for (int x = inter.x; x < inter.x + inter.width; ++x) {
            int av = a[x - tl.x];
            if (av == 0) continue;
            cv::Vec3b& px = dst[x];
            for (int ch = 0; ch < 3; ++ch) {
                px[ch] = uchar((color[ch] * av + px[ch] * (255 - av) + 127) / 255);
            }
        }
    }
}

/// Places one glyph. `band` restricts the vertical placement range
/// (inclusive-exclusive rows); empty band means anywhere.
void place_text(Rng& rng, const SynthesisConfig& cfg, const LoadedPools& pools, cv::Mat& canvas,
                const cv::Mat& pretext, std::pair<int, int> row_band, bool prefer_dark) {
    const int side = canvas.cols;
    int band_h = row_band.second - row_band.first;
    if (band_h < cfg.glyph_height_min + 2) return;  // nowhere to put it

    for (int attempt = 0; attempt < cfg.placement_retries; ++attempt) {
        cv::Mat1b glyph = prepare_glyph(rng, cfg, pools.glyphs.pick(rng), band_h - 2);
        if (glyph.rows >= band_h) continue;
        int tx = int(rng.uniform_int(-glyph.cols / 4, side - 3 * glyph.cols / 4));
        int ty = row_band.first + int(rng.uniform_int(0, band_h - glyph.rows - 1));
        cv::Rect inter = cv::Rect(tx, ty, glyph.cols, glyph.rows) & cv::Rect(0, 0, side, side);
        if (inter.empty()) continue;  // fully off-canvas; retry
        cv::Vec3b color = sample_text_color(rng, pretext, inter, cfg.mask_threshold, prefer_dark);
        stamp_glyph(canvas, glyph, {tx, ty}, color);
        return;
    }
    throw std::runtime_error("text placement failed after bounded retries");
}

cv::Mat1b text_mask_from_rule(const cv::Mat& composite, const cv::Mat& pretext, double threshold) {
    cv::Mat1b mask(composite.rows, composite.cols, uchar(0));
    for (int y = 0; y < composite.rows; ++y) {
        const cv::Vec3b* a = composite.ptr<cv::Vec3b>(y);
        const cv::Vec3b* b = pretext.ptr<cv::Vec3b>(y);
        uchar* m = mask.ptr<uchar>(y);
        for (int x = 0; x < composite.cols; ++x) {
            int d = 0;
            for (int ch = 0; ch < 3; ++ch) d = std::max(d, std::abs(int(a[x][ch]) - int(b[x][ch])));
            if (double(d) / 255.0 >= threshold) m[x] = 255;
        }
    }
    return mask;
}

FigurePose identity_pose(const SynthesisConfig& cfg, long long identity) {
    Rng pr = Rng::child(cfg.rng_seed ^ 0xF16F16ULL, uint64_t(identity));
    return FigurePose{pr.uniform(0.45, 0.7), pr.uniform(-0.05, 0.05), pr.uniform(-0.05, 0.05)};
}

cv::Mat identity_figure(const SynthesisConfig& cfg, long long identity) {
    Rng fr = Rng::child(cfg.rng_seed ^ 0xF16A55ULL, uint64_t(identity));
    return render_procedural_figure(fr, 256);
}

}  // namespace

SynthSample synthesize_composite(Rng& rng, const SynthesisConfig& cfg, const LoadedPools& pools,
                                 CompositeKind kind, long long figure_identity) {
    const int side = cfg.canvas_side;
    SynthSample out;

    // background layer
    cv::Mat canvas;
    bool textured_bg = kind == CompositeKind::BackgroundText;
    if (textured_bg) {
        cv::resize(pools.backgrounds.pick(rng), canvas, cv::Size(side, side), 0, 0, cv::INTER_LINEAR);
    } else {
        canvas = cv::Mat(side, side, CV_8UC3, cv::Scalar(255, 255, 255));
    }

    // figure layer
    bool with_figure = kind == CompositeKind::FigureOnly || kind == CompositeKind::FigureAndText ||
                       kind == CompositeKind::CleanFigure ||
                       (kind == CompositeKind::BackgroundText && rng.bernoulli(cfg.figure_probability));
    cv::Rect fig_bbox;
    if (with_figure) {
        cv::Mat fig;
        FigurePose pose{};
        if (figure_identity >= 0) {
            fig = identity_figure(cfg, figure_identity);
            pose = identity_pose(cfg, figure_identity);
        } else {
            fig = pools.figures.pick(rng);
            pose = FigurePose{rng.uniform(0.35, 0.7), rng.uniform(-0.12, 0.12), rng.uniform(-0.12, 0.12)};
        }
        out.figure_mask = paste_figure(canvas, fig, pose);
        fig_bbox = cv::boundingRect(out.figure_mask);
    }

    cv::Mat pretext = canvas.clone();

    // text layer
    int n_glyphs = 0;
    switch (kind) {
        case CompositeKind::BackgroundText:
            n_glyphs = int(rng.uniform_int(cfg.glyph_count_min, cfg.glyph_count_max));
            break;
        case CompositeKind::TextOnly:
            n_glyphs = int(rng.uniform_int(std::max(1, cfg.glyph_count_min), std::max(1, cfg.glyph_count_max)));
            break;
        case CompositeKind::FigureAndText:
            n_glyphs = int(rng.uniform_int(1, std::max(1, cfg.glyph_count_max)));
            break;
        default:
            n_glyphs = 0;
    }

    for (int g = 0; g < n_glyphs; ++g) {
        std::pair<int, int> band{0, side};
        if (kind == CompositeKind::FigureAndText && with_figure) {
            // captions stay clear of the mark itself
            int top_h = fig_bbox.y;
            int bottom_h = side - (fig_bbox.y + fig_bbox.height);
            bool use_top = top_h >= bottom_h ? !rng.bernoulli(0.25) : rng.bernoulli(0.25);
            band = use_top && top_h > cfg.glyph_height_min + 2
                       ? std::pair<int, int>{0, fig_bbox.y}
                       : std::pair<int, int>{fig_bbox.y + fig_bbox.height, side};
        }
        bool prefer_dark = !textured_bg;  // captions on white marks are dark in practice
        place_text(rng, cfg, pools, canvas, pretext, band, prefer_dark);
    }

    out.image = canvas;
    out.text_mask = text_mask_from_rule(canvas, pretext, cfg.mask_threshold);
    return out;
}

SynthSample generate_ptl_sample(Rng& rng, const SynthesisConfig& cfg, const LoadedPools& pools) {
    return synthesize_composite(rng, cfg, pools, CompositeKind::BackgroundText);
}

namespace {

void run_indexed(int n, const std::function<void(int)>& fn) {
    std::exception_ptr err;
    std::mutex err_mu;
    nn::parallel_for(n, [&](int i) {
        try {
            fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!err) err = std::current_exception();
        }
    });
    if (err) std::rethrow_exception(err);
}

void write_image_or_throw(const fs::path& file, const cv::Mat& img) {
    if (!cv::imwrite(file.string(), img)) {
        throw std::runtime_error("cannot write image: " + file.string());
    }
}

}  // namespace

void write_mask(const cv::Mat1b& mask, const fs::path& file) { write_image_or_throw(file, mask); }

cv::Mat1b read_mask(const fs::path& file) {
    cv::Mat m = cv::imread(file.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw std::runtime_error("cannot read mask: " + file.string());
    cv::Mat1b out;
    cv::threshold(m, out, 127, 255, cv::THRESH_BINARY);
    return out;
}

DatasetManifest generate_ptl_dataset(const SynthesisConfig& cfg, const fs::path& out_dir,
                                     const std::string& manifest_name) {
    cfg.validate();
    LoadedPools pools = LoadedPools::open(cfg);
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    fs::create_directories(out_dir / "masks", ec);
    if (!fs::exists(out_dir / "images") || !fs::exists(out_dir / "masks")) {
        throw std::runtime_error("cannot create output directory: " + out_dir.string());
    }

    DatasetManifest m;
    m.purpose = Purpose::PTL;
    m.base_dir = out_dir;
    m.records.resize(size_t(cfg.count));

    run_indexed(cfg.count, [&](int i) {
        Rng rng = Rng::child(cfg.rng_seed, uint64_t(i));
        SynthSample s = generate_ptl_sample(rng, cfg, pools);
        char img_rel[64], mask_rel[64], id[32];
        std::snprintf(id, sizeof(id), "ptl_%06d", i);
        std::snprintf(img_rel, sizeof(img_rel), "images/ptl_%06d.png", i);
        std::snprintf(mask_rel, sizeof(mask_rel), "masks/ptl_%06d.png", i);
        write_image_or_throw(out_dir / img_rel, s.image);
        write_mask(s.text_mask, out_dir / mask_rel);
        ImageRecord& r = m.records[size_t(i)];
        r.id = id;
        r.path = img_rel;
        r.mask_path = mask_rel;
    });

    save_manifest(m, out_dir / manifest_name);
    return m;
}

DatasetManifest generate_tt_dataset(const SynthesisConfig& cfg, int per_class, const fs::path& out_dir,
                                    const std::string& manifest_name) {
    if (per_class <= 0) throw std::invalid_argument("per_class must be > 0");
    cfg.validate();
    LoadedPools pools = LoadedPools::open(cfg);
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    if (!fs::exists(out_dir / "images")) {
        throw std::runtime_error("cannot create output directory: " + out_dir.string());
    }

    struct ClassSpec {
        TypeLabel label;
        CompositeKind kind;
        const char* stem;
    };
    const ClassSpec classes[] = {
        {TypeLabel::TEXT_ONLY, CompositeKind::TextOnly, "text"},
        {TypeLabel::FIGURE_ONLY, CompositeKind::FigureOnly, "fig"},
        {TypeLabel::FIGURE_AND_TEXT, CompositeKind::FigureAndText, "both"},
    };

    DatasetManifest m;
    m.purpose = Purpose::TT;
    m.base_dir = out_dir;
    m.records.resize(size_t(per_class) * 3);

    run_indexed(per_class * 3, [&](int i) {
        int cls = i / per_class;
        int k = i % per_class;
        Rng rng = Rng::child(cfg.rng_seed ^ (0x7700ULL + uint64_t(cls)), uint64_t(k));
        SynthSample s = synthesize_composite(rng, cfg, pools, classes[cls].kind);
        char rel[64], id[48];
        std::snprintf(id, sizeof(id), "tt_%s_%05d", classes[cls].stem, k);
        std::snprintf(rel, sizeof(rel), "images/tt_%s_%05d.png", classes[cls].stem, k);
        write_image_or_throw(out_dir / rel, s.image);
        ImageRecord& r = m.records[size_t(i)];
        r.id = id;
        r.path = rel;
        r.type_label = classes[cls].label;
    });

    save_manifest(m, out_dir / manifest_name);
    return m;
}

TtSplit build_tt_manifest(const DatasetManifest& catalog, int per_class, int val_total, uint64_t seed) {
    if (per_class <= 0) throw std::invalid_argument("per_class must be > 0");
    if (val_total < 0) throw std::invalid_argument("val_total must be >= 0");

    std::map<TypeLabel, std::vector<const ImageRecord*>> by_class;
    for (const auto& r : catalog.records) {
        if (r.type_label) by_class[*r.type_label].push_back(&r);
    }

    TtSplit split;
    split.train.purpose = Purpose::TT;
    split.train.base_dir = catalog.base_dir;
    split.validation.purpose = Purpose::TT;
    split.validation.base_dir = catalog.base_dir;

    const TypeLabel labels[] = {TypeLabel::TEXT_ONLY, TypeLabel::FIGURE_ONLY, TypeLabel::FIGURE_AND_TEXT};
    for (int c = 0; c < 3; ++c) {
        auto it = by_class.find(labels[c]);
        int val_count = val_total / 3 + (c < val_total % 3 ? 1 : 0);
        int need = per_class + val_count;
        if (it == by_class.end() || int(it->second.size()) < need) {
            throw std::invalid_argument("insufficient labeled records for class " + to_string(labels[c]) +
                                        ": need " + std::to_string(need));
        }
        std::vector<const ImageRecord*> recs = it->second;
        Rng rng = Rng::child(seed, uint64_t(c));
        rng.shuffle(recs);
        for (int i = 0; i < per_class; ++i) split.train.records.push_back(*recs[size_t(i)]);
        for (int i = 0; i < val_count; ++i) split.validation.records.push_back(*recs[size_t(per_class + i)]);
    }
    return split;
}

DatasetManifest generate_retrieval_benchmark(const SynthesisConfig& cfg, int identities, int overlays_per,
                                             const fs::path& out_dir, const std::string& manifest_name) {
    if (identities <= 0 || overlays_per <= 0) throw std::invalid_argument("benchmark sizes must be > 0");
    cfg.validate();
    LoadedPools pools = LoadedPools::open(cfg);
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    if (!fs::exists(out_dir / "images")) {
        throw std::runtime_error("cannot create output directory: " + out_dir.string());
    }

    DatasetManifest m;
    m.purpose = Purpose::EVAL;
    m.base_dir = out_dir;
    const int per_identity = overlays_per + 1;
    m.records.resize(size_t(identities) * per_identity);

    run_indexed(identities, [&](int i) {
        char id[48], rel[64];
        // clean render is the query
        Rng qr = Rng::child(cfg.rng_seed ^ 0xBE9CULL, uint64_t(i));
        SynthSample clean = synthesize_composite(qr, cfg, pools, CompositeKind::CleanFigure, i);
        std::snprintf(id, sizeof(id), "q_%04d", i);
        std::snprintf(rel, sizeof(rel), "images/q_%04d.png", i);
        write_image_or_throw(out_dir / rel, clean.image);
        ImageRecord q;
        q.id = id;
        q.path = rel;
        q.relevant_ids.emplace();

        for (int k = 0; k < overlays_per; ++k) {
            Rng orr = Rng::child(cfg.rng_seed ^ 0xC0135ULL, uint64_t(i) * 1000 + k);
            SynthSample over = synthesize_composite(orr, cfg, pools, CompositeKind::FigureAndText, i);
            char oid[48], orel[64];
            std::snprintf(oid, sizeof(oid), "c_%04d_%d", i, k);
            std::snprintf(orel, sizeof(orel), "images/c_%04d_%d.png", i, k);
            write_image_or_throw(out_dir / orel, over.image);
            ImageRecord r;
            r.id = oid;
            r.path = orel;
            q.relevant_ids->insert(oid);
            m.records[size_t(i) * per_identity + 1 + k] = std::move(r);
        }
        m.records[size_t(i) * per_identity] = std::move(q);
    });

    save_manifest(m, out_dir / manifest_name);
    return m;
}

}  // namespace tmr::dataset
