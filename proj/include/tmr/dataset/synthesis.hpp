#pragma once

#include "tmr/core/rng.hpp"
#include "tmr/dataset/assets.hpp"
#include "tmr/dataset/manifest.hpp"

#include <opencv2/core.hpp>

#include <filesystem>
#include <optional>
#include <utility>

namespace tmr::dataset {

struct SynthesisConfig {
    int count = 2000;

    std::filesystem::path text_asset_pool;    // word alpha images
    std::filesystem::path background_pool;    // BGR textures
    std::filesystem::path figure_pool;        // BGRA marks
    std::filesystem::path font_dir;           // used when bootstrapping pools

    int canvas_side = 300;

    // text placement
    int glyph_count_min = 1;
    int glyph_count_max = 3;
    int glyph_height_min = 18;
    int glyph_height_max = 72;
    double rotation_min_deg = -25.0;
    double rotation_max_deg = 25.0;

    /// Ground-truth rule threshold: a pixel is text iff the normalized
    /// max-channel difference from the pre-text composite is >= this value.
    /// Glyph colors are sampled outside this band around the local
    /// background mean so the truth stays well defined.
    double mask_threshold = 0.05;

    double figure_probability = 0.5;  // PTL composites may carry a figure

    int placement_retries = 10;

    uint64_t rng_seed = 1;

    void validate() const;
};

/// Composite plus the exact masks the generator owns: text ground truth per
/// the normalized-difference rule, and figure coverage when a figure was
/// drawn.
struct SynthSample {
    cv::Mat image;          // CV_8UC3
    cv::Mat1b text_mask;    // 255 = text
    cv::Mat1b figure_mask;  // 255 = figure ink (empty Mat when no figure)
};

enum class CompositeKind {
    BackgroundText,  // PTL: background (maybe figure) + text
    TextOnly,
    FigureOnly,
    FigureAndText,  // figure centered, captions kept outside its extent
    CleanFigure,    // figure centered, no text
};

struct LoadedPools {
    AssetPool glyphs;
    AssetPool backgrounds;
    AssetPool figures;

    /// Loads the configured directories; throws if a required pool is empty.
    static LoadedPools open(const SynthesisConfig& cfg);
};

/// Single composite with generator-owned ground truth. `figure_identity`,
/// when >= 0, pins the figure and its pose so multiple renders share the
/// same underlying mark (retrieval benchmarks).
SynthSample synthesize_composite(Rng& rng, const SynthesisConfig& cfg, const LoadedPools& pools,
                                 CompositeKind kind, long long figure_identity = -1);

/// PTL pair (image, text mask).
SynthSample generate_ptl_sample(Rng& rng, const SynthesisConfig& cfg, const LoadedPools& pools);

/// Writes `cfg.count` image/mask pairs plus a PTL manifest into out_dir.
/// Deterministic under a fixed seed. Returns the saved manifest.
DatasetManifest generate_ptl_dataset(const SynthesisConfig& cfg, const std::filesystem::path& out_dir,
                                     const std::string& manifest_name = "ptl.jsonl");

/// Synthesizes a labeled trademark-type catalog (per_class records for each
/// of the three classes) into out_dir.
DatasetManifest generate_tt_dataset(const SynthesisConfig& cfg, int per_class,
                                    const std::filesystem::path& out_dir,
                                    const std::string& manifest_name = "tt_catalog.jsonl");

struct TtSplit {
    DatasetManifest train;
    DatasetManifest validation;
};

/// Balanced per-class sampling from a labeled catalog plus a stratified
/// held-out validation split (val_total records across the classes).
/// Throws when a class has too few labeled records.
TtSplit build_tt_manifest(const DatasetManifest& catalog, int per_class, int val_total,
                          uint64_t seed = 17);

/// Synthetic retrieval benchmark: `identities` marks rendered clean (the
/// queries, with relevant_ids ground truth) and with `overlays_per` random
/// text overlays each (the corpus). EVAL manifest covering both.
DatasetManifest generate_retrieval_benchmark(const SynthesisConfig& cfg, int identities,
                                             int overlays_per, const std::filesystem::path& out_dir,
                                             const std::string& manifest_name = "bench.jsonl");

/// Mask file I/O: single-channel 8-bit, 255 = text.
void write_mask(const cv::Mat1b& mask, const std::filesystem::path& file);
cv::Mat1b read_mask(const std::filesystem::path& file);

}  // namespace tmr::dataset
