#pragma once

#include "tmr/core/types.hpp"
#include "tmr/nn/layers.hpp"

#include <opencv2/core.hpp>

#include <filesystem>
#include <memory>
#include <vector>

namespace tmr::segmenter {

/// Text/non-text pixel segmenter interface. Implementations must be
/// immutable after load and safe for concurrent readers.
class TextSegmenter {
public:
    virtual ~TextSegmenter() = default;
    /// Per-pixel text probability at the input image's resolution.
    virtual cv::Mat1f segment(const cv::Mat& image_bgr) const = 0;
};

struct UNetConfig {
    int input_size = 256;  // network resolution; must be divisible by 2^depth
    int in_channels = 3;
    int base_channels = 8;
    int depth = 3;  // number of down/up levels around the bottleneck
    float bn_decay = 0.997f;
    float bn_eps = 0.001f;
    float dropout_keep = 0.9f;
    uint64_t init_seed = 1;

    void validate() const;
};

/// Encoder-decoder fully-convolutional net with skip connections feeding
/// encoder features into the decoder by channel concatenation. Output is a
/// 1-channel logit map at input resolution.
class UNet {
public:
    explicit UNet(const UNetConfig& cfg);

    nn::Tensor forward(const nn::Tensor& x, bool train);
    /// Backprop from d(loss)/dlogits; accumulates parameter gradients.
    void backward(const nn::Tensor& dlogits);

    std::vector<nn::Param*> params();
    const UNetConfig& config() const { return cfg_; }

    void save(const std::filesystem::path& dir) const;
    static std::unique_ptr<UNet> load(const std::filesystem::path& dir);

    /// Weight snapshot for best-checkpoint tracking.
    std::vector<std::vector<float>> state_snapshot() const;
    void restore_snapshot(const std::vector<std::vector<float>>& snap);

private:
    struct Block {  // conv-bn-relu x2
        std::unique_ptr<nn::Conv2d> c1, c2;
        std::unique_ptr<nn::BatchNorm2d> b1, b2;
        nn::ReLU r1, r2;

        nn::Tensor forward(const nn::Tensor& x, bool train);
        nn::Tensor backward(const nn::Tensor& dy);
    };

    UNetConfig cfg_;
    std::vector<Block> enc_;
    std::vector<nn::MaxPool2> pools_;
    Block bottleneck_;
    std::unique_ptr<nn::Dropout> dropout_;
    std::vector<nn::Upsample2> ups_;
    std::vector<std::unique_ptr<nn::Conv2d>> up_convs_;  // channel reduction after upsample
    std::vector<std::unique_ptr<nn::BatchNorm2d>> up_bns_;
    std::vector<nn::ReLU> up_relus_;
    std::vector<Block> dec_;
    std::unique_ptr<nn::Conv2d> head_;

    // forward caches for the concat backward split
    std::vector<nn::Tensor> skip_;
    std::vector<int> skip_channels_;

    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out);
    void for_each_layer(const std::function<void(nn::Layer&)>& fn);
};

/// Trained UNet bound to image-space inference: resizes to the network
/// resolution, runs the net, and resamples the probability map back to the
/// input resolution (bilinear).
class UnetSegmenter : public TextSegmenter {
public:
    explicit UnetSegmenter(std::shared_ptr<UNet> net) : net_(std::move(net)) {}

    static std::shared_ptr<UnetSegmenter> load(const std::filesystem::path& checkpoint_dir);

    cv::Mat1f segment(const cv::Mat& image_bgr) const override;

    const UNet& net() const { return *net_; }
    UNet& net() { return *net_; }

private:
    std::shared_ptr<UNet> net_;
};

/// Converts a BGR image to the network input tensor layout (RGB order not
/// needed; channels are learned). Values scaled to [-0.5, 0.5].
void image_to_tensor(const cv::Mat& bgr, nn::Tensor& t, int ni);

/// F1 over the text class for two binary masks of identical size; 1.0 when
/// both are empty. Throws on shape mismatch.
double pixel_f1(const cv::Mat1b& pred, const cv::Mat1b& truth);

}  // namespace tmr::segmenter
