#include "tmr/segmenter/unet.hpp"

#include "tmr/nn/checkpoint.hpp"

#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace tmr::segmenter {

void UNetConfig::validate() const {
    if (depth < 1 || depth > 6) throw std::invalid_argument("UNet depth out of range");
    if (base_channels < 1) throw std::invalid_argument("UNet base_channels must be >= 1");
    int div = 1 << depth;
    if (input_size < div || input_size % div != 0) {
        throw std::invalid_argument("UNet input_size must be divisible by 2^depth");
    }
    if (!(dropout_keep > 0.f && dropout_keep <= 1.f)) {
        throw std::invalid_argument("dropout keep probability in (0,1]");
    }
}

nn::Tensor UNet::Block::forward(const nn::Tensor& x, bool train) {
    nn::Tensor t = c1->forward(x, train);
    if (b1) t = b1->forward(t, train);
    t = r1.forward(t, train);
    t = c2->forward(t, train);
    if (b2) t = b2->forward(t, train);
    return r2.forward(t, train);
}

nn::Tensor UNet::Block::backward(const nn::Tensor& dy) {
    nn::Tensor d = r2.backward(dy);
    if (b2) d = b2->backward(d);
    d = c2->backward(d);
    d = r1.backward(d);
    if (b1) d = b1->backward(d);
    return c1->backward(d);
}

UNet::UNet(const UNetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.init_seed);

    auto make_block = [&](const std::string& name, int in_c, int out_c) {
        Block b;
        b.c1 = std::make_unique<nn::Conv2d>(name + ".c1", in_c, out_c, 3, 1, 1);
        b.c2 = std::make_unique<nn::Conv2d>(name + ".c2", out_c, out_c, 3, 1, 1);
        b.c1->init_he(rng);
        b.c2->init_he(rng);
        b.b1 = std::make_unique<nn::BatchNorm2d>(name + ".bn1", out_c, cfg_.bn_decay, cfg_.bn_eps);
        b.b2 = std::make_unique<nn::BatchNorm2d>(name + ".bn2", out_c, cfg_.bn_decay, cfg_.bn_eps);
        return b;
    };

    int c_in = cfg_.in_channels;
    for (int d = 0; d < cfg_.depth; ++d) {
        int c_out = cfg_.base_channels << d;
        enc_.push_back(make_block("enc" + std::to_string(d), c_in, c_out));
        pools_.emplace_back();
        c_in = c_out;
    }
    int c_bott = cfg_.base_channels << cfg_.depth;
    bottleneck_ = make_block("bott", c_in, c_bott);
    dropout_ = std::make_unique<nn::Dropout>(cfg_.dropout_keep, cfg_.init_seed ^ 0xD50ULL);

    int c_up_in = c_bott;
    for (int d = cfg_.depth - 1; d >= 0; --d) {
        int c_skip = cfg_.base_channels << d;
        ups_.emplace_back();
        auto uc = std::make_unique<nn::Conv2d>("up" + std::to_string(d) + ".c", c_up_in, c_skip, 3, 1, 1);
        uc->init_he(rng);
        up_convs_.push_back(std::move(uc));
        up_bns_.push_back(std::make_unique<nn::BatchNorm2d>("up" + std::to_string(d) + ".bn", c_skip,
                                                             cfg_.bn_decay, cfg_.bn_eps));
        up_relus_.emplace_back();
        dec_.push_back(make_block("dec" + std::to_string(d), 2 * c_skip, c_skip));
        c_up_in = c_skip;
    }
    head_ = std::make_unique<nn::Conv2d>("head", cfg_.base_channels, 1, 1, 1, 0);
    head_->init_he(rng);
}

nn::Tensor UNet::forward(const nn::Tensor& x, bool train) {
    skip_.clear();
    skip_channels_.clear();
    nn::Tensor t = x;
    for (int d = 0; d < cfg_.depth; ++d) {
        t = enc_[size_t(d)].forward(t, train);
        skip_.push_back(t);
        skip_channels_.push_back(t.c);
        t = pools_[size_t(d)].forward(t, train);
    }
    t = bottleneck_.forward(t, train);
    t = dropout_->forward(t, train);
    for (int i = 0; i < cfg_.depth; ++i) {
        t = ups_[size_t(i)].forward(t, train);
        t = up_convs_[size_t(i)]->forward(t, train);
        t = up_bns_[size_t(i)]->forward(t, train);
        t = up_relus_[size_t(i)].forward(t, train);
        const nn::Tensor& skip = skip_[size_t(cfg_.depth - 1 - i)];
        t = nn::concat_channels(skip, t);
        t = dec_[size_t(i)].forward(t, train);
    }
    return head_->forward(t, train);
}

void UNet::backward(const nn::Tensor& dlogits) {
    nn::Tensor d = head_->backward(dlogits);
    std::vector<nn::Tensor> skip_grads(size_t(cfg_.depth));
    for (int i = cfg_.depth - 1; i >= 0; --i) {
        d = dec_[size_t(i)].backward(d);
        nn::Tensor d_skip, d_up;
        nn::split_channels(d, skip_channels_[size_t(cfg_.depth - 1 - i)], d_skip, d_up);
        skip_grads[size_t(cfg_.depth - 1 - i)] = std::move(d_skip);
        d = up_relus_[size_t(i)].backward(d_up);
        d = up_bns_[size_t(i)]->backward(d);
        d = up_convs_[size_t(i)]->backward(d);
        d = ups_[size_t(i)].backward(d);
    }
    d = dropout_->backward(d);
    d = bottleneck_.backward(d);
    for (int dd = cfg_.depth - 1; dd >= 0; --dd) {
        d = pools_[size_t(dd)].backward(d);
        // merge the skip branch gradient
        for (size_t i = 0; i < d.v.size(); ++i) d.v[i] += skip_grads[size_t(dd)].v[i];
        d = enc_[size_t(dd)].backward(d);
    }
}

void UNet::for_each_layer(const std::function<void(nn::Layer&)>& fn) {
    auto block = [&](Block& b) {
        fn(*b.c1);
        if (b.b1) fn(*b.b1);
        fn(*b.c2);
        if (b.b2) fn(*b.b2);
    };
    for (auto& b : enc_) block(b);
    block(bottleneck_);
    for (auto& c : up_convs_) fn(*c);
    for (auto& b : up_bns_) fn(*b);
    for (auto& b : dec_) block(b);
    fn(*head_);
}

std::vector<nn::Param*> UNet::params() {
    std::vector<nn::Param*> out;
    for_each_layer([&](nn::Layer& l) { l.collect_params(out); });
    return out;
}

void UNet::collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) {
    for_each_layer([&](nn::Layer& l) { l.collect_state(out); });
}

void UNet::save(const fs::path& dir) const {
    fs::create_directories(dir);
    json arch = {
        {"kind", "unet"},
        {"input_size", cfg_.input_size},
        {"in_channels", cfg_.in_channels},
        {"base_channels", cfg_.base_channels},
        {"depth", cfg_.depth},
        {"bn_decay", cfg_.bn_decay},
        {"bn_eps", cfg_.bn_eps},
        {"dropout_keep", cfg_.dropout_keep},
    };
    std::ofstream os(dir / "arch.json");
    os << arch.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write arch descriptor: " + (dir / "arch.json").string());

    std::vector<std::pair<std::string, std::vector<float>*>> state;
    const_cast<UNet*>(this)->collect_state(state);
    std::vector<std::pair<std::string, const std::vector<float>*>> tensors;
    tensors.reserve(state.size());
    for (auto& [name, vec] : state) tensors.emplace_back(name, vec);
    nn::write_weights(dir / "weights.bin", tensors);
}

std::unique_ptr<UNet> UNet::load(const fs::path& dir) {
    std::ifstream is(dir / "arch.json");
    if (!is) throw std::runtime_error("missing arch descriptor in " + dir.string());
    json arch = json::parse(is);
    if (arch.at("kind").get<std::string>() != "unet") {
        throw std::runtime_error("checkpoint is not a unet: " + dir.string());
    }
    UNetConfig cfg;
    cfg.input_size = arch.at("input_size").get<int>();
    cfg.in_channels = arch.at("in_channels").get<int>();
    cfg.base_channels = arch.at("base_channels").get<int>();
    cfg.depth = arch.at("depth").get<int>();
    cfg.bn_decay = arch.value("bn_decay", 0.997f);
    cfg.bn_eps = arch.value("bn_eps", 0.001f);
    cfg.dropout_keep = arch.value("dropout_keep", 0.9f);
    auto net = std::make_unique<UNet>(cfg);

    auto weights = nn::read_weights(dir / "weights.bin");
    std::vector<std::pair<std::string, std::vector<float>*>> state;
    net->collect_state(state);
    for (auto& [name, vec] : state) {
        auto it = weights.find(name);
        if (it == weights.end()) throw std::runtime_error("checkpoint missing tensor: " + name);
        if (it->second.size() != vec->size()) {
            throw std::runtime_error("checkpoint/architecture mismatch for tensor: " + name);
        }
        *vec = it->second;
    }
    return net;
}

std::vector<std::vector<float>> UNet::state_snapshot() const {
    std::vector<std::pair<std::string, std::vector<float>*>> state;
    const_cast<UNet*>(this)->collect_state(state);
    std::vector<std::vector<float>> snap;
    snap.reserve(state.size());
    for (auto& [name, vec] : state) snap.push_back(*vec);
    return snap;
}

void UNet::restore_snapshot(const std::vector<std::vector<float>>& snap) {
    std::vector<std::pair<std::string, std::vector<float>*>> state;
    collect_state(state);
    if (snap.size() != state.size()) throw std::logic_error("snapshot size mismatch");
    for (size_t i = 0; i < snap.size(); ++i) *state[i].second = snap[i];
}

void image_to_tensor(const cv::Mat& bgr, nn::Tensor& t, int ni) {
    CV_Assert(bgr.type() == CV_8UC3 && bgr.rows == t.h && bgr.cols == t.w && t.c == 3);
    for (int ch = 0; ch < 3; ++ch) {
        float* plane = t.plane(ni, ch);
        for (int y = 0; y < bgr.rows; ++y) {
            const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
            for (int x = 0; x < bgr.cols; ++x) {
                plane[size_t(y) * t.w + x] = float(row[x][ch]) / 255.f - 0.5f;
            }
        }
    }
}

std::shared_ptr<UnetSegmenter> UnetSegmenter::load(const fs::path& checkpoint_dir) {
    return std::make_shared<UnetSegmenter>(std::shared_ptr<UNet>(UNet::load(checkpoint_dir)));
}

cv::Mat1f UnetSegmenter::segment(const cv::Mat& image_bgr) const {
    if (image_bgr.empty()) throw std::invalid_argument("segment: empty image");
    cv::Mat bgr = image_bgr;
    if (bgr.channels() == 1) cv::cvtColor(bgr, bgr, cv::COLOR_GRAY2BGR);
    const int s = net_->config().input_size;
    cv::Mat resized;
    cv::resize(bgr, resized, cv::Size(s, s), 0, 0,
               (bgr.cols > s || bgr.rows > s) ? cv::INTER_AREA : cv::INTER_LINEAR);

    nn::Tensor x(1, 3, s, s);
    image_to_tensor(resized, x, 0);
    // inference path must not mutate shared state; UNet caches activations,
    // so serialize access through a per-call copy of the logits only
    nn::Tensor logits = const_cast<UNet&>(*net_).forward(x, /*train=*/false);

    cv::Mat1f prob(s, s);
    for (int y = 0; y < s; ++y) {
        for (int x2 = 0; x2 < s; ++x2) {
            float z = logits.at(0, 0, y, x2);
            float p = z >= 0.f ? 1.f / (1.f + std::exp(-z)) : std::exp(z) / (1.f + std::exp(z));
            prob(y, x2) = p;
        }
    }
    if (prob.rows == image_bgr.rows && prob.cols == image_bgr.cols) return prob;
    cv::Mat1f full;
    cv::resize(prob, full, cv::Size(image_bgr.cols, image_bgr.rows), 0, 0, cv::INTER_LINEAR);
    // bilinear can overshoot by epsilon; clamp back into [0,1]
    for (int y = 0; y < full.rows; ++y) {
        float* row = full[y];
        for (int x2 = 0; x2 < full.cols; ++x2) row[x2] = std::clamp(row[x2], 0.f, 1.f);
    }
    return full;
}

double pixel_f1(const cv::Mat1b& pred, const cv::Mat1b& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("pixel_f1: shape mismatch");
    long long tp = 0, fp = 0, fn = 0;
    for (int y = 0; y < pred.rows; ++y) {
        const uchar* p = pred[y];
        const uchar* t = truth[y];
        for (int x = 0; x < pred.cols; ++x) {
            bool pp = p[x] != 0, tt = t[x] != 0;
            if (pp && tt) ++tp;
            else if (pp) ++fp;
            else if (tt) ++fn;
        }
    }
    if (tp + fp + fn == 0) return 1.0;  // both empty
    return 2.0 * tp / double(2 * tp + fp + fn);
}

}  // namespace tmr::segmenter
