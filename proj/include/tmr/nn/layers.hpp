#pragma once

#include "tmr/core/rng.hpp"
#include "tmr/nn/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tmr::nn {

enum class PadMode { Zero, Replicate };

class Layer {
public:
    virtual ~Layer() = default;
    /// Forward pass; `train` selects training behaviour (batch stats,
    /// dropout). Layers cache whatever backward() needs.
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    /// Backward pass for the most recent forward(). Accumulates parameter
    /// gradients and returns the gradient w.r.t. the layer input.
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect_params(std::vector<Param*>& out) {}
    /// Named state for checkpointing (weights plus e.g. BN running stats).
    virtual void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) {}
};

/// 3x3-style convolution via im2col + GEMM. Gradients are accumulated in a
/// fixed sample order so results do not depend on the thread count.
class Conv2d : public Layer {
public:
    Conv2d(std::string name, int in_c, int out_c, int kernel, int stride, int pad,
           PadMode pad_mode = PadMode::Zero);

    void init_he(Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) override;

    int out_size(int in) const;

    int in_channels() const { return in_c_; }
    int out_channels() const { return out_c_; }
    Param& weight() { return w_; }
    Param& bias() { return b_; }

private:
    void im2col(const Tensor& x, int ni, std::vector<float>& col, int oh, int ow) const;

    std::string name_;
    int in_c_, out_c_, k_, stride_, pad_;
    PadMode pad_mode_;
    Param w_;  // (out_c, in_c*k*k) row-major
    Param b_;  // (out_c)
    Tensor x_;
};

/// Batch normalization over (N,H,W) per channel.
class BatchNorm2d : public Layer {
public:
    BatchNorm2d(std::string name, int channels, float decay = 0.997f, float eps = 0.001f);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) override;

private:
    std::string name_;
    int c_;
    float decay_, eps_;
    Param gamma_, beta_;
    std::vector<float> running_mean_, running_var_;
    // backward cache
    Tensor xhat_;
    std::vector<float> inv_std_;
    bool trained_forward_ = false;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    Tensor y_;
};

/// 2x2 max pooling, stride 2. Input dims must be even.
class MaxPool2 : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    int in_h_ = 0, in_w_ = 0;
    std::vector<uint32_t> argmax_;
    int n_ = 0, c_ = 0;
};

/// Nearest-neighbour 2x upsampling.
class Upsample2 : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    int in_h_ = 0, in_w_ = 0;
};

/// Inverted dropout; identity when !train.
class Dropout : public Layer {
public:
    Dropout(float keep_prob, uint64_t seed);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    float keep_;
    Rng rng_;
    std::vector<float> mask_;
    bool applied_ = false;
};

/// Channel concatenation of two tensors with equal N,H,W.
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& dy, int c_a, Tensor& da, Tensor& db);

/// Fully connected layer on flattened (C*H*W) samples.
class Linear : public Layer {
public:
    Linear(std::string name, int in_dim, int out_dim);
    void init_he(Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;  // output (n, out_dim, 1, 1)
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) override;

    const Param& weight() const { return w_; }
    Param& weight() { return w_; }

private:
    std::string name_;
    int in_dim_, out_dim_;
    Param w_;  // (out_dim, in_dim) row-major
    Param b_;
    Tensor x_;
};

/// Global average pooling (N,C,H,W) -> (N,C,1,1).
class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    int in_h_ = 0, in_w_ = 0;
};

/// Runs fn(i) for i in [0,n). Parallel when OpenMP is enabled; callers must
/// not rely on execution order.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace tmr::nn
