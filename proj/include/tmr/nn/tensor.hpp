#pragma once

#include <cstddef>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace tmr::nn {

/// Dense NCHW float tensor.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * c_ * h_ * w_, 0.f) {
        if (n_ <= 0 || c_ <= 0 || h_ <= 0 || w_ <= 0) throw std::invalid_argument("Tensor: non-positive shape");
    }

    size_t size() const { return v.size(); }
    size_t sample_size() const { return size_t(c) * h * w; }
    size_t plane_size() const { return size_t(h) * w; }

    float* sample(int ni) { return v.data() + size_t(ni) * sample_size(); }
    const float* sample(int ni) const { return v.data() + size_t(ni) * sample_size(); }
    float* plane(int ni, int ci) { return sample(ni) + size_t(ci) * plane_size(); }
    const float* plane(int ni, int ci) const { return sample(ni) + size_t(ci) * plane_size(); }

    float& at(int ni, int ci, int y, int x) { return plane(ni, ci)[size_t(y) * w + x]; }
    float at(int ni, int ci, int y, int x) const { return plane(ni, ci)[size_t(y) * w + x]; }

    void zero() { std::memset(v.data(), 0, v.size() * sizeof(float)); }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

/// Learnable parameter: weights plus accumulated gradient.
struct Param {
    std::string name;
    std::vector<float> w;
    std::vector<float> g;

    void resize(size_t count) {
        w.assign(count, 0.f);
        g.assign(count, 0.f);
    }
};

}  // namespace tmr::nn
