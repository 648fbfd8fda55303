#include "tmr/nn/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tmr::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<RowMat>;
using MapConstRowMat = Eigen::Map<const RowMat>;

void parallel_for(int n, const std::function<void(int)>& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) fn(i);
#else
    for (int i = 0; i < n; ++i) fn(i);
#endif
}

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

Conv2d::Conv2d(std::string name, int in_c, int out_c, int kernel, int stride, int pad, PadMode pad_mode)
    : name_(std::move(name)), in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride), pad_(pad),
      pad_mode_(pad_mode) {
    if (in_c <= 0 || out_c <= 0 || kernel <= 0 || stride <= 0 || pad < 0) {
        throw std::invalid_argument("Conv2d: bad geometry");
    }
    w_.name = name_ + ".w";
    b_.name = name_ + ".b";
    w_.resize(size_t(out_c_) * in_c_ * k_ * k_);
    b_.resize(size_t(out_c_));
}

void Conv2d::init_he(Rng& rng) {
    double fan_in = double(in_c_) * k_ * k_;
    double sigma = std::sqrt(2.0 / fan_in);
    for (auto& x : w_.w) x = float(rng.normal(0.0, sigma));
    for (auto& x : b_.w) x = 0.f;
}

int Conv2d::out_size(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

void Conv2d::im2col(const Tensor& x, int ni, std::vector<float>& col, int oh, int ow) const {
    // col: (in_c*k*k) x (oh*ow), row-major
    const int P = oh * ow;
    col.resize(size_t(in_c_) * k_ * k_ * P);
    const bool replicate = pad_mode_ == PadMode::Replicate;
    for (int ci = 0; ci < in_c_; ++ci) {
        const float* src = x.plane(ni, ci);
        for (int ky = 0; ky < k_; ++ky) {
            for (int kx = 0; kx < k_; ++kx) {
                float* dst = col.data() + (size_t(ci) * k_ * k_ + size_t(ky) * k_ + kx) * P;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride_ - pad_ + ky;
                    if (replicate) iy = std::clamp(iy, 0, x.h - 1);
                    const bool row_ok = iy >= 0 && iy < x.h;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride_ - pad_ + kx;
                        if (replicate) ix = std::clamp(ix, 0, x.w - 1);
                        float val = 0.f;
                        if (row_ok && ix >= 0 && ix < x.w) val = src[size_t(iy) * x.w + ix];
                        dst[size_t(oy) * ow + ox] = val;
                    }
                }
            }
        }
    }
}

Tensor Conv2d::forward(const Tensor& x, bool train) {
    if (x.c != in_c_) throw std::invalid_argument("Conv2d: channel mismatch");
    if (train) x_ = x;  // eval forward stays mutation-free for concurrent readers
    const int oh = out_size(x.h), ow = out_size(x.w);
    if (oh <= 0 || ow <= 0) throw std::invalid_argument("Conv2d: output collapses to zero");
    Tensor y(x.n, out_c_, oh, ow);
    const int Q = in_c_ * k_ * k_;
    const int P = oh * ow;
    MapConstRowMat W(w_.w.data(), out_c_, Q);

    parallel_for(x.n, [&](int ni) {
        std::vector<float> col;
        im2col(x, ni, col, oh, ow);
        MapConstRowMat C(col.data(), Q, P);
        MapRowMat Y(y.sample(ni), out_c_, P);
        Y.noalias() = W * C;
        for (int oc = 0; oc < out_c_; ++oc) Y.row(oc).array() += b_.w[oc];
    });
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const Tensor& x = x_;
    const int oh = dy.h, ow = dy.w;
    const int Q = in_c_ * k_ * k_;
    const int P = oh * ow;
    Tensor dx(x.n, x.c, x.h, x.w);
    MapConstRowMat W(w_.w.data(), out_c_, Q);

    // Per-sample weight gradients, reduced afterwards in sample order so the
    // result is independent of scheduling.
    std::vector<std::vector<float>> dws(size_t(x.n));
    std::vector<std::vector<float>> dbs(size_t(x.n));

    parallel_for(x.n, [&](int ni) {
        std::vector<float> col;
        im2col(x, ni, col, oh, ow);
        MapConstRowMat C(col.data(), Q, P);
        MapConstRowMat DY(dy.sample(ni), out_c_, P);

        dws[ni].assign(w_.w.size(), 0.f);
        dbs[ni].assign(b_.w.size(), 0.f);
        MapRowMat DW(dws[ni].data(), out_c_, Q);
        DW.noalias() = DY * C.transpose();
        for (int oc = 0; oc < out_c_; ++oc) dbs[ni][oc] = DY.row(oc).sum();

        // dcol = W^T * dy, then scatter back (col2im)
        std::vector<float> dcol(size_t(Q) * P);
        MapRowMat DC(dcol.data(), Q, P);
        DC.noalias() = W.transpose() * DY;

        const bool replicate = pad_mode_ == PadMode::Replicate;
        for (int ci = 0; ci < in_c_; ++ci) {
            float* dst = dx.plane(ni, ci);
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx) {
                    const float* src = dcol.data() + (size_t(ci) * k_ * k_ + size_t(ky) * k_ + kx) * P;
                    for (int oy = 0; oy < oh; ++oy) {
                        int iy = oy * stride_ - pad_ + ky;
                        if (replicate) iy = std::clamp(iy, 0, x.h - 1);
                        if (iy < 0 || iy >= x.h) continue;
                        for (int ox = 0; ox < ow; ++ox) {
                            int ix = ox * stride_ - pad_ + kx;
                            if (replicate) ix = std::clamp(ix, 0, x.w - 1);
                            if (ix < 0 || ix >= x.w) continue;
                            dst[size_t(iy) * x.w + ix] += src[size_t(oy) * ow + ox];
                        }
                    }
                }
            }
        }
    });

    for (int ni = 0; ni < x.n; ++ni) {
        for (size_t i = 0; i < w_.g.size(); ++i) w_.g[i] += dws[ni][i];
        for (size_t i = 0; i < b_.g.size(); ++i) b_.g[i] += dbs[ni][i];
    }
    return dx;
}

void Conv2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
}

void Conv2d::collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) {
    out.emplace_back(w_.name, &w_.w);
    out.emplace_back(b_.name, &b_.w);
}

// ---------------------------------------------------------------------------
// BatchNorm2d
// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(std::string name, int channels, float decay, float eps)
    : name_(std::move(name)), c_(channels), decay_(decay), eps_(eps) {
    gamma_.name = name_ + ".gamma";
    beta_.name = name_ + ".beta";
    gamma_.resize(size_t(c_));
    beta_.resize(size_t(c_));
    std::fill(gamma_.w.begin(), gamma_.w.end(), 1.f);
    running_mean_.assign(size_t(c_), 0.f);
    running_var_.assign(size_t(c_), 1.f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
    if (x.c != c_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
    Tensor y(x.n, x.c, x.h, x.w);
    trained_forward_ = train;
    const size_t plane = x.plane_size();
    const double m = double(x.n) * plane;

    std::vector<float> mean(c_), var(c_);
    if (train) {
        // per-sample partial sums reduced in fixed order
        std::vector<std::vector<double>> psum(x.n), psq(x.n);
        parallel_for(x.n, [&](int ni) {
            psum[ni].assign(c_, 0.0);
            psq[ni].assign(c_, 0.0);
            for (int ci = 0; ci < c_; ++ci) {
                const float* p = x.plane(ni, ci);
                double s = 0.0, s2 = 0.0;
                for (size_t i = 0; i < plane; ++i) {
                    s += p[i];
                    s2 += double(p[i]) * p[i];
                }
                psum[ni][ci] = s;
                psq[ni][ci] = s2;
            }
        });
        for (int ci = 0; ci < c_; ++ci) {
            double s = 0.0, s2 = 0.0;
            for (int ni = 0; ni < x.n; ++ni) {
                s += psum[ni][ci];
                s2 += psq[ni][ci];
            }
            double mu = s / m;
            double va = std::max(0.0, s2 / m - mu * mu);
            mean[ci] = float(mu);
            var[ci] = float(va);
            running_mean_[ci] = decay_ * running_mean_[ci] + (1.f - decay_) * mean[ci];
            running_var_[ci] = decay_ * running_var_[ci] + (1.f - decay_) * var[ci];
        }
    } else {
        for (int ci = 0; ci < c_; ++ci) {
            mean[ci] = running_mean_[ci];
            var[ci] = running_var_[ci];
        }
    }

    xhat_ = Tensor(x.n, x.c, x.h, x.w);
    inv_std_.assign(c_, 0.f);
    for (int ci = 0; ci < c_; ++ci) inv_std_[ci] = 1.f / std::sqrt(var[ci] + eps_);

    parallel_for(x.n, [&](int ni) {
        for (int ci = 0; ci < c_; ++ci) {
            const float* p = x.plane(ni, ci);
            float* xh = xhat_.plane(ni, ci);
            float* py = y.plane(ni, ci);
            const float mu = mean[ci], is = inv_std_[ci], g = gamma_.w[ci], be = beta_.w[ci];
            for (size_t i = 0; i < plane; ++i) {
                xh[i] = (p[i] - mu) * is;
                py[i] = g * xh[i] + be;
            }
        }
    });
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
    const size_t plane = dy.plane_size();
    const double m = double(dy.n) * plane;
    Tensor dx(dy.n, dy.c, dy.h, dy.w);

    std::vector<std::vector<double>> pdy(dy.n), pdyx(dy.n);
    parallel_for(dy.n, [&](int ni) {
        pdy[ni].assign(c_, 0.0);
        pdyx[ni].assign(c_, 0.0);
        for (int ci = 0; ci < c_; ++ci) {
            const float* d = dy.plane(ni, ci);
            const float* xh = xhat_.plane(ni, ci);
            double s = 0.0, sx = 0.0;
            for (size_t i = 0; i < plane; ++i) {
                s += d[i];
                sx += double(d[i]) * xh[i];
            }
            pdy[ni][ci] = s;
            pdyx[ni][ci] = sx;
        }
    });

    std::vector<double> sum_dy(c_, 0.0), sum_dyx(c_, 0.0);
    for (int ci = 0; ci < c_; ++ci) {
        for (int ni = 0; ni < dy.n; ++ni) {
            sum_dy[ci] += pdy[ni][ci];
            sum_dyx[ci] += pdyx[ni][ci];
        }
        beta_.g[ci] += float(sum_dy[ci]);
        gamma_.g[ci] += float(sum_dyx[ci]);
    }

    if (trained_forward_) {
        parallel_for(dy.n, [&](int ni) {
            for (int ci = 0; ci < c_; ++ci) {
                const float* d = dy.plane(ni, ci);
                const float* xh = xhat_.plane(ni, ci);
                float* dxp = dx.plane(ni, ci);
                const float g = gamma_.w[ci], is = inv_std_[ci];
                const float mdy = float(sum_dy[ci] / m), mdyx = float(sum_dyx[ci] / m);
                for (size_t i = 0; i < plane; ++i) {
                    dxp[i] = g * is * (d[i] - mdy - xh[i] * mdyx);
                }
            }
        });
    } else {
        parallel_for(dy.n, [&](int ni) {
            for (int ci = 0; ci < c_; ++ci) {
                const float* d = dy.plane(ni, ci);
                float* dxp = dx.plane(ni, ci);
                const float g = gamma_.w[ci], is = inv_std_[ci];
                for (size_t i = 0; i < plane; ++i) dxp[i] = g * is * d[i];
            }
        });
    }
    return dx;
}

void BatchNorm2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

void BatchNorm2d::collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) {
    out.emplace_back(gamma_.name, &gamma_.w);
    out.emplace_back(beta_.name, &beta_.w);
    out.emplace_back(name_ + ".running_mean", &running_mean_);
    out.emplace_back(name_ + ".running_var", &running_var_);
}

// ---------------------------------------------------------------------------
// ReLU / MaxPool2 / Upsample2 / Dropout
// ---------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x, bool train) {
    Tensor y = x;
    for (auto& v : y.v) v = v > 0.f ? v : 0.f;
    if (train) y_ = y;
    return y;
}

Tensor ReLU::backward(const Tensor& dy) {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] = y_.v[i] > 0.f ? dy.v[i] : 0.f;
    return dx;
}

Tensor MaxPool2::forward(const Tensor& x, bool train) {
    if (x.h % 2 != 0 || x.w % 2 != 0) throw std::invalid_argument("MaxPool2: dims must be even");
    Tensor y(x.n, x.c, x.h / 2, x.w / 2);
    if (train) {
        in_h_ = x.h;
        in_w_ = x.w;
        n_ = x.n;
        c_ = x.c;
        argmax_.assign(y.size(), 0);
    }
    parallel_for(x.n, [&](int ni) {
        for (int ci = 0; ci < x.c; ++ci) {
            const float* src = x.plane(ni, ci);
            float* dst = y.plane(ni, ci);
            uint32_t* am = train ? argmax_.data() + (size_t(ni) * x.c + ci) * y.plane_size() : nullptr;
            for (int oy = 0; oy < y.h; ++oy) {
                for (int ox = 0; ox < y.w; ++ox) {
                    uint32_t best_idx = uint32_t((2 * oy) * x.w + 2 * ox);
                    float best = src[best_idx];
                    for (int dy2 = 0; dy2 < 2; ++dy2) {
                        for (int dx2 = 0; dx2 < 2; ++dx2) {
                            uint32_t idx = uint32_t((2 * oy + dy2) * x.w + 2 * ox + dx2);
                            if (src[idx] > best) {
                                best = src[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    dst[size_t(oy) * y.w + ox] = best;
                    if (am) am[size_t(oy) * y.w + ox] = best_idx;
                }
            }
        }
    });
    return y;
}

Tensor MaxPool2::backward(const Tensor& dy) {
    Tensor dx(n_, c_, in_h_, in_w_);
    parallel_for(dy.n, [&](int ni) {
        for (int ci = 0; ci < dy.c; ++ci) {
            const float* d = dy.plane(ni, ci);
            float* dst = dx.plane(ni, ci);
            const uint32_t* am = argmax_.data() + (size_t(ni) * dy.c + ci) * dy.plane_size();
            for (size_t i = 0; i < dy.plane_size(); ++i) dst[am[i]] += d[i];
        }
    });
    return dx;
}

Tensor Upsample2::forward(const Tensor& x, bool train) {
    if (train) {
        in_h_ = x.h;
        in_w_ = x.w;
    }
    Tensor y(x.n, x.c, x.h * 2, x.w * 2);
    parallel_for(x.n, [&](int ni) {
        for (int ci = 0; ci < x.c; ++ci) {
            const float* src = x.plane(ni, ci);
            float* dst = y.plane(ni, ci);
            for (int iy = 0; iy < x.h; ++iy) {
                for (int ix = 0; ix < x.w; ++ix) {
                    float v = src[size_t(iy) * x.w + ix];
                    float* base = dst + size_t(2 * iy) * y.w + 2 * ix;
                    base[0] = v;
                    base[1] = v;
                    base[y.w] = v;
                    base[y.w + 1] = v;
                }
            }
        }
    });
    return y;
}

Tensor Upsample2::backward(const Tensor& dy) {
    Tensor dx(dy.n, dy.c, in_h_, in_w_);
    parallel_for(dy.n, [&](int ni) {
        for (int ci = 0; ci < dy.c; ++ci) {
            const float* d = dy.plane(ni, ci);
            float* dst = dx.plane(ni, ci);
            for (int iy = 0; iy < in_h_; ++iy) {
                for (int ix = 0; ix < in_w_; ++ix) {
                    const float* base = d + size_t(2 * iy) * dy.w + 2 * ix;
                    dst[size_t(iy) * in_w_ + ix] = base[0] + base[1] + base[dy.w] + base[dy.w + 1];
                }
            }
        }
    });
    return dx;
}

Dropout::Dropout(float keep_prob, uint64_t seed) : keep_(keep_prob), rng_(seed) {
    if (!(keep_prob > 0.f && keep_prob <= 1.f)) throw std::invalid_argument("Dropout: keep_prob in (0,1]");
}

Tensor Dropout::forward(const Tensor& x, bool train) {
    if (!train || keep_ >= 1.f) return x;
    applied_ = true;
    Tensor y = x;
    mask_.resize(x.size());
    const float inv_keep = 1.f / keep_;
    for (size_t i = 0; i < x.size(); ++i) {
        mask_[i] = rng_.bernoulli(keep_) ? inv_keep : 0.f;
        y.v[i] = x.v[i] * mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (!applied_) return dy;
    Tensor dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= mask_[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Concat
// ---------------------------------------------------------------------------

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) throw std::invalid_argument("concat: shape mismatch");
    Tensor y(a.n, a.c + b.c, a.h, a.w);
    for (int ni = 0; ni < a.n; ++ni) {
        std::memcpy(y.sample(ni), a.sample(ni), a.sample_size() * sizeof(float));
        std::memcpy(y.sample(ni) + a.sample_size(), b.sample(ni), b.sample_size() * sizeof(float));
    }
    return y;
}

void split_channels(const Tensor& dy, int c_a, Tensor& da, Tensor& db) {
    da = Tensor(dy.n, c_a, dy.h, dy.w);
    db = Tensor(dy.n, dy.c - c_a, dy.h, dy.w);
    for (int ni = 0; ni < dy.n; ++ni) {
        std::memcpy(da.sample(ni), dy.sample(ni), da.sample_size() * sizeof(float));
        std::memcpy(db.sample(ni), dy.sample(ni) + da.sample_size(), db.sample_size() * sizeof(float));
    }
}

// ---------------------------------------------------------------------------
// Linear / GlobalAvgPool
// ---------------------------------------------------------------------------

Linear::Linear(std::string name, int in_dim, int out_dim)
    : name_(std::move(name)), in_dim_(in_dim), out_dim_(out_dim) {
    w_.name = name_ + ".w";
    b_.name = name_ + ".b";
    w_.resize(size_t(out_dim_) * in_dim_);
    b_.resize(size_t(out_dim_));
}

void Linear::init_he(Rng& rng) {
    double sigma = std::sqrt(2.0 / double(in_dim_));
    for (auto& x : w_.w) x = float(rng.normal(0.0, sigma));
}

Tensor Linear::forward(const Tensor& x, bool train) {
    if (int(x.sample_size()) != in_dim_) throw std::invalid_argument("Linear: dim mismatch");
    if (train) x_ = x;
    Tensor y(x.n, out_dim_, 1, 1);
    MapConstRowMat W(w_.w.data(), out_dim_, in_dim_);
    for (int ni = 0; ni < x.n; ++ni) {
        Eigen::Map<const Eigen::VectorXf> xi(x.sample(ni), in_dim_);
        Eigen::Map<Eigen::VectorXf> yi(y.sample(ni), out_dim_);
        yi.noalias() = W * xi;
        for (int oi = 0; oi < out_dim_; ++oi) yi[oi] += b_.w[oi];
    }
    return y;
}

Tensor Linear::backward(const Tensor& dy) {
    Tensor dx(x_.n, x_.c, x_.h, x_.w);
    MapConstRowMat W(w_.w.data(), out_dim_, in_dim_);
    MapRowMat DW(w_.g.data(), out_dim_, in_dim_);
    for (int ni = 0; ni < dy.n; ++ni) {
        Eigen::Map<const Eigen::VectorXf> d(dy.sample(ni), out_dim_);
        Eigen::Map<const Eigen::VectorXf> xi(x_.sample(ni), in_dim_);
        Eigen::Map<Eigen::VectorXf> dxi(dx.sample(ni), in_dim_);
        DW.noalias() += d * xi.transpose();
        for (int oi = 0; oi < out_dim_; ++oi) b_.g[oi] += d[oi];
        dxi.noalias() = W.transpose() * d;
    }
    return dx;
}

void Linear::collect_params(std::vector<Param*>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
}

void Linear::collect_state(std::vector<std::pair<std::string, std::vector<float>*>>& out) {
    out.emplace_back(w_.name, &w_.w);
    out.emplace_back(b_.name, &b_.w);
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool train) {
    if (train) {
        in_h_ = x.h;
        in_w_ = x.w;
    }
    Tensor y(x.n, x.c, 1, 1);
    const float inv = 1.f / float(x.plane_size());
    for (int ni = 0; ni < x.n; ++ni) {
        for (int ci = 0; ci < x.c; ++ci) {
            const float* p = x.plane(ni, ci);
            double s = 0.0;
            for (size_t i = 0; i < x.plane_size(); ++i) s += p[i];
            y.at(ni, ci, 0, 0) = float(s) * inv;
        }
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
    Tensor dx(dy.n, dy.c, in_h_, in_w_);
    const float inv = 1.f / float(size_t(in_h_) * in_w_);
    for (int ni = 0; ni < dy.n; ++ni) {
        for (int ci = 0; ci < dy.c; ++ci) {
            float g = dy.at(ni, ci, 0, 0) * inv;
            float* p = dx.plane(ni, ci);
            for (size_t i = 0; i < dx.plane_size(); ++i) p[i] = g;
        }
    }
    return dx;
}

}  // namespace tmr::nn
