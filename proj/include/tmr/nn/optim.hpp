#pragma once

#include "tmr/nn/tensor.hpp"

#include <cmath>
#include <vector>

namespace tmr::nn {

/// Multiplicative step decay: lr = base * factor^(step / every).
struct StepDecay {
    double base_lr = 1e-3;
    int every = 20000;
    double factor = 0.95;

    double at(long long step) const {
        if (every <= 0) return base_lr;
        return base_lr * std::pow(factor, double(step / every));
    }
};

class Optimizer {
public:
    explicit Optimizer(std::vector<Param*> params) : params_(std::move(params)) {}
    virtual ~Optimizer() = default;

    void zero_grad() {
        for (auto* p : params_) std::fill(p->g.begin(), p->g.end(), 0.f);
    }

    virtual void step(double lr) = 0;

protected:
    std::vector<Param*> params_;
};

class Adam : public Optimizer {
public:
    Adam(std::vector<Param*> params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : Optimizer(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto* p : params_) {
            m_.emplace_back(p->w.size(), 0.f);
            v_.emplace_back(p->w.size(), 0.f);
        }
    }

    void step(double lr) override {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, double(t_));
        const double bc2 = 1.0 - std::pow(beta2_, double(t_));
        for (size_t pi = 0; pi < params_.size(); ++pi) {
            Param& p = *params_[pi];
            auto& m = m_[pi];
            auto& v = v_[pi];
            for (size_t i = 0; i < p.w.size(); ++i) {
                double g = p.g[i];
                m[i] = float(beta1_ * m[i] + (1.0 - beta1_) * g);
                v[i] = float(beta2_ * v[i] + (1.0 - beta2_) * g * g);
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                p.w[i] -= float(lr * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

private:
    double beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

class RmsProp : public Optimizer {
public:
    RmsProp(std::vector<Param*> params, double rho = 0.9, double eps = 1e-8)
        : Optimizer(std::move(params)), rho_(rho), eps_(eps) {
        for (auto* p : params_) v_.emplace_back(p->w.size(), 0.f);
    }

    void step(double lr) override {
        for (size_t pi = 0; pi < params_.size(); ++pi) {
            Param& p = *params_[pi];
            auto& v = v_[pi];
            for (size_t i = 0; i < p.w.size(); ++i) {
                double g = p.g[i];
                v[i] = float(rho_ * v[i] + (1.0 - rho_) * g * g);
                p.w[i] -= float(lr * g / (std::sqrt(double(v[i])) + eps_));
            }
        }
    }

private:
    double rho_, eps_;
    std::vector<std::vector<float>> v_;
};

}  // namespace tmr::nn
