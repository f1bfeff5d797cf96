#pragma once

#include <cmath>
#include <vector>

#include "redraw/nn/layers.hpp"

namespace redraw::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adaptive-moment gradient descent over a fixed parameter list.
class Adam {
public:
    Adam(std::vector<Var> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
        for (const auto& p : params_) {
            m_.emplace_back(p.shape());
            v_.emplace_back(p.shape());
        }
    }

    void step(const std::vector<Var>& grads) {
        if (grads.size() != params_.size()) throw ShapeError("Adam: gradient count mismatch");
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, t_), c2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor& w = params_[i].mutable_value();
            const Tensor& g = grads[i].value();
            for (std::size_t j = 0; j < w.size(); ++j) {
                m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
                v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
                w[j] -= cfg_.lr * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + cfg_.eps);
            }
        }
    }

    const std::vector<Var>& params() const { return params_; }

private:
    std::vector<Var> params_;
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    int t_ = 0;
};

}  // namespace redraw::nn
