#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hvacmpc/tensor.hpp"

namespace hvacmpc {

/// Adam over a list of tensors (model parameters or a flattened control plan).
class Adam {
public:
    Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (lr <= 0.0) throw std::invalid_argument("Adam: learning rate must be > 0");
    }

    void step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads) {
        if (m_.empty()) {
            for (auto* p : params) {
                m_.emplace_back(p->rows(), p->cols());
                v_.emplace_back(p->rows(), p->cols());
            }
        }
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        for (size_t i = 0; i < params.size(); ++i) {
            Tensor& p = *params[i];
            const Tensor& g = *grads[i];
            for (int64_t k = 0; k < p.size(); ++k) {
                double gv = g.size() ? g[k] : 0.0;
                m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * gv;
                v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * gv * gv;
                double mhat = m_[i][k] / bc1;
                double vhat = v_[i][k] / bc2;
                p[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    int steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace hvacmpc
