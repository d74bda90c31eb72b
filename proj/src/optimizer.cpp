#include "mamba/optimizer.hpp"

#include <cmath>

#include "mamba/errors.hpp"

namespace mamba {

Optimizer::Optimizer(std::vector<Param*> params, OptimizerConfig cfg)
    : cfg_(cfg), params_(std::move(params)) {
    if (cfg_.algo == OptimizerConfig::Algo::adam) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const Param* p : params_) {
            m_.push_back(Tensor::zeros_like(p->value));
            v_.push_back(Tensor::zeros_like(p->value));
        }
    }
}

void Optimizer::step(const std::vector<Tensor>& grads) {
    if (grads.size() != params_.size())
        throw ContractError("optimizer step with " + std::to_string(grads.size()) +
                            " gradients for " + std::to_string(params_.size()) + " parameters");
    ++t_;
    for (size_t k = 0; k < params_.size(); ++k) {
        Param& p = *params_[k];
        if (!p.trainable) continue;
        const Tensor& g = grads[k];
        if (!g.same_shape(p.value))
            throw DimensionError("gradient " + g.shape_string() + " vs parameter '" + p.name +
                                 "' " + p.value.shape_string());
        if (!g.all_finite())
            throw TrainingError("non-finite gradient for parameter '" + p.name + "'");
        double* w = p.value.data();
        const double* gd = g.data();
        const size_t n = p.value.size();
        if (cfg_.algo == OptimizerConfig::Algo::gradient_descent) {
            for (size_t i = 0; i < n; ++i) w[i] -= cfg_.lr * gd[i];
        } else {
            double* m = m_[k].data();
            double* v = v_[k].data();
            const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
            const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
            for (size_t i = 0; i < n; ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gd[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gd[i] * gd[i];
                const double mhat = m[i] / c1;
                const double vhat = v[i] / c2;
                w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }
}

void collect_trainable(std::vector<Layer>& layers, std::vector<Param*>& out) {
    for (Layer& l : layers) {
        for (Param& p : l.params) {
            if (p.trainable) out.push_back(&p);
        }
    }
}

std::vector<Param*> trainable_params(std::vector<Layer>& layers) {
    std::vector<Param*> out;
    collect_trainable(layers, out);
    return out;
}

} // namespace mamba
