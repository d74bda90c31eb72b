#pragma once

#include <cstdint>
#include <vector>

#include "mamba/layers.hpp"

namespace mamba {

struct OptimizerConfig {
    enum class Algo { gradient_descent, adam };
    Algo algo = Algo::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Updates trainable parameters in place; frozen parameters are never touched.
// Gradients passed to step() must align with the constructor's param list.
// A non-finite gradient on a trainable parameter aborts with a diagnostic.
class Optimizer {
public:
    Optimizer(std::vector<Param*> params, OptimizerConfig cfg);

    void step(const std::vector<Tensor>& grads);

    const std::vector<Param*>& params() const { return params_; }
    long steps_taken() const { return t_; }
    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }

private:
    OptimizerConfig cfg_;
    std::vector<Param*> params_;
    std::vector<Tensor> m_, v_; // adam moments, aligned with params_
    long t_ = 0;
};

// Trainable parameters of a layer stack, in declaration order.
std::vector<Param*> trainable_params(std::vector<Layer>& layers);
void collect_trainable(std::vector<Layer>& layers, std::vector<Param*>& out);

} // namespace mamba
