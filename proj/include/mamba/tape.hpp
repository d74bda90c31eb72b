#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "mamba/layers.hpp"
#include "mamba/tensor.hpp"

namespace mamba {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode gradient tape. Ops append nodes holding the forward value and
// a closure that scatters the node's gradient into its parents; backward()
// replays the tape in reverse. Parameter leaves are memoized by address, so a
// parameter used many times in one graph (shared FIN extractors, shared LSTM)
// accumulates one combined gradient. Frozen parameters get no gradient entry.
//
// A tape constructed with recording=false only stores forward values, which
// is the inference path.
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    // Constant leaf (inputs, labels).
    Var value(Tensor v);
    // Parameter leaf, memoized by address; gradient tracked iff p.trainable.
    Var param(const Param& p);

    // y = x W^T + b. x is (in) or (batch x in); w is (out x in); b is (out).
    Var linear(Var x, Var w, Var b);
    // y = W x, no bias. w is (out x in); x is (in).
    Var matvec(Var w, Var x);
    // Valid (no padding) cross-correlation. x (channels x length),
    // k (filters x channels x kernel), b (filters) -> (filters x length')
    // with length' = length - kernel + 1.
    Var conv1d(Var x, Var k, Var b);

    Var relu(Var x);
    Var sigmoid(Var x);
    Var tanh_(Var x);

    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);

    // Concatenate 1-D tensors.
    Var concat(const std::vector<Var>& parts);
    // Stack N vectors of length D into a (D x N) matrix, one per column.
    Var stack_cols(const std::vector<Var>& cols);
    // Per-row mean over columns: (R x C) -> (R).
    Var row_mean(Var x);
    // Elementwise mean of same-shaped tensors.
    Var mean_of(const std::vector<Var>& parts);

    // Scalar losses. Targets/labels are constants.
    Var mse(Var pred, Var target);
    // Binary cross entropy with predictions clamped to [1e-7, 1 - 1e-7].
    Var bce(Var pred, Var label);
    Var sum(Var x);

    // Backpropagate from a scalar loss. Throws ContractError otherwise.
    void backward(Var loss);

    const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
    bool has_grad(const Param& p) const;
    // Gradient of a registered parameter; zeros when unreachable from the loss.
    Tensor grad_of(const Param& p) const;
    // Gradients aligned with `params`; zero tensors for unreachable ones.
    std::vector<Tensor> gradients(const std::vector<const Param*>& params) const;

    size_t node_count() const { return nodes_.size(); }
    bool recording() const { return recording_; }

    static constexpr double kBceClamp = 1e-7;

private:
    struct Node {
        Tensor value;
        Tensor grad; // empty until first accumulation
        bool needs_grad = false;
        std::function<void(Tape&, const Tensor&)> back;
    };

    int push(Tensor value, bool needs_grad, std::function<void(Tape&, const Tensor&)> back);
    Tensor& grad_buf(int id);
    bool tracked(Var v) const { return nodes_[static_cast<size_t>(v.id)].needs_grad; }
    void accumulate(int id, const double* g, size_t n);

    bool recording_;
    std::vector<Node> nodes_;
    std::unordered_map<const Param*, int> param_nodes_;
};

} // namespace mamba
