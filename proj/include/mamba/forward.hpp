#pragma once

#include <vector>

#include "mamba/layers.hpp"
#include "mamba/tape.hpp"

namespace mamba {

Var apply_activation(Tape& tape, Var x, Activation act);

// y = act(W x + b). Accepts a single vector or a (batch x in) matrix.
Var dense_forward(Tape& tape, Var x, const Layer& layer);

// Valid cross-correlation plus the layer's activation.
Var conv1d_forward(Tape& tape, Var x, const Layer& layer);

// Standard LSTM recurrence from zero initial state; returns the final hidden
// state. `steps` are the per-timestep feature vectors, oldest first.
Var lstm_forward(Tape& tape, const std::vector<Var>& steps, const Layer& layer);
Var lstm_forward(Tape& tape, const std::vector<Tensor>& steps, const Layer& layer);

// Run an input through a stack of dense layers.
Var stack_forward(Tape& tape, Var x, const std::vector<Layer>& layers);

// Tape-free convenience for single tensors.
Tensor dense_forward(const Tensor& x, const Layer& layer);
Tensor lstm_forward(const std::vector<Tensor>& steps, const Layer& layer);
Tensor stack_forward(const Tensor& x, const std::vector<Layer>& layers);

} // namespace mamba
