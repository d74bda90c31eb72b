#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mamba/rng.hpp"
#include "mamba/tensor.hpp"

namespace mamba {

enum class Activation { linear, relu, sigmoid, tanh };
enum class LayerKind { dense, conv1d, lstm, activation };

const char* activation_name(Activation a);
const char* layer_kind_name(LayerKind k);
Activation activation_from_tag(int tag);
LayerKind layer_kind_from_tag(int tag);

struct Param {
    std::string name;
    Tensor value;
    bool trainable = true;
};

// One network layer: a kind, an attached activation, and named parameters.
// Parameter shapes per kind:
//   dense:  weight (out x in), bias (out)
//   conv1d: kernels (filters x channels x kernel), bias (filters)
//   lstm:   w_i/w_f/w_g/w_o (hidden x in), u_* (hidden x hidden), b_* (hidden)
//   activation: no parameters
struct Layer {
    LayerKind kind = LayerKind::dense;
    Activation act = Activation::linear;
    std::vector<Param> params;

    Param& param(std::string_view name);
    const Param& param(std::string_view name) const;
    void set_trainable(bool t);
    size_t scalar_count() const;
    size_t trainable_scalar_count() const;

    int in_width() const;  // dense input width / conv channels / lstm input
    int out_width() const; // dense output width / conv filters / lstm hidden
};

// Shape consistency check per kind; throws ContractError on violation.
void validate_layer(const Layer& layer);

Layer make_dense(int in, int out, Activation act, Rng& rng);
Layer make_conv1d(int channels, int filters, int kernel, Activation act, Rng& rng);
Layer make_lstm(int input, int hidden, Rng& rng);
Layer make_activation(Activation act);

inline const char* const kLstmGates[4] = {"i", "f", "g", "o"};

} // namespace mamba
