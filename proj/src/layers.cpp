#include "mamba/layers.hpp"

#include <cmath>

#include "mamba/errors.hpp"

namespace mamba {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
    }
    return "?";
}

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::lstm: return "lstm";
        case LayerKind::activation: return "activation";
    }
    return "?";
}

Activation activation_from_tag(int tag) {
    if (tag < 0 || tag > 3) throw ContractError("unknown activation tag " + std::to_string(tag));
    return static_cast<Activation>(tag);
}

LayerKind layer_kind_from_tag(int tag) {
    if (tag < 0 || tag > 3) throw ContractError("unknown layer kind tag " + std::to_string(tag));
    return static_cast<LayerKind>(tag);
}

Param& Layer::param(std::string_view name) {
    for (auto& p : params) {
        if (p.name == name) return p;
    }
    throw ContractError("layer has no parameter named '" + std::string(name) + "'");
}

const Param& Layer::param(std::string_view name) const {
    return const_cast<Layer*>(this)->param(name);
}

void Layer::set_trainable(bool t) {
    for (auto& p : params) p.trainable = t;
}

size_t Layer::scalar_count() const {
    size_t n = 0;
    for (const auto& p : params) n += p.value.size();
    return n;
}

size_t Layer::trainable_scalar_count() const {
    size_t n = 0;
    for (const auto& p : params) {
        if (p.trainable) n += p.value.size();
    }
    return n;
}

int Layer::in_width() const {
    switch (kind) {
        case LayerKind::dense: return param("weight").value.dim(1);
        case LayerKind::conv1d: return param("kernels").value.dim(1);
        case LayerKind::lstm: return param("w_i").value.dim(1);
        case LayerKind::activation: return -1;
    }
    return -1;
}

int Layer::out_width() const {
    switch (kind) {
        case LayerKind::dense: return param("weight").value.dim(0);
        case LayerKind::conv1d: return param("kernels").value.dim(0);
        case LayerKind::lstm: return param("w_i").value.dim(0);
        case LayerKind::activation: return -1;
    }
    return -1;
}

void validate_layer(const Layer& layer) {
    auto fail = [](const std::string& msg) { throw ContractError("invalid layer: " + msg); };
    switch (layer.kind) {
        case LayerKind::dense: {
            const Tensor& w = layer.param("weight").value;
            const Tensor& b = layer.param("bias").value;
            if (w.ndim() != 2) fail("dense weight must be 2-D, got " + w.shape_string());
            if (b.ndim() != 1 || b.dim(0) != w.dim(0))
                fail("dense bias " + b.shape_string() + " does not match weight " + w.shape_string());
            break;
        }
        case LayerKind::conv1d: {
            const Tensor& k = layer.param("kernels").value;
            const Tensor& b = layer.param("bias").value;
            if (k.ndim() != 3) fail("conv1d kernels must be 3-D, got " + k.shape_string());
            if (b.ndim() != 1 || b.dim(0) != k.dim(0))
                fail("conv1d bias " + b.shape_string() + " does not match kernels " + k.shape_string());
            break;
        }
        case LayerKind::lstm: {
            const int hidden = layer.param("w_i").value.dim(0);
            const int input = layer.param("w_i").value.dim(1);
            for (const char* g : kLstmGates) {
                const Tensor& w = layer.param(std::string("w_") + g).value;
                const Tensor& u = layer.param(std::string("u_") + g).value;
                const Tensor& b = layer.param(std::string("b_") + g).value;
                if (w.ndim() != 2 || w.dim(0) != hidden || w.dim(1) != input)
                    fail(std::string("lstm gate w_") + g + " shape " + w.shape_string());
                if (u.ndim() != 2 || u.dim(0) != hidden || u.dim(1) != hidden)
                    fail(std::string("lstm gate u_") + g + " shape " + u.shape_string());
                if (b.ndim() != 1 || b.dim(0) != hidden)
                    fail(std::string("lstm gate b_") + g + " shape " + b.shape_string());
            }
            break;
        }
        case LayerKind::activation:
            if (!layer.params.empty()) fail("activation layer carries parameters");
            break;
    }
}

// He initialization for relu layers, Xavier-style otherwise; biases zero.
static Tensor init_matrix(int rows, int cols, Activation act, Rng& rng) {
    Tensor w({rows, cols});
    const double fan_in = static_cast<double>(cols);
    const double sd = (act == Activation::relu) ? std::sqrt(2.0 / fan_in) : std::sqrt(1.0 / fan_in);
    for (size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, sd);
    return w;
}

Layer make_dense(int in, int out, Activation act, Rng& rng) {
    Layer l;
    l.kind = LayerKind::dense;
    l.act = act;
    l.params.push_back({"weight", init_matrix(out, in, act, rng), true});
    l.params.push_back({"bias", Tensor({out}), true});
    return l;
}

Layer make_conv1d(int channels, int filters, int kernel, Activation act, Rng& rng) {
    Layer l;
    l.kind = LayerKind::conv1d;
    l.act = act;
    Tensor k({filters, channels, kernel});
    const double sd = std::sqrt(2.0 / (static_cast<double>(channels) * kernel));
    for (size_t i = 0; i < k.size(); ++i) k[i] = rng.normal(0.0, sd);
    l.params.push_back({"kernels", std::move(k), true});
    l.params.push_back({"bias", Tensor({filters}), true});
    return l;
}

Layer make_lstm(int input, int hidden, Rng& rng) {
    Layer l;
    l.kind = LayerKind::lstm;
    l.act = Activation::tanh;
    const double sd = std::sqrt(1.0 / static_cast<double>(input + hidden));
    for (const char* g : kLstmGates) {
        Tensor w({hidden, input}), u({hidden, hidden}), b({hidden});
        for (size_t i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, sd);
        for (size_t i = 0; i < u.size(); ++i) u[i] = rng.normal(0.0, sd);
        // Forget gate bias starts at 1 so early training does not wipe the cell state.
        if (g[0] == 'f') {
            for (size_t i = 0; i < b.size(); ++i) b[i] = 1.0;
        }
        l.params.push_back({std::string("w_") + g, std::move(w), true});
        l.params.push_back({std::string("u_") + g, std::move(u), true});
        l.params.push_back({std::string("b_") + g, std::move(b), true});
    }
    return l;
}

Layer make_activation(Activation act) {
    Layer l;
    l.kind = LayerKind::activation;
    l.act = act;
    return l;
}

} // namespace mamba
