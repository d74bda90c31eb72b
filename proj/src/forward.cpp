#include "mamba/forward.hpp"

#include "mamba/errors.hpp"

namespace mamba {

Var apply_activation(Tape& tape, Var x, Activation act) {
    switch (act) {
        case Activation::linear: return x;
        case Activation::relu: return tape.relu(x);
        case Activation::sigmoid: return tape.sigmoid(x);
        case Activation::tanh: return tape.tanh_(x);
    }
    return x;
}

Var dense_forward(Tape& tape, Var x, const Layer& layer) {
    if (layer.kind != LayerKind::dense) throw ContractError("dense_forward on non-dense layer");
    Var y = tape.linear(x, tape.param(layer.param("weight")), tape.param(layer.param("bias")));
    return apply_activation(tape, y, layer.act);
}

Var conv1d_forward(Tape& tape, Var x, const Layer& layer) {
    if (layer.kind != LayerKind::conv1d) throw ContractError("conv1d_forward on non-conv layer");
    Var y = tape.conv1d(x, tape.param(layer.param("kernels")), tape.param(layer.param("bias")));
    return apply_activation(tape, y, layer.act);
}

Var lstm_forward(Tape& tape, const std::vector<Var>& steps, const Layer& layer) {
    if (layer.kind != LayerKind::lstm) throw ContractError("lstm_forward on non-lstm layer");
    if (steps.empty()) throw DegenerateInputError("lstm_forward on an empty sequence");
    const int hidden = layer.out_width();
    const int input = layer.in_width();
    for (Var s : steps) {
        const Tensor& v = tape.val(s);
        if (v.ndim() != 1 || v.dim(0) != input)
            throw DimensionError("lstm step shape " + v.shape_string() + " vs input width " +
                                 std::to_string(input));
    }

    Var h = tape.value(Tensor({hidden}));
    Var c = tape.value(Tensor({hidden}));
    auto gate = [&](const char* g, Var x) {
        Var wx = tape.linear(x, tape.param(layer.param(std::string("w_") + g)),
                             tape.param(layer.param(std::string("b_") + g)));
        Var uh = tape.matvec(tape.param(layer.param(std::string("u_") + g)), h);
        return tape.add(wx, uh);
    };
    for (Var x : steps) {
        Var i = tape.sigmoid(gate("i", x));
        Var f = tape.sigmoid(gate("f", x));
        Var g = tape.tanh_(gate("g", x));
        Var o = tape.sigmoid(gate("o", x));
        c = tape.add(tape.mul(f, c), tape.mul(i, g));
        h = tape.mul(o, tape.tanh_(c));
    }
    return h;
}

Var lstm_forward(Tape& tape, const std::vector<Tensor>& steps, const Layer& layer) {
    std::vector<Var> vars;
    vars.reserve(steps.size());
    for (const Tensor& t : steps) vars.push_back(tape.value(t));
    return lstm_forward(tape, vars, layer);
}

Var stack_forward(Tape& tape, Var x, const std::vector<Layer>& layers) {
    Var y = x;
    for (const Layer& l : layers) y = dense_forward(tape, y, l);
    return y;
}

Tensor dense_forward(const Tensor& x, const Layer& layer) {
    Tape tape(false);
    return tape.val(dense_forward(tape, tape.value(x), layer));
}

Tensor lstm_forward(const std::vector<Tensor>& steps, const Layer& layer) {
    Tape tape(false);
    return tape.val(lstm_forward(tape, steps, layer));
}

Tensor stack_forward(const Tensor& x, const std::vector<Layer>& layers) {
    Tape tape(false);
    return tape.val(stack_forward(tape, tape.value(x), layers));
}

} // namespace mamba
