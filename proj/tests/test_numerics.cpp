#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "mamba/errors.hpp"
#include "mamba/forward.hpp"
#include "mamba/optimizer.hpp"
#include "mamba/tape.hpp"
#include "mamba/weights_io.hpp"
#include "testutil.hpp"

using namespace mamba;
using testutil::bits_equal;
using testutil::max_fd_rel_error;
using testutil::random_tensor;

TEST_CASE("tensor construction validates shape and finiteness") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(Tensor({2}, {1.0, std::nan("")}), ContractError);
    CHECK_THROWS_AS(Tensor({0}), DimensionError);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.all_finite());
}

TEST_CASE("dense forward: identity and zero weights") {
    Layer l;
    l.kind = LayerKind::dense;
    l.act = Activation::linear;
    l.params.push_back({"weight", Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}), true});
    l.params.push_back({"bias", Tensor({3}), true});
    Tensor y = dense_forward(Tensor({3}, {1, 2, 3}), l);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    CHECK(y[2] == 3.0);

    Layer z;
    z.kind = LayerKind::dense;
    z.params.push_back({"weight", Tensor({1, 3}), true});
    z.params.push_back({"bias", Tensor({1}, {5.0}), true});
    CHECK(dense_forward(Tensor({3}, {9, -4, 2}), z)[0] == 5.0);
}

TEST_CASE("dense forward matches element-by-element dot-product oracle") {
    Rng rng(41);
    Layer l = make_dense(3, 4, Activation::linear, rng);
    Tensor x = random_tensor({3}, rng);
    Tensor y = dense_forward(x, l);
    const Tensor& w = l.param("weight").value;
    const Tensor& b = l.param("bias").value;
    for (int o = 0; o < 4; ++o) {
        double want = b[o];
        for (int i = 0; i < 3; ++i) want += w.at(o, i) * x[i];
        CHECK(std::fabs(y[o] - want) < 1e-12);
    }
}

TEST_CASE("dense forward rejects shape mismatches naming both shapes") {
    Rng rng(1);
    Layer l = make_dense(3, 4, Activation::linear, rng);
    try {
        dense_forward(Tensor({5}), l);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[5]") != std::string::npos);
        CHECK(msg.find("[4, 3]") != std::string::npos);
    }
}

TEST_CASE("batched dense equals per-row dense") {
    Rng rng(7);
    Layer l = make_dense(5, 3, Activation::relu, rng);
    Tensor xb = random_tensor({4, 5}, rng);
    Tensor yb = dense_forward(xb, l);
    for (int r = 0; r < 4; ++r) {
        Tensor row({5});
        for (int c = 0; c < 5; ++c) row[c] = xb.at(r, c);
        Tensor y = dense_forward(row, l);
        for (int o = 0; o < 3; ++o) CHECK(yb.at(r, o) == doctest::Approx(y[o]).epsilon(1e-14));
    }
}

TEST_CASE("conv1d: identity kernel and zero kernel") {
    Tape tape(false);
    Var x = tape.value(Tensor({1, 3}, {4, 5, 6}));
    Var k = tape.value(Tensor({1, 1, 1}, {1.0}));
    Var b = tape.value(Tensor({1}));
    const Tensor& y = tape.val(tape.conv1d(x, k, b));
    CHECK(y.dim(1) == 3);
    CHECK(y[0] == 4.0);
    CHECK(y[1] == 5.0);
    CHECK(y[2] == 6.0);

    Var kz = tape.value(Tensor({1, 1, 3}));
    const Tensor& yz = tape.val(tape.conv1d(x, kz, b));
    CHECK(yz.dim(1) == 1);
    CHECK(yz[0] == 0.0);
}

TEST_CASE("conv1d matches naive nested-loop oracle") {
    Rng rng(12);
    Layer l = make_conv1d(2, 3, 3, Activation::linear, rng);
    Tensor x = random_tensor({2, 8}, rng);
    Tape tape(false);
    const Tensor& y = tape.val(conv1d_forward(tape, tape.value(x), l));
    const Tensor& k = l.param("kernels").value;
    const Tensor& b = l.param("bias").value;
    REQUIRE(y.dim(0) == 3);
    REQUIRE(y.dim(1) == 6);
    for (int f = 0; f < 3; ++f) {
        for (int t = 0; t < 6; ++t) {
            double want = b[f];
            for (int c = 0; c < 2; ++c)
                for (int j = 0; j < 3; ++j) want += k.at(f, c, j) * x.at(c, t + j);
            CHECK(std::fabs(y.at(f, t) - want) < 1e-12);
        }
    }
}

TEST_CASE("conv1d output length is input minus kernel plus one, short input throws") {
    Rng rng(3);
    for (int len = 4; len <= 12; ++len) {
        for (int ker = 1; ker <= 4; ++ker) {
            Layer l = make_conv1d(1, 1, ker, Activation::linear, rng);
            Tape tape(false);
            const Tensor& y = tape.val(conv1d_forward(tape, tape.value(random_tensor({1, len}, rng)), l));
            CHECK(y.dim(1) == len - ker + 1);
        }
    }
    Layer l = make_conv1d(1, 1, 5, Activation::linear, rng);
    Tape tape(false);
    CHECK_THROWS_AS(conv1d_forward(tape, tape.value(Tensor({1, 3})), l), DegenerateInputError);
}

// Independent scalar-level LSTM recurrence, reading the layer's tensors directly.
static std::vector<double> lstm_oracle(const Layer& l, const std::vector<std::vector<double>>& seq) {
    const int hidden = l.param("w_i").value.dim(0);
    const int input = l.param("w_i").value.dim(1);
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-std::min(36.0, std::max(-36.0, z)))); };
    for (const auto& x : seq) {
        std::vector<double> hn(hidden), cn(hidden);
        for (int u = 0; u < hidden; ++u) {
            auto pre = [&](const char* g) {
                double acc = l.param(std::string("b_") + g).value[u];
                for (int i = 0; i < input; ++i)
                    acc += l.param(std::string("w_") + g).value.at(u, i) * x[i];
                for (int j = 0; j < hidden; ++j)
                    acc += l.param(std::string("u_") + g).value.at(u, j) * h[j];
                return acc;
            };
            const double iv = sig(pre("i"));
            const double fv = sig(pre("f"));
            const double gv = std::tanh(pre("g"));
            const double ov = sig(pre("o"));
            cn[u] = fv * c[u] + iv * gv;
            hn[u] = ov * std::tanh(cn[u]);
        }
        h = hn;
        c = cn;
    }
    return h;
}

TEST_CASE("lstm with all-zero parameters returns the zero vector") {
    Layer l;
    l.kind = LayerKind::lstm;
    for (const char* g : kLstmGates) {
        l.params.push_back({std::string("w_") + g, Tensor({3, 2}), true});
        l.params.push_back({std::string("u_") + g, Tensor({3, 3}), true});
        l.params.push_back({std::string("b_") + g, Tensor({3}), true});
    }
    Tensor h = lstm_forward(std::vector<Tensor>{Tensor({2}, {1.0, -2.0})}, l);
    for (size_t i = 0; i < h.size(); ++i) CHECK(h[i] == 0.0);
}

TEST_CASE("lstm length-1 sequence equals a single cell step from zero state") {
    Rng rng(99);
    Layer l = make_lstm(3, 2, rng);
    std::vector<double> x = {0.4, -0.7, 1.1};
    Tensor h = lstm_forward(std::vector<Tensor>{Tensor({3}, std::vector<double>(x))}, l);
    std::vector<double> want = lstm_oracle(l, {x});
    for (int u = 0; u < 2; ++u) CHECK(std::fabs(h[u] - want[u]) < 1e-12);
}

TEST_CASE("lstm length-5 sequence matches scalar recurrence oracle") {
    Rng rng(1234);
    Layer l = make_lstm(3, 4, rng);
    std::vector<std::vector<double>> seq;
    std::vector<Tensor> steps;
    for (int t = 0; t < 5; ++t) {
        std::vector<double> x(3);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        seq.push_back(x);
        steps.push_back(Tensor({3}, std::vector<double>(x)));
    }
    Tensor h = lstm_forward(steps, l);
    std::vector<double> want = lstm_oracle(l, seq);
    for (int u = 0; u < 4; ++u) CHECK(std::fabs(h[u] - want[u]) < 1e-10);
}

TEST_CASE("lstm rejects empty sequences") {
    Rng rng(5);
    Layer l = make_lstm(2, 2, rng);
    CHECK_THROWS_AS(lstm_forward(std::vector<Tensor>{}, l), DegenerateInputError);
}

TEST_CASE("backward: linear loss gives dLoss/dW[i][j] = x[j]") {
    Rng rng(8);
    Layer l = make_dense(3, 2, Activation::linear, rng);
    Tensor x = random_tensor({3}, rng);
    Tape tape;
    Var loss = tape.sum(dense_forward(tape, tape.value(x), l));
    tape.backward(loss);
    Tensor dw = tape.grad_of(l.param("weight"));
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < 3; ++i) CHECK(dw.at(o, i) == doctest::Approx(x[i]).epsilon(1e-15));
    Tensor db = tape.grad_of(l.param("bias"));
    CHECK(db[0] == 1.0);
    CHECK(db[1] == 1.0);
}

TEST_CASE("backward: parameters the loss does not depend on get zero gradients") {
    Rng rng(9);
    Layer used = make_dense(2, 1, Activation::linear, rng);
    Layer unused = make_dense(2, 1, Activation::linear, rng);
    Tape tape;
    tape.param(unused.param("weight")); // registered but never consumed
    Var loss = tape.sum(dense_forward(tape, tape.value(Tensor({2}, {1.0, 2.0})), used));
    tape.backward(loss);
    Tensor g = tape.grad_of(unused.param("weight"));
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
}

TEST_CASE("backward demands a scalar loss") {
    Rng rng(10);
    Layer l = make_dense(2, 2, Activation::linear, rng);
    Tape tape;
    Var y = dense_forward(tape, tape.value(Tensor({2}, {1.0, 2.0})), l);
    CHECK_THROWS_AS(tape.backward(y), ContractError);
}

TEST_CASE("frozen parameters receive no gradient entry") {
    Rng rng(11);
    Layer l = make_dense(2, 1, Activation::linear, rng);
    l.param("weight").trainable = false;
    Tape tape;
    Var loss = tape.sum(dense_forward(tape, tape.value(Tensor({2}, {1.0, 2.0})), l));
    tape.backward(loss);
    CHECK(!tape.has_grad(l.param("weight")));
    CHECK(tape.has_grad(l.param("bias")));
    CHECK_THROWS_AS(tape.grad_of(l.param("weight")), ContractError);
}

TEST_CASE("finite differences: dense layer") {
    Rng rng(21);
    Layer l = make_dense(4, 3, Activation::relu, rng); // 15 parameters
    Tensor x = random_tensor({4}, rng);
    auto params = std::vector<Param*>{&l.param("weight"), &l.param("bias")};
    double err = max_fd_rel_error(params, [&](Tape& t) {
        return t.sum(dense_forward(t, t.value(x), l));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("finite differences: conv1d layer") {
    Rng rng(22);
    Layer l = make_conv1d(2, 2, 3, Activation::relu, rng); // 14 parameters
    Tensor x = random_tensor({2, 6}, rng);
    auto params = std::vector<Param*>{&l.param("kernels"), &l.param("bias")};
    double err = max_fd_rel_error(params, [&](Tape& t) {
        return t.sum(conv1d_forward(t, t.value(x), l));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("finite differences: lstm layer") {
    Rng rng(23);
    Layer l = make_lstm(1, 2, rng); // 32 parameters
    std::vector<Tensor> seq;
    for (int t = 0; t < 4; ++t) seq.push_back(random_tensor({1}, rng));
    std::vector<Param*> params;
    for (Param& p : l.params) params.push_back(&p);
    double err = max_fd_rel_error(params, [&](Tape& t) {
        return t.sum(lstm_forward(t, seq, l));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("finite differences: sigmoid head with bce and mse losses") {
    Rng rng(24);
    Layer l = make_dense(3, 1, Activation::sigmoid, rng);
    Tensor x = random_tensor({3}, rng);
    Tensor y({1}, {1.0});
    auto params = std::vector<Param*>{&l.param("weight"), &l.param("bias")};
    double err_bce = max_fd_rel_error(params, [&](Tape& t) {
        return t.bce(dense_forward(t, t.value(x), l), t.value(y));
    });
    CHECK(err_bce < 1e-4);
    double err_mse = max_fd_rel_error(params, [&](Tape& t) {
        return t.mse(dense_forward(t, t.value(x), l), t.value(Tensor({1}, {0.3})));
    });
    CHECK(err_mse < 1e-4);
}

TEST_CASE("finite differences: parameter shared across two paths") {
    Rng rng(25);
    Layer l = make_dense(2, 2, Activation::linear, rng);
    Tensor x1 = random_tensor({2}, rng), x2 = random_tensor({2}, rng);
    auto params = std::vector<Param*>{&l.param("weight"), &l.param("bias")};
    double err = max_fd_rel_error(params, [&](Tape& t) {
        Var a = dense_forward(t, t.value(x1), l);
        Var b = dense_forward(t, t.value(x2), l);
        return t.sum(t.mul(a, b));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("finite differences: fusion ops (concat, stack_cols, row_mean, mean_of)") {
    Rng rng(26);
    Layer a = make_dense(2, 3, Activation::tanh, rng);
    Layer b = make_dense(2, 3, Activation::linear, rng);
    Tensor x = random_tensor({2}, rng);
    std::vector<Param*> params{&a.param("weight"), &a.param("bias"), &b.param("weight"),
                               &b.param("bias")};
    double err = max_fd_rel_error(params, [&](Tape& t) {
        Var va = dense_forward(t, t.value(x), a);
        Var vb = dense_forward(t, t.value(x), b);
        Var cat = t.concat({va, vb});
        Var stacked = t.stack_cols({va, vb, t.mean_of({va, vb})});
        Var pooled = t.row_mean(stacked);
        return t.sum(t.concat({cat, pooled}));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("gradient descent one-step hand check") {
    Param w{"w", Tensor({1}, {1.0}), true};
    OptimizerConfig cfg;
    cfg.algo = OptimizerConfig::Algo::gradient_descent;
    cfg.lr = 0.1;
    Optimizer opt({&w}, cfg);
    opt.step({Tensor({1}, {2.0})});
    CHECK(w.value[0] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("zero gradient leaves parameters unchanged") {
    Param w{"w", Tensor({2}, {1.5, -2.5}), true};
    for (auto algo : {OptimizerConfig::Algo::gradient_descent, OptimizerConfig::Algo::adam}) {
        OptimizerConfig cfg;
        cfg.algo = algo;
        Param copy = w;
        Optimizer opt({&copy}, cfg);
        opt.step({Tensor({2})});
        CHECK(bits_equal(copy.value, w.value));
    }
}

TEST_CASE("adam first step matches the hand-evaluated update rule") {
    const double w0 = 0.7, lr = 1e-3;
    Param w{"w", Tensor({1}, {w0}), true};
    OptimizerConfig cfg;
    cfg.lr = lr;
    Optimizer opt({&w}, cfg);
    opt.step({Tensor({1}, {1.0})});
    // m_hat = v_hat = 1 after bias correction, so the step is lr / (1 + eps).
    const double want = w0 - lr * 1.0 / (1.0 + cfg.eps);
    CHECK(std::fabs(w.value[0] - want) < 1e-12);
}

TEST_CASE("optimizer skips frozen parameters bitwise and aborts on non-finite gradients") {
    Rng rng(31);
    Param frozen{"f", random_tensor({3}, rng), false};
    Param live{"l", random_tensor({3}, rng), true};
    const Tensor frozen_before = frozen.value;
    Optimizer opt({&frozen, &live}, OptimizerConfig{});
    opt.step({random_tensor({3}, rng), random_tensor({3}, rng)});
    CHECK(bits_equal(frozen.value, frozen_before));

    Tensor bad({3});
    bad[1] = std::numeric_limits<double>::infinity();
    // the frozen slot tolerates anything; the trainable one must reject
    CHECK_THROWS_AS(opt.step({Tensor({3}), bad}), TrainingError);
}

TEST_CASE("training loop determinism: identical seed gives bitwise identical parameters") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        std::vector<Layer> layers{make_dense(4, 1, Activation::sigmoid, rng)};
        std::vector<Param*> params = trainable_params(layers);
        std::vector<const Param*> cparams(params.begin(), params.end());
        Optimizer o(params, OptimizerConfig{});
        Rng data_rng(derive_seed(seed, 1));
        for (int step = 0; step < 25; ++step) {
            Tensor x = random_tensor({4}, data_rng);
            Tensor y({1}, {step % 2 ? 1.0 : 0.0});
            Tape tape;
            Var loss = tape.bce(dense_forward(tape, tape.value(x), layers[0]), tape.value(y));
            tape.backward(loss);
            o.step(tape.gradients(cparams));
        }
        return layers[0].param("weight").value;
    };
    CHECK(bits_equal(run(77), run(77)));
}

TEST_CASE("freezing holds through a training run") {
    Rng rng(32);
    std::vector<Layer> layers;
    layers.push_back(make_dense(3, 4, Activation::relu, rng));
    layers.push_back(make_dense(4, 1, Activation::sigmoid, rng));
    layers[0].set_trainable(false);
    const Tensor w0 = layers[0].param("weight").value;
    const Tensor b0 = layers[0].param("bias").value;

    std::vector<Param*> params = trainable_params(layers);
    std::vector<const Param*> cparams(params.begin(), params.end());
    Optimizer opt(params, OptimizerConfig{});
    Rng data_rng(33);
    for (int step = 0; step < 50; ++step) {
        Tape tape;
        Var h = dense_forward(tape, tape.value(random_tensor({3}, data_rng)), layers[0]);
        Var loss = tape.bce(dense_forward(tape, h, layers[1]),
                            tape.value(Tensor({1}, {step % 2 ? 1.0 : 0.0})));
        tape.backward(loss);
        opt.step(tape.gradients(cparams));
    }
    CHECK(bits_equal(layers[0].param("weight").value, w0));
    CHECK(bits_equal(layers[0].param("bias").value, b0));
}

TEST_CASE("sigmoid output is strictly inside (0,1) even at extreme inputs") {
    Tape tape(false);
    Var y = tape.sigmoid(tape.value(Tensor({4}, {-1e6, -40.0, 40.0, 1e6})));
    for (size_t i = 0; i < 4; ++i) {
        CHECK(tape.val(y)[i] > 0.0);
        CHECK(tape.val(y)[i] < 1.0);
    }
}

TEST_CASE("bce is finite at clamped extreme predictions") {
    Tape tape(false);
    Var p = tape.value(Tensor({2}, {0.0, 1.0}));
    Var y = tape.value(Tensor({2}, {1.0, 0.0}));
    CHECK(std::isfinite(tape.val(tape.bce(p, y))[0]));
}

TEST_CASE("weights container round-trips bit-exactly") {
    Rng rng(55);
    std::vector<Layer> layers;
    layers.push_back(make_dense(7, 5, Activation::relu, rng));
    layers.push_back(make_conv1d(3, 4, 2, Activation::linear, rng));
    layers.push_back(make_lstm(4, 3, rng));
    layers[0].param("weight").trainable = false;

    std::ostringstream os(std::ios::binary);
    write_layers(os, layers);
    std::istringstream is(os.str(), std::ios::binary);
    std::vector<Layer> back = read_layers(is);

    REQUIRE(back.size() == layers.size());
    for (size_t i = 0; i < layers.size(); ++i) {
        CHECK(back[i].kind == layers[i].kind);
        CHECK(back[i].act == layers[i].act);
        REQUIRE(back[i].params.size() == layers[i].params.size());
        for (size_t p = 0; p < layers[i].params.size(); ++p) {
            CHECK(back[i].params[p].name == layers[i].params[p].name);
            CHECK(back[i].params[p].trainable == layers[i].params[p].trainable);
            CHECK(bits_equal(back[i].params[p].value, layers[i].params[p].value));
        }
    }

    // same bytes when re-serialized
    std::ostringstream os2(std::ios::binary);
    write_layers(os2, back);
    CHECK(os.str() == os2.str());
}

TEST_CASE("weights container rejects foreign bytes") {
    std::istringstream is("not a container", std::ios::binary);
    CHECK_THROWS_AS(read_layers(is), IoError);
}
