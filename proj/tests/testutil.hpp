#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "mamba/layers.hpp"
#include "mamba/rng.hpp"
#include "mamba/tape.hpp"

namespace testutil {

using mamba::Param;
using mamba::Tape;
using mamba::Tensor;
using mamba::Var;

// Central finite differences against tape gradients. `make_loss` must build
// the scalar loss on the given tape from the current parameter values.
// Returns the max of |analytic - numeric| / max(1, |analytic|, |numeric|).
inline double max_fd_rel_error(const std::vector<Param*>& params,
                               const std::function<Var(Tape&)>& make_loss, double h = 1e-5) {
    std::vector<const Param*> cparams(params.begin(), params.end());
    Tape tape;
    Var loss = make_loss(tape);
    tape.backward(loss);
    std::vector<Tensor> grads = tape.gradients(cparams);

    auto eval = [&]() {
        Tape t(false);
        return t.val(make_loss(t))[0];
    };

    double worst = 0.0;
    for (size_t k = 0; k < params.size(); ++k) {
        Param& p = *params[k];
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double w0 = p.value[i];
            p.value[i] = w0 + h;
            const double fp = eval();
            p.value[i] = w0 - h;
            const double fm = eval();
            p.value[i] = w0;
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = grads[k][i];
            const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
            worst = std::max(worst, std::fabs(analytic - numeric) / denom);
        }
    }
    return worst;
}

inline Tensor random_tensor(mamba::Shape shape, mamba::Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline bool bits_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace testutil
