#include "mamba/tape.hpp"

#include <cmath>

#include "mamba/errors.hpp"

namespace mamba {

namespace {

double stable_sigmoid(double z) {
    // Clamp keeps the output strictly inside (0,1) in double precision.
    if (z > 36.0) z = 36.0;
    if (z < -36.0) z = -36.0;
    return 1.0 / (1.0 + std::exp(-z));
}

} // namespace

int Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&, const Tensor&)> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = recording_ && needs_grad;
    if (n.needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
    return n.grad;
}

void Tape::accumulate(int id, const double* g, size_t n) {
    Node& node = nodes_[static_cast<size_t>(id)];
    if (!node.needs_grad) return;
    Tensor& buf = grad_buf(id);
    double* d = buf.data();
    for (size_t i = 0; i < n; ++i) d[i] += g[i];
}

Var Tape::value(Tensor v) {
    return {push(std::move(v), false, nullptr)};
}

Var Tape::param(const Param& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return {it->second};
    int id = push(p.value, p.trainable, nullptr);
    param_nodes_.emplace(&p, id);
    return {id};
}

Var Tape::linear(Var xv, Var wv, Var bv) {
    const Tensor& x = val(xv);
    const Tensor& w = val(wv);
    const Tensor& b = val(bv);
    if (w.ndim() != 2) throw DimensionError("linear weight must be 2-D, got " + w.shape_string());
    const int out = w.dim(0), in = w.dim(1);
    if (b.ndim() != 1 || b.dim(0) != out)
        throw DimensionError("linear bias " + b.shape_string() + " vs weight " + w.shape_string());
    const bool batched = x.ndim() == 2;
    const int rows = batched ? x.dim(0) : 1;
    const int xin = batched ? x.dim(1) : static_cast<int>(x.size());
    if (xin != in)
        throw DimensionError("linear input " + x.shape_string() + " vs weight " + w.shape_string());

    Tensor y(batched ? Shape{rows, out} : Shape{out});
    const double* xd = x.data();
    const double* wd = w.data();
    double* yd = y.data();
    for (int r = 0; r < rows; ++r) {
        const double* xr = xd + static_cast<size_t>(r) * in;
        double* yr = yd + static_cast<size_t>(r) * out;
        for (int o = 0; o < out; ++o) {
            const double* wrow = wd + static_cast<size_t>(o) * in;
            double acc = b[static_cast<size_t>(o)];
            for (int i = 0; i < in; ++i) acc += wrow[i] * xr[i];
            yr[o] = acc;
        }
    }

    const bool ng = tracked(xv) || tracked(wv) || tracked(bv);
    int xid = xv.id, wid = wv.id, bid = bv.id;
    return {push(std::move(y), ng, [xid, wid, bid, rows, out, in, batched](Tape& t, const Tensor& g) {
        const Tensor& x = t.nodes_[static_cast<size_t>(xid)].value;
        const Tensor& w = t.nodes_[static_cast<size_t>(wid)].value;
        const double* gd = g.data();
        if (t.nodes_[static_cast<size_t>(wid)].needs_grad) {
            Tensor& dw = t.grad_buf(wid);
            for (int r = 0; r < rows; ++r) {
                const double* gr = gd + static_cast<size_t>(r) * out;
                const double* xr = x.data() + static_cast<size_t>(r) * in;
                for (int o = 0; o < out; ++o) {
                    double* dwrow = dw.data() + static_cast<size_t>(o) * in;
                    const double go = gr[o];
                    if (go == 0.0) continue;
                    for (int i = 0; i < in; ++i) dwrow[i] += go * xr[i];
                }
            }
        }
        if (t.nodes_[static_cast<size_t>(bid)].needs_grad) {
            Tensor& db = t.grad_buf(bid);
            for (int r = 0; r < rows; ++r) {
                const double* gr = gd + static_cast<size_t>(r) * out;
                for (int o = 0; o < out; ++o) db[static_cast<size_t>(o)] += gr[o];
            }
        }
        if (t.nodes_[static_cast<size_t>(xid)].needs_grad) {
            Tensor& dx = t.grad_buf(xid);
            for (int r = 0; r < rows; ++r) {
                const double* gr = gd + static_cast<size_t>(r) * out;
                double* dxr = dx.data() + static_cast<size_t>(r) * in;
                for (int o = 0; o < out; ++o) {
                    const double* wrow = w.data() + static_cast<size_t>(o) * in;
                    const double go = gr[o];
                    if (go == 0.0) continue;
                    for (int i = 0; i < in; ++i) dxr[i] += go * wrow[i];
                }
            }
        }
        (void)batched;
    })};
}

Var Tape::matvec(Var wv, Var xv) {
    const Tensor& w = val(wv);
    const Tensor& x = val(xv);
    if (w.ndim() != 2 || x.ndim() != 1 || w.dim(1) != x.dim(0))
        throw DimensionError("matvec weight " + w.shape_string() + " vs input " + x.shape_string());
    const int out = w.dim(0), in = w.dim(1);
    Tensor y({out});
    for (int o = 0; o < out; ++o) {
        const double* wrow = w.data() + static_cast<size_t>(o) * in;
        double acc = 0.0;
        for (int i = 0; i < in; ++i) acc += wrow[i] * x[static_cast<size_t>(i)];
        y[static_cast<size_t>(o)] = acc;
    }
    const bool ng = tracked(wv) || tracked(xv);
    int wid = wv.id, xid = xv.id;
    return {push(std::move(y), ng, [wid, xid, out, in](Tape& t, const Tensor& g) {
        const Tensor& w = t.nodes_[static_cast<size_t>(wid)].value;
        const Tensor& x = t.nodes_[static_cast<size_t>(xid)].value;
        if (t.nodes_[static_cast<size_t>(wid)].needs_grad) {
            Tensor& dw = t.grad_buf(wid);
            for (int o = 0; o < out; ++o) {
                const double go = g[static_cast<size_t>(o)];
                if (go == 0.0) continue;
                double* dwrow = dw.data() + static_cast<size_t>(o) * in;
                for (int i = 0; i < in; ++i) dwrow[i] += go * x[static_cast<size_t>(i)];
            }
        }
        if (t.nodes_[static_cast<size_t>(xid)].needs_grad) {
            Tensor& dx = t.grad_buf(xid);
            for (int o = 0; o < out; ++o) {
                const double go = g[static_cast<size_t>(o)];
                if (go == 0.0) continue;
                const double* wrow = w.data() + static_cast<size_t>(o) * in;
                for (int i = 0; i < in; ++i) dx[static_cast<size_t>(i)] += go * wrow[i];
            }
        }
    })};
}

Var Tape::conv1d(Var xv, Var kv, Var bv) {
    const Tensor& x = val(xv);
    const Tensor& k = val(kv);
    const Tensor& b = val(bv);
    if (x.ndim() != 2 || k.ndim() != 3)
        throw DimensionError("conv1d input " + x.shape_string() + " vs kernels " + k.shape_string());
    const int channels = x.dim(0), length = x.dim(1);
    const int filters = k.dim(0), kch = k.dim(1), kernel = k.dim(2);
    if (kch != channels)
        throw DimensionError("conv1d channels: input " + x.shape_string() + " vs kernels " +
                             k.shape_string());
    if (length < kernel)
        throw DegenerateInputError("conv1d input length " + std::to_string(length) +
                                   " shorter than kernel " + std::to_string(kernel));
    if (b.ndim() != 1 || b.dim(0) != filters)
        throw DimensionError("conv1d bias " + b.shape_string() + " vs kernels " + k.shape_string());

    const int out_len = length - kernel + 1;
    Tensor y({filters, out_len});
    for (int f = 0; f < filters; ++f) {
        for (int t0 = 0; t0 < out_len; ++t0) {
            double acc = b[static_cast<size_t>(f)];
            for (int c = 0; c < channels; ++c) {
                for (int j = 0; j < kernel; ++j) acc += k.at(f, c, j) * x.at(c, t0 + j);
            }
            y.at(f, t0) = acc;
        }
    }
    const bool ng = tracked(xv) || tracked(kv) || tracked(bv);
    int xid = xv.id, kid = kv.id, bid = bv.id;
    return {push(std::move(y), ng,
                 [xid, kid, bid, filters, channels, kernel, out_len](Tape& t, const Tensor& g) {
                     const Tensor& x = t.nodes_[static_cast<size_t>(xid)].value;
                     const Tensor& k = t.nodes_[static_cast<size_t>(kid)].value;
                     const bool need_x = t.nodes_[static_cast<size_t>(xid)].needs_grad;
                     const bool need_k = t.nodes_[static_cast<size_t>(kid)].needs_grad;
                     const bool need_b = t.nodes_[static_cast<size_t>(bid)].needs_grad;
                     for (int f = 0; f < filters; ++f) {
                         for (int t0 = 0; t0 < out_len; ++t0) {
                             const double go = g.at(f, t0);
                             if (go == 0.0) continue;
                             if (need_b) t.grad_buf(bid)[static_cast<size_t>(f)] += go;
                             for (int c = 0; c < channels; ++c) {
                                 for (int j = 0; j < kernel; ++j) {
                                     if (need_k) t.grad_buf(kid).at(f, c, j) += go * x.at(c, t0 + j);
                                     if (need_x) t.grad_buf(xid).at(c, t0 + j) += go * k.at(f, c, j);
                                 }
                             }
                         }
                     }
                 })};
}

Var Tape::relu(Var xv) {
    const Tensor& x = val(xv);
    Tensor y = Tensor::zeros_like(x);
    for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    int xid = xv.id;
    const size_t n = x.size();
    return {push(std::move(y), tracked(xv), [xid, n](Tape& t, const Tensor& g) {
        const Tensor& x = t.nodes_[static_cast<size_t>(xid)].value;
        Tensor& dx = t.grad_buf(xid);
        for (size_t i = 0; i < n; ++i) {
            if (x[i] > 0.0) dx[i] += g[i];
        }
    })};
}

Var Tape::sigmoid(Var xv) {
    const Tensor& x = val(xv);
    Tensor y = Tensor::zeros_like(x);
    for (size_t i = 0; i < x.size(); ++i) y[i] = stable_sigmoid(x[i]);
    int xid = xv.id;
    const size_t n = x.size();
    int yid = push(std::move(y), tracked(xv), nullptr);
    if (nodes_[static_cast<size_t>(yid)].needs_grad) {
        nodes_[static_cast<size_t>(yid)].back = [xid, yid, n](Tape& t, const Tensor& g) {
            const Tensor& s = t.nodes_[static_cast<size_t>(yid)].value;
            Tensor& dx = t.grad_buf(xid);
            for (size_t i = 0; i < n; ++i) dx[i] += g[i] * s[i] * (1.0 - s[i]);
        };
    }
    return {yid};
}

Var Tape::tanh_(Var xv) {
    const Tensor& x = val(xv);
    Tensor y = Tensor::zeros_like(x);
    for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    int xid = xv.id;
    const size_t n = x.size();
    int yid = push(std::move(y), tracked(xv), nullptr);
    if (nodes_[static_cast<size_t>(yid)].needs_grad) {
        nodes_[static_cast<size_t>(yid)].back = [xid, yid, n](Tape& t, const Tensor& g) {
            const Tensor& s = t.nodes_[static_cast<size_t>(yid)].value;
            Tensor& dx = t.grad_buf(xid);
            for (size_t i = 0; i < n; ++i) dx[i] += g[i] * (1.0 - s[i] * s[i]);
        };
    }
    return {yid};
}

Var Tape::add(Var av, Var bv) {
    const Tensor& a = val(av);
    const Tensor& b = val(bv);
    if (!a.same_shape(b))
        throw DimensionError("add shapes " + a.shape_string() + " vs " + b.shape_string());
    Tensor y = Tensor::zeros_like(a);
    for (size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
    int aid = av.id, bid = bv.id;
    const size_t n = a.size();
    return {push(std::move(y), tracked(av) || tracked(bv), [aid, bid, n](Tape& t, const Tensor& g) {
        t.accumulate(aid, g.data(), n);
        t.accumulate(bid, g.data(), n);
    })};
}

Var Tape::mul(Var av, Var bv) {
    const Tensor& a = val(av);
    const Tensor& b = val(bv);
    if (!a.same_shape(b))
        throw DimensionError("mul shapes " + a.shape_string() + " vs " + b.shape_string());
    Tensor y = Tensor::zeros_like(a);
    for (size_t i = 0; i < a.size(); ++i) y[i] = a[i] * b[i];
    int aid = av.id, bid = bv.id;
    const size_t n = a.size();
    return {push(std::move(y), tracked(av) || tracked(bv), [aid, bid, n](Tape& t, const Tensor& g) {
        const Tensor& a = t.nodes_[static_cast<size_t>(aid)].value;
        const Tensor& b = t.nodes_[static_cast<size_t>(bid)].value;
        if (t.nodes_[static_cast<size_t>(aid)].needs_grad) {
            Tensor& da = t.grad_buf(aid);
            for (size_t i = 0; i < n; ++i) da[i] += g[i] * b[i];
        }
        if (t.nodes_[static_cast<size_t>(bid)].needs_grad) {
            Tensor& db = t.grad_buf(bid);
            for (size_t i = 0; i < n; ++i) db[i] += g[i] * a[i];
        }
    })};
}

Var Tape::scale(Var av, double c) {
    const Tensor& a = val(av);
    Tensor y = Tensor::zeros_like(a);
    for (size_t i = 0; i < a.size(); ++i) y[i] = c * a[i];
    int aid = av.id;
    const size_t n = a.size();
    return {push(std::move(y), tracked(av), [aid, c, n](Tape& t, const Tensor& g) {
        Tensor& da = t.grad_buf(aid);
        for (size_t i = 0; i < n; ++i) da[i] += c * g[i];
    })};
}

Var Tape::concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("concat of zero tensors");
    size_t total = 0;
    bool ng = false;
    for (Var p : parts) {
        const Tensor& t = val(p);
        if (t.ndim() != 1) throw DimensionError("concat expects 1-D parts, got " + t.shape_string());
        total += t.size();
        ng = ng || tracked(p);
    }
    Tensor y({static_cast<int>(total)});
    size_t off = 0;
    for (Var p : parts) {
        const Tensor& t = val(p);
        for (size_t i = 0; i < t.size(); ++i) y[off + i] = t[i];
        off += t.size();
    }
    std::vector<int> ids;
    ids.reserve(parts.size());
    for (Var p : parts) ids.push_back(p.id);
    return {push(std::move(y), ng, [ids](Tape& t, const Tensor& g) {
        size_t off = 0;
        for (int id : ids) {
            const size_t n = t.nodes_[static_cast<size_t>(id)].value.size();
            t.accumulate(id, g.data() + off, n);
            off += n;
        }
    })};
}

Var Tape::stack_cols(const std::vector<Var>& cols) {
    if (cols.empty()) throw ContractError("stack_cols of zero tensors");
    const int d = static_cast<int>(val(cols[0]).size());
    bool ng = false;
    for (Var c : cols) {
        const Tensor& t = val(c);
        if (t.ndim() != 1 || static_cast<int>(t.size()) != d)
            throw DimensionError("stack_cols parts must be equal-length vectors, got " +
                                 t.shape_string());
        ng = ng || tracked(c);
    }
    const int ncols = static_cast<int>(cols.size());
    Tensor y({d, ncols});
    for (int i = 0; i < ncols; ++i) {
        const Tensor& t = val(cols[static_cast<size_t>(i)]);
        for (int r = 0; r < d; ++r) y.at(r, i) = t[static_cast<size_t>(r)];
    }
    std::vector<int> ids;
    ids.reserve(cols.size());
    for (Var c : cols) ids.push_back(c.id);
    return {push(std::move(y), ng, [ids, d, ncols](Tape& t, const Tensor& g) {
        for (int i = 0; i < ncols; ++i) {
            const int id = ids[static_cast<size_t>(i)];
            if (!t.nodes_[static_cast<size_t>(id)].needs_grad) continue;
            Tensor& dc = t.grad_buf(id);
            for (int r = 0; r < d; ++r) dc[static_cast<size_t>(r)] += g.at(r, i);
        }
    })};
}

Var Tape::row_mean(Var xv) {
    const Tensor& x = val(xv);
    if (x.ndim() != 2) throw DimensionError("row_mean expects 2-D input, got " + x.shape_string());
    const int rows = x.dim(0), cols = x.dim(1);
    Tensor y({rows});
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += x.at(r, c);
        y[static_cast<size_t>(r)] = acc / cols;
    }
    int xid = xv.id;
    return {push(std::move(y), tracked(xv), [xid, rows, cols](Tape& t, const Tensor& g) {
        Tensor& dx = t.grad_buf(xid);
        for (int r = 0; r < rows; ++r) {
            const double gr = g[static_cast<size_t>(r)] / cols;
            for (int c = 0; c < cols; ++c) dx.at(r, c) += gr;
        }
    })};
}

Var Tape::mean_of(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("mean_of zero tensors");
    const Tensor& first = val(parts[0]);
    bool ng = false;
    for (Var p : parts) {
        if (!val(p).same_shape(first))
            throw DimensionError("mean_of shape mismatch: " + val(p).shape_string() + " vs " +
                                 first.shape_string());
        ng = ng || tracked(p);
    }
    const double inv = 1.0 / static_cast<double>(parts.size());
    Tensor y = Tensor::zeros_like(first);
    for (Var p : parts) {
        const Tensor& t = val(p);
        for (size_t i = 0; i < t.size(); ++i) y[i] += t[i] * inv;
    }
    std::vector<int> ids;
    ids.reserve(parts.size());
    for (Var p : parts) ids.push_back(p.id);
    const size_t n = first.size();
    return {push(std::move(y), ng, [ids, inv, n](Tape& t, const Tensor& g) {
        std::vector<double> gi(n);
        for (size_t i = 0; i < n; ++i) gi[i] = g[i] * inv;
        for (int id : ids) t.accumulate(id, gi.data(), n);
    })};
}

Var Tape::mse(Var pv, Var tv) {
    const Tensor& p = val(pv);
    const Tensor& t = val(tv);
    if (!p.same_shape(t))
        throw DimensionError("mse shapes " + p.shape_string() + " vs " + t.shape_string());
    const size_t n = p.size();
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = p[i] - t[i];
        acc += d * d;
    }
    Tensor y = Tensor::scalar(acc / static_cast<double>(n));
    int pid = pv.id, tid = tv.id;
    return {push(std::move(y), tracked(pv), [pid, tid, n](Tape& tp, const Tensor& g) {
        const Tensor& p = tp.nodes_[static_cast<size_t>(pid)].value;
        const Tensor& t = tp.nodes_[static_cast<size_t>(tid)].value;
        Tensor& dp = tp.grad_buf(pid);
        const double s = 2.0 * g[0] / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) dp[i] += s * (p[i] - t[i]);
    })};
}

Var Tape::bce(Var pv, Var yv) {
    const Tensor& p = val(pv);
    const Tensor& y = val(yv);
    if (!p.same_shape(y))
        throw DimensionError("bce shapes " + p.shape_string() + " vs " + y.shape_string());
    const size_t n = p.size();
    const double lo = kBceClamp, hi = 1.0 - kBceClamp;
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double pc = std::min(hi, std::max(lo, p[i]));
        acc -= y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
    }
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));
    int pid = pv.id, yid = yv.id;
    return {push(std::move(out), tracked(pv), [pid, yid, n, lo, hi](Tape& tp, const Tensor& g) {
        const Tensor& p = tp.nodes_[static_cast<size_t>(pid)].value;
        const Tensor& y = tp.nodes_[static_cast<size_t>(yid)].value;
        Tensor& dp = tp.grad_buf(pid);
        const double s = g[0] / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            if (p[i] <= lo || p[i] >= hi) continue; // clamped region, zero slope
            dp[i] += s * (p[i] - y[i]) / (p[i] * (1.0 - p[i]));
        }
    })};
}

Var Tape::sum(Var xv) {
    const Tensor& x = val(xv);
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) acc += x[i];
    int xid = xv.id;
    const size_t n = x.size();
    return {push(Tensor::scalar(acc), tracked(xv), [xid, n](Tape& t, const Tensor& g) {
        Tensor& dx = t.grad_buf(xid);
        for (size_t i = 0; i < n; ++i) dx[i] += g[0];
    })};
}

void Tape::backward(Var loss) {
    if (!recording_) throw ContractError("backward on a non-recording tape");
    if (!loss.valid() || static_cast<size_t>(loss.id) >= nodes_.size())
        throw ContractError("backward from an unknown node");
    Node& ln = nodes_[static_cast<size_t>(loss.id)];
    if (ln.value.size() != 1)
        throw ContractError("backward requires a scalar loss, got shape " + ln.value.shape_string());
    if (!ln.needs_grad) return; // loss does not depend on any trainable parameter
    grad_buf(loss.id)[0] += 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.needs_grad || n.grad.empty() || !n.back) continue;
        n.back(*this, n.grad);
    }
}

bool Tape::has_grad(const Param& p) const {
    auto it = param_nodes_.find(&p);
    if (it == param_nodes_.end()) return false;
    const Node& n = nodes_[static_cast<size_t>(it->second)];
    return n.needs_grad && !n.grad.empty();
}

Tensor Tape::grad_of(const Param& p) const {
    if (!p.trainable) throw ContractError("frozen parameter '" + p.name + "' has no gradient entry");
    auto it = param_nodes_.find(&p);
    if (it == param_nodes_.end()) return Tensor::zeros_like(p.value);
    const Node& n = nodes_[static_cast<size_t>(it->second)];
    if (n.grad.empty()) return Tensor::zeros_like(p.value);
    return n.grad;
}

std::vector<Tensor> Tape::gradients(const std::vector<const Param*>& params) const {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const Param* p : params) out.push_back(grad_of(*p));
    return out;
}

} // namespace mamba
