#include "mamba/fin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "mamba/errors.hpp"
#include "mamba/forward.hpp"
#include "mamba/optimizer.hpp"
#include "mamba/rng.hpp"
#include "mamba/weights_io.hpp"

namespace mamba::fin {

const char* kind_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::mean: return "mean";
        case FeatureKind::stddev: return "std";
        case FeatureKind::variance: return "variance";
        case FeatureKind::skewness: return "skewness";
    }
    return "?";
}

FeatureKind kind_from_name(const std::string& name) {
    for (FeatureKind k : kAllKinds) {
        if (name == kind_name(k)) return k;
    }
    throw ContractError("unknown feature kind '" + name + "'");
}

double r2_floor(FeatureKind k) {
    return k == FeatureKind::skewness ? 0.95 : 0.99;
}

double oracle_feature(const Signal& s, FeatureKind kind) {
    const size_t n = s.size();
    if (n < 2) throw ContractError("signal shorter than 2 samples");
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(n);
    if (kind == FeatureKind::mean) return mean;

    double m2 = 0.0, m3 = 0.0;
    for (double v : s) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    switch (kind) {
        case FeatureKind::variance: return m2;
        case FeatureKind::stddev: return std::sqrt(m2);
        case FeatureKind::skewness:
            return m2 < 1e-12 ? 0.0 : m3 / (m2 * std::sqrt(m2));
        default: return mean;
    }
}

std::vector<LabeledSignal> generate_signals(int count, int length, uint64_t seed) {
    if (count < 1) throw ContractError("signal count must be >= 1");
    if (length < 2) throw ContractError("signal length must be >= 2");
    Rng rng(seed);
    std::vector<LabeledSignal> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        LabeledSignal ls;
        ls.values.resize(static_cast<size_t>(length));
        switch (rng.uniform_int(0, 3)) {
            case 0:
                for (double& v : ls.values) v = rng.uniform(-3.0, 3.0);
                break;
            case 1:
                for (double& v : ls.values) v = rng.normal();
                break;
            case 2: {
                const double start = rng.uniform(-1.5, 1.5);
                const double drift = rng.uniform(-3.0, 3.0);
                for (int t = 0; t < length; ++t) {
                    ls.values[static_cast<size_t>(t)] =
                        start + drift * t / (length - 1) + rng.normal(0.0, 0.3);
                }
                break;
            }
            default: {
                const double sd = rng.uniform(0.1, 3.0);
                for (double& v : ls.values) v = rng.normal(0.0, sd);
                break;
            }
        }
        for (size_t k = 0; k < kAllKinds.size(); ++k)
            ls.labels[k] = oracle_feature(ls.values, kAllKinds[k]);
        out.push_back(std::move(ls));
    }
    return out;
}

std::vector<Layer> make_fin_layers(int input_len, Rng& rng) {
    std::vector<Layer> layers;
    int in = input_len;
    for (size_t i = 0; i < kFinHidden.size(); ++i) {
        const Activation act = i < 2 ? Activation::relu : Activation::linear;
        layers.push_back(make_dense(in, kFinHidden[i], act, rng));
        in = kFinHidden[i];
    }
    layers.push_back(make_dense(in, 1, Activation::sigmoid, rng));
    return layers;
}

namespace {

Tensor batch_matrix(const std::vector<LabeledSignal>& sigs, const std::vector<size_t>& idx,
                    size_t lo, size_t hi, int length) {
    Tensor x({static_cast<int>(hi - lo), length});
    for (size_t r = lo; r < hi; ++r) {
        const Signal& s = sigs[idx[r]].values;
        for (int c = 0; c < length; ++c) x.at(static_cast<int>(r - lo), c) = s[static_cast<size_t>(c)];
    }
    return x;
}

Tensor batch_labels(const std::vector<LabeledSignal>& sigs, const std::vector<size_t>& idx,
                    size_t lo, size_t hi, size_t kind_idx, double lmin, double inv_span) {
    Tensor y({static_cast<int>(hi - lo), 1});
    for (size_t r = lo; r < hi; ++r)
        y[r - lo] = (sigs[idx[r]].labels[kind_idx] - lmin) * inv_span;
    return y;
}

std::vector<Tensor> snapshot(const std::vector<Layer>& layers) {
    std::vector<Tensor> out;
    for (const Layer& l : layers) {
        for (const Param& p : l.params) out.push_back(p.value);
    }
    return out;
}

void restore(std::vector<Layer>& layers, const std::vector<Tensor>& snap) {
    size_t k = 0;
    for (Layer& l : layers) {
        for (Param& p : l.params) p.value = snap[k++];
    }
}

} // namespace

Fin train_fin(FeatureKind kind, const std::vector<LabeledSignal>& signals,
              const FinTrainConfig& cfg) {
    if (signals.size() < 1000)
        throw ContractError("train_fin requires at least 1000 signals, got " +
                            std::to_string(signals.size()));
    const int length = static_cast<int>(signals.front().values.size());
    const size_t kind_idx = static_cast<size_t>(kind);
    const size_t n_val = std::max<size_t>(1, static_cast<size_t>(
                                                 static_cast<double>(signals.size()) * cfg.val_fraction));
    const size_t n_train = signals.size() - n_val;

    // Label scaling constants come from the training split only.
    double lmin = signals[0].labels[kind_idx], lmax = lmin;
    for (size_t i = 0; i < n_train; ++i) {
        lmin = std::min(lmin, signals[i].labels[kind_idx]);
        lmax = std::max(lmax, signals[i].labels[kind_idx]);
    }
    const double span = std::max(lmax - lmin, 1e-12);
    const double inv_span = 1.0 / span;

    Rng rng(derive_seed(cfg.seed, 0x11));
    Fin fin;
    fin.layers = make_fin_layers(length, rng);
    fin.meta.kind = kind;
    fin.meta.seed = cfg.seed;
    fin.meta.signal_length = length;
    fin.meta.label_min = lmin;
    fin.meta.label_max = lmax;

    std::vector<Param*> params = trainable_params(fin.layers);
    OptimizerConfig ocfg;
    ocfg.algo = OptimizerConfig::Algo::adam;
    ocfg.lr = cfg.lr;
    Optimizer opt(params, ocfg);
    std::vector<const Param*> cparams(params.begin(), params.end());

    std::vector<size_t> train_idx(n_train), val_idx(n_val);
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::iota(val_idx.begin(), val_idx.end(), n_train);

    const Tensor val_x = batch_matrix(signals, val_idx, 0, n_val, length);
    const Tensor val_y = batch_labels(signals, val_idx, 0, n_val, kind_idx, lmin, inv_span);

    auto val_mse = [&]() {
        Tape tape(false);
        const Tensor& pred = tape.val(stack_forward(tape, tape.value(val_x), fin.layers));
        double acc = 0.0;
        for (size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - val_y[i];
            acc += d * d;
        }
        return acc / static_cast<double>(pred.size());
    };

    double best = val_mse();
    std::vector<Tensor> best_snap = snapshot(fin.layers);
    int best_epoch = 0;
    int stale = 0;
    Rng shuffle_rng(derive_seed(cfg.seed, 0x22));
    int epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);
        for (size_t lo = 0; lo < n_train; lo += static_cast<size_t>(cfg.batch)) {
            const size_t hi = std::min(n_train, lo + static_cast<size_t>(cfg.batch));
            Tape tape;
            Var x = tape.value(batch_matrix(signals, train_idx, lo, hi, length));
            Var pred = stack_forward(tape, x, fin.layers);
            Var loss = tape.mse(pred, tape.value(batch_labels(signals, train_idx, lo, hi, kind_idx,
                                                              lmin, inv_span)));
            const double lv = tape.val(loss)[0];
            if (!std::isfinite(lv))
                throw TrainingError(std::string("non-finite training loss for ") + kind_name(kind) +
                                    " FIN");
            tape.backward(loss);
            opt.step(tape.gradients(cparams));
        }
        const double v = val_mse();
        if (v < best - 1e-12) {
            best = v;
            best_snap = snapshot(fin.layers);
            best_epoch = epoch + 1;
            stale = 0;
        } else {
            ++stale;
            if (stale >= cfg.patience) {
                ++epoch;
                break;
            }
            if (stale % cfg.lr_patience == 0 && opt.lr() > cfg.min_lr)
                opt.set_lr(std::max(cfg.min_lr, opt.lr() * 0.5));
        }
    }
    restore(fin.layers, best_snap);
    fin.meta.epochs_run = epoch;
    fin.meta.final_val_mse = best;

    // Held-out R^2 on the original label scale.
    {
        Tape tape(false);
        const Tensor& pred = tape.val(stack_forward(tape, tape.value(val_x), fin.layers));
        double ybar = 0.0;
        for (size_t i = 0; i < n_val; ++i) ybar += val_y[i];
        ybar /= static_cast<double>(n_val);
        double ss_res = 0.0, ss_tot = 0.0;
        for (size_t i = 0; i < n_val; ++i) {
            ss_res += (pred[i] - val_y[i]) * (pred[i] - val_y[i]);
            ss_tot += (val_y[i] - ybar) * (val_y[i] - ybar);
        }
        fin.meta.val_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
        fin.meta.low_r2_warning = fin.meta.val_r2 < r2_floor(kind);
    }
    (void)best_epoch;
    return fin;
}

FinExtractor surgery(const Fin& fin) {
    if (fin.layers.size() != 6)
        throw ContractError("surgery expects the full six-layer network, got " +
                            std::to_string(fin.layers.size()) + " layers");
    FinExtractor ex;
    ex.meta = fin.meta;
    for (size_t i = 0; i < 4; ++i) {
        Layer l = fin.layers[i];
        l.set_trainable(i == 3);
        ex.layers.push_back(std::move(l));
    }
    return ex;
}

double fin_predict(const Fin& fin, const Signal& s) {
    Tensor x({static_cast<int>(s.size())}, std::vector<double>(s.begin(), s.end()));
    const Tensor scaled = stack_forward(x, fin.layers);
    return fin.meta.label_min + scaled[0] * (fin.meta.label_max - fin.meta.label_min);
}

Var extract(Tape& tape, const FinExtractor& ex, Var signal) {
    if (ex.layers.size() != 4) throw ContractError("extractor must have 4 layers");
    return stack_forward(tape, signal, ex.layers);
}

Tensor extract(const FinExtractor& ex, const Signal& s) {
    Tape tape(false);
    Tensor x({static_cast<int>(s.size())}, std::vector<double>(s.begin(), s.end()));
    return tape.val(extract(tape, ex, tape.value(x)));
}

Tensor embed_matrix(const Tensor& m, const std::vector<FinExtractor>& fins) {
    if (m.ndim() != 2) throw DimensionError("embed_matrix expects 2-D input, got " + m.shape_string());
    if (fins.empty()) throw ContractError("embed_matrix with no extractors");
    const int rows = m.dim(0), stats = m.dim(1);
    for (const FinExtractor& ex : fins) {
        const int want = ex.layers.front().in_width();
        if (want != rows)
            throw DimensionError("matrix has " + std::to_string(rows) +
                                 " rows but extractor expects " + std::to_string(want));
    }
    const int k = static_cast<int>(fins.size());
    Tensor out({stats, k, kEmbeddingDim});
    Signal col(static_cast<size_t>(rows));
    for (int s = 0; s < stats; ++s) {
        for (int r = 0; r < rows; ++r) col[static_cast<size_t>(r)] = m.at(r, s);
        for (int f = 0; f < k; ++f) {
            const Tensor e = extract(fins[static_cast<size_t>(f)], col);
            for (int d = 0; d < kEmbeddingDim; ++d) out.at(s, f, d) = e[static_cast<size_t>(d)];
        }
    }
    return out;
}

std::string metadata_path(const std::string& weights_path) {
    return weights_path + ".meta";
}

static std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_fin(const std::string& path, const Fin& fin) {
    save_layers(path, fin.layers);
    std::ofstream meta(metadata_path(path));
    if (!meta) throw IoError("cannot open '" + metadata_path(path) + "' for writing");
    meta << "kind = " << kind_name(fin.meta.kind) << "\n"
         << "seed = " << fin.meta.seed << "\n"
         << "signal_length = " << fin.meta.signal_length << "\n"
         << "epochs_run = " << fin.meta.epochs_run << "\n"
         << "final_val_mse = " << fmt_double(fin.meta.final_val_mse) << "\n"
         << "val_r2 = " << fmt_double(fin.meta.val_r2) << "\n"
         << "label_min = " << fmt_double(fin.meta.label_min) << "\n"
         << "label_max = " << fmt_double(fin.meta.label_max) << "\n"
         << "low_r2_warning = " << (fin.meta.low_r2_warning ? 1 : 0) << "\n";
}

Fin load_fin(const std::string& path) {
    Fin fin;
    fin.layers = load_layers(path);
    std::ifstream meta(metadata_path(path));
    if (!meta) throw IoError("cannot open '" + metadata_path(path) + "'");
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t'))
                s.pop_back();
        };
        trim(key);
        trim(val);
        if (key == "kind") fin.meta.kind = kind_from_name(val);
        else if (key == "seed") fin.meta.seed = std::stoull(val);
        else if (key == "signal_length") fin.meta.signal_length = std::stoi(val);
        else if (key == "epochs_run") fin.meta.epochs_run = std::stoi(val);
        else if (key == "final_val_mse") fin.meta.final_val_mse = std::stod(val);
        else if (key == "val_r2") fin.meta.val_r2 = std::stod(val);
        else if (key == "label_min") fin.meta.label_min = std::stod(val);
        else if (key == "label_max") fin.meta.label_max = std::stod(val);
        else if (key == "low_r2_warning") fin.meta.low_r2_warning = val == "1";
    }
    return fin;
}

} // namespace mamba::fin
