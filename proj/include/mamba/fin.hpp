#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mamba/layers.hpp"
#include "mamba/tape.hpp"
#include "mamba/tensor.hpp"

namespace mamba::fin {

// Statistical features the imitating networks reproduce.
enum class FeatureKind { mean, stddev, variance, skewness };
inline constexpr std::array<FeatureKind, 4> kAllKinds = {
    FeatureKind::mean, FeatureKind::stddev, FeatureKind::variance, FeatureKind::skewness};

const char* kind_name(FeatureKind k);
FeatureKind kind_from_name(const std::string& name);
double r2_floor(FeatureKind k); // 0.99 for mean/std/variance, 0.95 for skewness

using Signal = std::vector<double>;

// Population (1/L) moments. Skewness is m3 / m2^(3/2), defined as 0 when the
// variance falls below 1e-12.
double oracle_feature(const Signal& s, FeatureKind kind);

struct LabeledSignal {
    Signal values;
    std::array<double, 4> labels; // indexed by FeatureKind order
};

// Synthetic training signals: an equal mixture of iid uniform on [-3,3],
// iid standard normal, linear trend plus noise, and normal with a random
// per-signal scale in [0.1, 3]. Pure function of (count, length, seed).
std::vector<LabeledSignal> generate_signals(int count, int length, uint64_t seed);

struct FinTrainConfig {
    int max_epochs = 200;
    int batch = 256;
    double lr = 1e-3;
    double val_fraction = 0.10;
    int patience = 10;    // early stop after this many stale validation epochs
    int lr_patience = 4;  // halve the learning rate after this many stale epochs
    double min_lr = 1e-5;
    uint64_t seed = 1;
};

struct FinMetadata {
    FeatureKind kind = FeatureKind::mean;
    uint64_t seed = 0;
    int signal_length = 0;
    int epochs_run = 0;
    double final_val_mse = 0.0;
    double val_r2 = 0.0;
    double label_min = 0.0; // min-max scaling constants for the sigmoid head
    double label_max = 1.0;
    bool low_r2_warning = false;
};

// The full six-layer imitating network: dense 64/32/16/8/4 and a single-unit
// sigmoid head. ReLU on the first two hidden layers, linear elsewhere.
struct Fin {
    std::vector<Layer> layers;
    FinMetadata meta;
};

// Post-surgery four-layer network (64/32/16/8): layers 1-3 frozen, layer 4
// trainable, emitting an 8-dimensional embedding.
struct FinExtractor {
    std::vector<Layer> layers;
    FinMetadata meta;
};

inline constexpr std::array<int, 5> kFinHidden = {64, 32, 16, 8, 4};
inline constexpr int kEmbeddingDim = 8;

std::vector<Layer> make_fin_layers(int input_len, Rng& rng);

// MSE regression against the oracle labels, min-max scaled to [0,1] for the
// sigmoid head. Requires at least 1000 signals; a disjoint validation split
// (the trailing val_fraction) drives early stopping and the reported R^2.
Fin train_fin(FeatureKind kind, const std::vector<LabeledSignal>& signals,
              const FinTrainConfig& cfg);

// Freeze the first three layers, keep the fourth trainable, drop the last two.
FinExtractor surgery(const Fin& fin);

// Unscaled feature estimate from the full network.
double fin_predict(const Fin& fin, const Signal& s);

// 8-dimensional embedding of one signal.
Tensor extract(const FinExtractor& ex, const Signal& s);
Var extract(Tape& tape, const FinExtractor& ex, Var signal);

// Embed every per-stat column of an (L x s) matrix with each extractor.
// Output is (s x kinds x 8).
Tensor embed_matrix(const Tensor& m, const std::vector<FinExtractor>& fins);

// Weights container plus a human-readable key-value metadata sidecar
// (written next to `path` with extension .meta).
void save_fin(const std::string& path, const Fin& fin);
Fin load_fin(const std::string& path);
std::string metadata_path(const std::string& weights_path);

} // namespace mamba::fin
