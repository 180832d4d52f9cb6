// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "convhead/features.hpp"
#include "convhead/head_params.hpp"

namespace convhead {

struct DriverConfig {
    int feature_dim = kFeatureDim; // audio feature slots, normalized by BN
    int attitude_dim = 0;          // one-hot slots appended after normalization
    int hidden_dim = 256;
    int num_layers = 4;
    double dropout_rate = 0.2;     // inter-layer (vertical) connections only
    int output_dim = kParamDim;

    int input_dim() const { return feature_dim + attitude_dim; }
    void validate() const;
    bool same_shape(const DriverConfig& other) const;
};

// Listener attitude for the listening track; appended to every feature
// frame as a one-hot of config.attitude_dim entries.
struct AttitudeCondition {
    int category = 0;
};

struct BatchNormState {
    std::vector<double> gamma;        // trainable scale
    std::vector<double> beta;         // trainable shift
    std::vector<double> running_mean; // inference statistics
    std::vector<double> running_var;
};

struct LstmLayer {
    // gate order [input | forget | cell | output], each hidden_dim rows
    std::vector<double> w_in;  // 4H x D, row-major
    std::vector<double> w_rec; // 4H x H
    std::vector<double> bias;  // 4H
};

struct DriverWeights {
    DriverConfig config;
    BatchNormState bn;
    std::vector<LstmLayer> layers;
    std::vector<double> w_out; // O x H
    std::vector<double> b_out; // O
};

enum class Mode { Infer, Train };

// Deterministic for a given seed: recurrent gate matrices are orthogonal,
// input/output projections uniform +-sqrt(6/(fan_in+fan_out)), forget-gate
// bias 1, batch norm identity with unit running variance.
DriverWeights init_weights(const DriverConfig& config, uint64_t seed);

// Zero-filled weights of the right shapes (checkpoint loading).
DriverWeights allocate_weights(const DriverConfig& config);

struct BatchStats {
    std::vector<double> mean;
    std::vector<double> var; // biased (divide by N)
};

// Statistics over all frames of all batch items (per feature column).
BatchStats compute_feature_stats(const std::vector<const std::vector<std::vector<double>>*>& batch);

// (x - mean) / sqrt(var + 1e-5) * gamma + beta, per column.
std::vector<std::vector<double>> apply_feature_norm(const std::vector<std::vector<double>>& x,
                                                    const std::vector<double>& mean,
                                                    const std::vector<double>& var,
                                                    const std::vector<double>& gamma,
                                                    const std::vector<double>& beta);

void update_running_stats(BatchNormState& bn, const BatchStats& stats, double momentum = 0.1);

// Spec-level normalize op: train mode computes batch statistics from x and
// folds them into the running statistics with momentum 0.1; infer mode uses
// the running statistics.
std::vector<std::vector<double>> normalize_input(const std::vector<std::vector<double>>& x,
                                                 BatchNormState& bn, Mode mode);

// Raw per-frame residual rows (T x output_dim) with row 0 forced to zero.
// Train mode normalizes with statistics of this sequence alone and samples
// inverted-dropout masks from dropout_seed; it does not mutate weights.
std::vector<std::vector<double>> forward_residuals(
    const DriverWeights& weights, const std::vector<std::vector<double>>& features,
    Mode mode = Mode::Infer, uint64_t dropout_seed = 0,
    const std::optional<AttitudeCondition>& attitude = std::nullopt);

// apply_residual(reference, forward_residuals(...)).
ParamSequence forward(const DriverWeights& weights, const FeatureSequence& features,
                      const HeadParams& reference, Mode mode = Mode::Infer,
                      uint64_t dropout_seed = 0,
                      const std::optional<AttitudeCondition>& attitude = std::nullopt);

// --- internals shared with the training module -----------------------------

// Per-clip activation record for backpropagation through time.
struct LstmCache {
    int frames = 0;
    std::vector<std::vector<double>> norm_x;  // T x feature_dim, pre scale/shift
    std::vector<std::vector<double>> inputs;  // per layer: T x D_l (post dropout)
    std::vector<std::vector<double>> gate_i;  // per layer: T x H (activated)
    std::vector<std::vector<double>> gate_f;
    std::vector<std::vector<double>> gate_g;
    std::vector<std::vector<double>> gate_o;
    std::vector<std::vector<double>> cell;    // per layer: T x H
    std::vector<std::vector<double>> tanh_cell;
    std::vector<std::vector<double>> hidden;  // per layer: T x H
    std::vector<std::vector<double>> dropout_mask; // per boundary (L-1): T x H
};

// Forward pass over pre-normalized inputs, recording activations.
// `normed` rows are feature_dim wide; attitude slots are appended inside.
std::vector<std::vector<double>> lstm_forward_cached(
    const DriverWeights& weights, const std::vector<std::vector<double>>& normed,
    bool use_dropout, uint64_t dropout_seed,
    const std::optional<AttitudeCondition>& attitude, LstmCache* cache);

struct DriverGrads {
    std::vector<double> bn_gamma;
    std::vector<double> bn_beta;
    struct LayerGrads {
        std::vector<double> w_in;
        std::vector<double> w_rec;
        std::vector<double> bias;
    };
    std::vector<LayerGrads> layers;
    std::vector<double> w_out;
    std::vector<double> b_out;
};

DriverGrads zero_grads(const DriverConfig& config);
void accumulate_grads(DriverGrads& into, const DriverGrads& from, double scale = 1.0);

// Backward pass matching lstm_forward_cached; d_residuals rows are
// output_dim wide (row 0 is ignored: frame 0 is pinned).
void lstm_backward(const DriverWeights& weights, const LstmCache& cache,
                   const std::vector<std::vector<double>>& d_residuals, DriverGrads& grads);

// Fixed enumeration of trainable tensors (used by the optimizer and the
// checkpoint writer). Order: bn.gamma, bn.beta, layer k w_in/w_rec/bias,
// out.weight, out.bias.
std::vector<std::pair<std::string, std::vector<double>*>> weight_tensors(DriverWeights& w);
std::vector<std::pair<std::string, const std::vector<double>*>> weight_tensors(
    const DriverWeights& w);
std::vector<std::pair<std::string, std::vector<double>*>> grad_tensors(DriverGrads& g,
                                                                       const DriverConfig& c);
std::vector<std::pair<std::string, const std::vector<double>*>> grad_tensors(
    const DriverGrads& g, const DriverConfig& c);

} // namespace convhead
