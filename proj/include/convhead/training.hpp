// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "convhead/driver.hpp"
#include "convhead/head_params.hpp"

namespace convhead {

struct TrainConfig {
    int clip_frames = 90; // T
    int batch_size = 128;
    int steps = 0;
    double lr_max = 5e-3;
    double lr_min = 1e-4;
    double weight_decay = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;
    int snapshot_interval = 500;

    void validate() const;
};

// Sum over compared frames (1..T-1, frame 0 is pinned) of
// ||beta_err||_2 + ||crop_err||_2 + ||pose_err||_1.
double loss_gen(const ParamSequence& pred, const ParamSequence& truth);

// Sum over crop deltas of ||mu(c_t) - mu(c_hat_t)||_2, mu(c_t) = c_t - c_{t-1}.
double loss_mot(const ParamSequence& pred, const ParamSequence& truth);

double loss_total(const ParamSequence& pred, const ParamSequence& truth);

// Loss value plus its gradient in packed 73-vector space per predicted
// frame (subgradient 0 where a norm vanishes). d_pred must have pred.size()
// rows; row 0 stays untouched by the caller contract (frame 0 is pinned).
double loss_total_grad(const ParamSequence& pred, const ParamSequence& truth,
                       std::vector<std::vector<double>>& d_pred);

struct TrainClip {
    std::vector<std::vector<double>> features; // frames x feature_dim
    ParamSequence params;                      // same frame count
    int attitude = -1;                         // -1 = none
};

struct BatchItem {
    const TrainClip* clip = nullptr;
    int start = 0; // window offset
};

struct BatchLoss {
    double gen = 0.0;
    double mot = 0.0;
    double total = 0.0;
};

// Mean per-clip loss_total over the batch window plus exact reverse-mode
// gradients. Batch normalization statistics are computed over all frames
// of all items; dropout masks derive from (dropout_seed, item index) so
// the result is independent of evaluation order and thread count.
BatchLoss batch_gradients(const DriverWeights& weights, const std::vector<BatchItem>& batch,
                          int clip_frames, uint64_t dropout_seed, DriverGrads& grads,
                          BatchStats* stats_out = nullptr);

// Same forward computation without gradients (finite-difference side).
BatchLoss batch_loss(const DriverWeights& weights, const std::vector<BatchItem>& batch,
                     int clip_frames, uint64_t dropout_seed);

struct AdamState {
    std::vector<std::vector<double>> m; // aligned with weight_tensors order
    std::vector<std::vector<double>> v;
    long long step = 0;
};

AdamState init_adam_state(const DriverWeights& weights);

// Bias-corrected Adam moments plus decoupled decay w -= lr*wd*w.
void adamw_step(DriverWeights& weights, const DriverGrads& grads, AdamState& state, double lr,
                double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

// lr_min + 0.5*(lr_max-lr_min)*(1 + cos(pi*step/total)).
double cosine_lr(long long step, long long total_steps, double lr_max = 5e-3,
                 double lr_min = 1e-4);

struct LossRecord {
    int step = 0;
    double lr = 0.0;
    double gen = 0.0;
    double mot = 0.0;
    double total = 0.0;
};

struct TrainResult {
    DriverWeights weights;
    std::vector<LossRecord> history;
};

using SnapshotFn = std::function<void(int step, const DriverWeights&)>;

// Samples random clip windows per step, optimizes with AdamW under the
// cosine schedule, updates running normalization statistics (momentum 0.1)
// and reports snapshots every snapshot_interval steps plus the final one.
TrainResult train(const std::vector<TrainClip>& dataset, const DriverConfig& driver_config,
                  const TrainConfig& train_config, const SnapshotFn& on_snapshot = nullptr);

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& history);

// Mean of the last `window` records' total loss (fewer if the history is
// short); the convergence criterion compares this against the first
// window's mean.
double smoothed_loss(const std::vector<LossRecord>& history, size_t window, bool from_start);

uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b);

} // namespace convhead
