// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/training.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

namespace convhead {

namespace {

void check_lengths(const ParamSequence& pred, const ParamSequence& truth) {
    if (pred.size() != truth.size()) throw std::runtime_error("sequence length mismatch");
    if (pred.empty()) throw std::runtime_error("empty sequences");
}

double l2_norm(const double* v, int n) {
    double sq = 0.0;
    for (int i = 0; i < n; ++i) sq += v[i] * v[i];
    return std::sqrt(sq);
}

} // namespace

void TrainConfig::validate() const {
    if (clip_frames < 2) throw std::runtime_error("clip length must be at least 2");
    if (batch_size < 1) throw std::runtime_error("batch size must be positive");
    if (steps < 0) throw std::runtime_error("steps must be non-negative");
    if (!(lr_max >= lr_min && lr_min > 0.0))
        throw std::runtime_error("need lr_max >= lr_min > 0");
    if (weight_decay < 0.0) throw std::runtime_error("weight decay must be non-negative");
    if (snapshot_interval < 1) throw std::runtime_error("snapshot interval must be positive");
}

double loss_gen(const ParamSequence& pred, const ParamSequence& truth) {
    check_lengths(pred, truth);
    double total = 0.0;
    for (size_t t = 1; t < pred.size(); ++t) {
        const auto p = pack(pred.frames[t]);
        const auto q = pack(truth.frames[t]);
        double err[kParamDim];
        for (int i = 0; i < kParamDim; ++i) err[i] = p[static_cast<size_t>(i)] - q[static_cast<size_t>(i)];
        total += l2_norm(err, kExpressionDim);                           // beta, L2
        total += l2_norm(err + kExpressionDim + kPoseDim, kCropDim);     // crop, L2
        for (int i = 0; i < kPoseDim; ++i) total += std::fabs(err[kExpressionDim + i]); // pose, L1
    }
    return total;
}

double loss_mot(const ParamSequence& pred, const ParamSequence& truth) {
    check_lengths(pred, truth);
    if (pred.size() < 2) throw std::runtime_error("motion loss needs at least two frames");
    double total = 0.0;
    for (size_t t = 1; t < pred.size(); ++t) {
        double err[kCropDim];
        for (int i = 0; i < kCropDim; ++i) {
            const double dp = pred.frames[t].crop[static_cast<size_t>(i)] -
                              pred.frames[t - 1].crop[static_cast<size_t>(i)];
            const double dq = truth.frames[t].crop[static_cast<size_t>(i)] -
                              truth.frames[t - 1].crop[static_cast<size_t>(i)];
            err[i] = dq - dp;
        }
        total += l2_norm(err, kCropDim);
    }
    return total;
}

double loss_total(const ParamSequence& pred, const ParamSequence& truth) {
    return loss_gen(pred, truth) + loss_mot(pred, truth);
}

double loss_total_grad(const ParamSequence& pred, const ParamSequence& truth,
                       std::vector<std::vector<double>>& d_pred) {
    check_lengths(pred, truth);
    if (pred.size() < 2) throw std::runtime_error("motion loss needs at least two frames");
    if (d_pred.size() != pred.size()) throw std::runtime_error("gradient buffer length mismatch");
    for (auto& row : d_pred) row.assign(kParamDim, 0.0);

    double total = 0.0;
    constexpr int kCropOffset = kExpressionDim + kPoseDim;

    for (size_t t = 1; t < pred.size(); ++t) {
        const auto p = pack(pred.frames[t]);
        const auto q = pack(truth.frames[t]);
        double err[kParamDim];
        for (int i = 0; i < kParamDim; ++i) err[i] = p[static_cast<size_t>(i)] - q[static_cast<size_t>(i)];

        const double beta_norm = l2_norm(err, kExpressionDim);
        total += beta_norm;
        if (beta_norm > 0.0)
            for (int i = 0; i < kExpressionDim; ++i)
                d_pred[t][static_cast<size_t>(i)] += err[i] / beta_norm;

        const double crop_norm = l2_norm(err + kCropOffset, kCropDim);
        total += crop_norm;
        if (crop_norm > 0.0)
            for (int i = 0; i < kCropDim; ++i)
                d_pred[t][static_cast<size_t>(kCropOffset + i)] += err[kCropOffset + i] / crop_norm;

        for (int i = 0; i < kPoseDim; ++i) {
            const double e = err[kExpressionDim + i];
            total += std::fabs(e);
            if (e > 0.0)
                d_pred[t][static_cast<size_t>(kExpressionDim + i)] += 1.0;
            else if (e < 0.0)
                d_pred[t][static_cast<size_t>(kExpressionDim + i)] -= 1.0;
        }
    }

    for (size_t t = 1; t < pred.size(); ++t) {
        double err[kCropDim];
        for (int i = 0; i < kCropDim; ++i) {
            const double dp = pred.frames[t].crop[static_cast<size_t>(i)] -
                              pred.frames[t - 1].crop[static_cast<size_t>(i)];
            const double dq = truth.frames[t].crop[static_cast<size_t>(i)] -
                              truth.frames[t - 1].crop[static_cast<size_t>(i)];
            err[i] = dp - dq;
        }
        const double n = l2_norm(err, kCropDim);
        total += n;
        if (n > 0.0) {
            for (int i = 0; i < kCropDim; ++i) {
                const double g = err[i] / n;
                d_pred[t][static_cast<size_t>(kCropOffset + i)] += g;
                d_pred[t - 1][static_cast<size_t>(kCropOffset + i)] -= g;
            }
        }
    }
    return total;
}

namespace {

struct ClipEval {
    double gen = 0.0;
    double mot = 0.0;
    DriverGrads grads;
};

// Forward + loss (+ optional backward) for one batch item under shared
// batch statistics.
ClipEval eval_clip(const DriverWeights& weights, const BatchItem& item, int clip_frames,
                   const BatchStats& stats, uint64_t clip_dropout_seed, bool want_grads) {
    const auto& cfg = weights.config;
    const auto& clip = *item.clip;

    std::vector<std::vector<double>> normed(static_cast<size_t>(clip_frames));
    for (int t = 0; t < clip_frames; ++t) {
        const auto& row = clip.features[static_cast<size_t>(item.start + t)];
        auto& out = normed[static_cast<size_t>(t)];
        out.resize(row.size());
        for (size_t d = 0; d < row.size(); ++d)
            out[d] = (row[d] - stats.mean[d]) / std::sqrt(stats.var[d] + 1e-5);
    }

    std::optional<AttitudeCondition> attitude;
    if (cfg.attitude_dim > 0) attitude = AttitudeCondition{clip.attitude};

    LstmCache cache;
    const auto residuals = lstm_forward_cached(weights, normed, /*use_dropout=*/true,
                                               clip_dropout_seed, attitude,
                                               want_grads ? &cache : nullptr);

    const HeadParams reference = clip.params.frames[static_cast<size_t>(item.start)];
    const ParamSequence pred = apply_residual(reference, residuals);

    ParamSequence truth;
    truth.frames.assign(clip.params.frames.begin() + item.start,
                        clip.params.frames.begin() + item.start + clip_frames);

    ClipEval out;
    out.gen = loss_gen(pred, truth);
    out.mot = loss_mot(pred, truth);
    if (want_grads) {
        std::vector<std::vector<double>> d_pred(pred.size());
        loss_total_grad(pred, truth, d_pred);
        // residual gradient equals prediction gradient for frames >= 1
        out.grads = zero_grads(cfg);
        lstm_backward(weights, cache, d_pred, out.grads);
    }
    return out;
}

BatchStats window_stats(const std::vector<BatchItem>& batch, int clip_frames) {
    std::vector<std::vector<std::vector<double>>> windows;
    windows.reserve(batch.size());
    for (const auto& item : batch) {
        std::vector<std::vector<double>> win(
            item.clip->features.begin() + item.start,
            item.clip->features.begin() + item.start + clip_frames);
        windows.push_back(std::move(win));
    }
    std::vector<const std::vector<std::vector<double>>*> refs;
    refs.reserve(windows.size());
    for (const auto& w : windows) refs.push_back(&w);
    return compute_feature_stats(refs);
}

void validate_batch(const std::vector<BatchItem>& batch, int clip_frames) {
    if (batch.empty()) throw std::runtime_error("empty batch");
    for (const auto& item : batch) {
        if (!item.clip) throw std::runtime_error("null clip in batch");
        if (item.start < 0 ||
            item.start + clip_frames > static_cast<int>(item.clip->features.size()))
            throw std::runtime_error("batch window out of range");
        if (item.clip->features.size() != item.clip->params.size())
            throw std::runtime_error("clip features and params disagree on length");
    }
}

} // namespace

BatchLoss batch_gradients(const DriverWeights& weights, const std::vector<BatchItem>& batch,
                          int clip_frames, uint64_t dropout_seed, DriverGrads& grads,
                          BatchStats* stats_out) {
    validate_batch(batch, clip_frames);
    const auto stats = window_stats(batch, clip_frames);
    if (stats_out) *stats_out = stats;

    const long long b = static_cast<long long>(batch.size());
    std::vector<ClipEval> evals(batch.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < b; ++i) {
        evals[static_cast<size_t>(i)] =
            eval_clip(weights, batch[static_cast<size_t>(i)], clip_frames, stats,
                      derive_seed(dropout_seed, static_cast<uint64_t>(i), 0x6c7374u),
                      /*want_grads=*/true);
    }

    // fixed-order reduction keeps results thread-count independent
    grads = zero_grads(weights.config);
    BatchLoss loss;
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& e : evals) {
        loss.gen += e.gen;
        loss.mot += e.mot;
        accumulate_grads(grads, e.grads, scale);
    }
    loss.gen *= scale;
    loss.mot *= scale;
    loss.total = loss.gen + loss.mot;

    for (const auto& [name, tensor] : grad_tensors(std::as_const(grads), weights.config))
        for (double v : *tensor)
            if (!std::isfinite(v)) throw std::runtime_error("non-finite gradient in " + name);
    return loss;
}

BatchLoss batch_loss(const DriverWeights& weights, const std::vector<BatchItem>& batch,
                     int clip_frames, uint64_t dropout_seed) {
    validate_batch(batch, clip_frames);
    const auto stats = window_stats(batch, clip_frames);
    BatchLoss loss;
    for (size_t i = 0; i < batch.size(); ++i) {
        const auto e = eval_clip(weights, batch[i], clip_frames, stats,
                                 derive_seed(dropout_seed, static_cast<uint64_t>(i), 0x6c7374u),
                                 /*want_grads=*/false);
        loss.gen += e.gen;
        loss.mot += e.mot;
    }
    loss.gen /= static_cast<double>(batch.size());
    loss.mot /= static_cast<double>(batch.size());
    loss.total = loss.gen + loss.mot;
    return loss;
}

AdamState init_adam_state(const DriverWeights& weights) {
    AdamState state;
    for (const auto& [name, tensor] : weight_tensors(weights)) {
        state.m.emplace_back(tensor->size(), 0.0);
        state.v.emplace_back(tensor->size(), 0.0);
    }
    return state;
}

void adamw_step(DriverWeights& weights, const DriverGrads& grads, AdamState& state, double lr,
                double weight_decay, double beta1, double beta2, double eps) {
    auto tensors = weight_tensors(weights);
    auto gtensors = grad_tensors(grads, weights.config);
    if (tensors.size() != state.m.size()) throw std::runtime_error("optimizer state mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    for (size_t ti = 0; ti < tensors.size(); ++ti) {
        auto& w = *tensors[ti].second;
        const auto& g = *gtensors[ti].second;
        auto& m = state.m[ti];
        auto& v = state.v[ti];
        if (w.size() != g.size()) throw std::runtime_error("gradient shape mismatch");
        for (size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps) + lr * weight_decay * w[i];
        }
    }
}

double cosine_lr(long long step, long long total_steps, double lr_max, double lr_min) {
    if (total_steps < 1) throw std::runtime_error("total steps must be positive");
    if (step < 0 || step > total_steps) throw std::runtime_error("step out of schedule range");
    const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b) {
    // splitmix64 over the combined key
    uint64_t x = base ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xBF58476D1CE4E5B9ULL);
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

TrainResult train(const std::vector<TrainClip>& dataset, const DriverConfig& driver_config,
                  const TrainConfig& train_config, const SnapshotFn& on_snapshot) {
    driver_config.validate();
    train_config.validate();
    if (dataset.empty()) throw std::runtime_error("empty dataset");
    for (size_t i = 0; i < dataset.size(); ++i) {
        if (static_cast<int>(dataset[i].features.size()) < train_config.clip_frames)
            throw std::runtime_error("clip " + std::to_string(i) + " shorter than window");
        if (dataset[i].features.size() != dataset[i].params.size())
            throw std::runtime_error("clip " + std::to_string(i) + " features/params mismatch");
        if (driver_config.attitude_dim > 0 &&
            (dataset[i].attitude < 0 || dataset[i].attitude >= driver_config.attitude_dim))
            throw std::runtime_error("clip " + std::to_string(i) + " has no valid attitude");
    }

    TrainResult result;
    result.weights = init_weights(driver_config, train_config.seed);
    AdamState adam = init_adam_state(result.weights);
    std::mt19937_64 sampler(derive_seed(train_config.seed, 0x73616d70u, 0));
    std::uniform_int_distribution<size_t> clip_dist(0, dataset.size() - 1);

    result.history.reserve(static_cast<size_t>(train_config.steps));
    for (int step = 0; step < train_config.steps; ++step) {
        std::vector<BatchItem> batch(static_cast<size_t>(train_config.batch_size));
        for (auto& item : batch) {
            const size_t ci = clip_dist(sampler);
            item.clip = &dataset[ci];
            const int slack =
                static_cast<int>(dataset[ci].features.size()) - train_config.clip_frames;
            std::uniform_int_distribution<int> start_dist(0, slack);
            item.start = start_dist(sampler);
        }

        DriverGrads grads;
        BatchStats stats;
        const uint64_t dropout_seed =
            derive_seed(train_config.seed, static_cast<uint64_t>(step), 0x64726f70u);
        const BatchLoss loss = batch_gradients(result.weights, batch, train_config.clip_frames,
                                               dropout_seed, grads, &stats);
        update_running_stats(result.weights.bn, stats);

        const double lr =
            cosine_lr(step, train_config.steps, train_config.lr_max, train_config.lr_min);
        adamw_step(result.weights, grads, adam, lr, train_config.weight_decay,
                   train_config.beta1, train_config.beta2, train_config.eps);

        result.history.push_back({step, lr, loss.gen, loss.mot, loss.total});
        if (on_snapshot && (step + 1) % train_config.snapshot_interval == 0 &&
            step + 1 < train_config.steps)
            on_snapshot(step + 1, result.weights);
    }
    if (on_snapshot && train_config.steps > 0) on_snapshot(train_config.steps, result.weights);
    return result;
}

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.imbue(std::locale::classic());
    out.precision(12);
    out << "step,lr,loss_gen,loss_mot,loss_total\n";
    for (const auto& r : history)
        out << r.step << "," << r.lr << "," << r.gen << "," << r.mot << "," << r.total << "\n";
}

double smoothed_loss(const std::vector<LossRecord>& history, size_t window, bool from_start) {
    if (history.empty()) throw std::runtime_error("empty loss history");
    const size_t n = std::min(window, history.size());
    double acc = 0.0;
    if (from_start) {
        for (size_t i = 0; i < n; ++i) acc += history[i].total;
    } else {
        for (size_t i = history.size() - n; i < history.size(); ++i) acc += history[i].total;
    }
    return acc / static_cast<double>(n);
}

} // namespace convhead
