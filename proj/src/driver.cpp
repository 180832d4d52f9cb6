// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/driver.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace convhead {

namespace {

constexpr double kBnEps = 1e-5;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y += W x, W row-major rows x cols
void matvec_add(const double* w, const double* x, int rows, int cols, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* row = w + static_cast<size_t>(r) * cols;
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

// Householder QR of a square matrix; returns Q with positive R diagonal.
std::vector<double> orthogonal_from(std::vector<double> a, int n) {
    std::vector<std::vector<double>> reflectors;
    reflectors.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        std::vector<double> v(static_cast<size_t>(n), 0.0);
        double norm_sq = 0.0;
        for (int i = k; i < n; ++i) {
            v[static_cast<size_t>(i)] = a[static_cast<size_t>(i) * n + k];
            norm_sq += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
        }
        const double norm = std::sqrt(norm_sq);
        if (norm > 0.0) {
            const double alpha = v[static_cast<size_t>(k)] >= 0.0 ? -norm : norm;
            v[static_cast<size_t>(k)] -= alpha;
            double v_norm = 0.0;
            for (int i = k; i < n; ++i) v_norm += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
            v_norm = std::sqrt(v_norm);
            if (v_norm > 0.0) {
                for (int i = k; i < n; ++i) v[static_cast<size_t>(i)] /= v_norm;
                for (int j = k; j < n; ++j) {
                    double s = 0.0;
                    for (int i = k; i < n; ++i) s += v[static_cast<size_t>(i)] * a[static_cast<size_t>(i) * n + j];
                    for (int i = k; i < n; ++i) a[static_cast<size_t>(i) * n + j] -= 2.0 * s * v[static_cast<size_t>(i)];
                }
            }
        }
        reflectors.push_back(std::move(v));
    }
    // a now holds R; build Q = H_0 H_1 ... H_{n-1}
    std::vector<double> q(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) q[static_cast<size_t>(i) * n + i] = 1.0;
    for (int k = n - 1; k >= 0; --k) {
        const auto& v = reflectors[static_cast<size_t>(k)];
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = k; i < n; ++i) s += v[static_cast<size_t>(i)] * q[static_cast<size_t>(i) * n + j];
            for (int i = k; i < n; ++i) q[static_cast<size_t>(i) * n + j] -= 2.0 * s * v[static_cast<size_t>(i)];
        }
    }
    for (int j = 0; j < n; ++j) {
        if (a[static_cast<size_t>(j) * n + j] < 0.0)
            for (int i = 0; i < n; ++i) q[static_cast<size_t>(i) * n + j] = -q[static_cast<size_t>(i) * n + j];
    }
    return q;
}

std::vector<double> xavier_uniform(std::mt19937_64& rng, int fan_in, int fan_out, size_t count) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> out(count);
    for (auto& v : out) v = dist(rng);
    return out;
}

std::vector<double> pre_scale_norm_row(const std::vector<double>& x,
                                       const std::vector<double>& mean,
                                       const std::vector<double>& var) {
    std::vector<double> out(x.size());
    for (size_t d = 0; d < x.size(); ++d)
        out[d] = (x[d] - mean[d]) / std::sqrt(var[d] + kBnEps);
    return out;
}

} // namespace

void DriverConfig::validate() const {
    if (feature_dim < 1) throw std::runtime_error("feature dim must be positive");
    if (attitude_dim < 0) throw std::runtime_error("attitude dim must be non-negative");
    if (hidden_dim < 1) throw std::runtime_error("hidden dim must be positive");
    if (num_layers < 1) throw std::runtime_error("need at least one layer");
    if (output_dim < 1) throw std::runtime_error("output dim must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw std::runtime_error("dropout rate must be in [0,1)");
}

bool DriverConfig::same_shape(const DriverConfig& other) const {
    return feature_dim == other.feature_dim && attitude_dim == other.attitude_dim &&
           hidden_dim == other.hidden_dim && num_layers == other.num_layers &&
           output_dim == other.output_dim;
}

DriverWeights allocate_weights(const DriverConfig& config) {
    config.validate();
    DriverWeights w;
    w.config = config;
    const int h = config.hidden_dim;
    const int f = config.feature_dim;
    w.bn.gamma.assign(static_cast<size_t>(f), 1.0);
    w.bn.beta.assign(static_cast<size_t>(f), 0.0);
    w.bn.running_mean.assign(static_cast<size_t>(f), 0.0);
    w.bn.running_var.assign(static_cast<size_t>(f), 1.0);
    w.layers.resize(static_cast<size_t>(config.num_layers));
    for (int l = 0; l < config.num_layers; ++l) {
        const int d = l == 0 ? config.input_dim() : h;
        auto& layer = w.layers[static_cast<size_t>(l)];
        layer.w_in.assign(static_cast<size_t>(4 * h) * d, 0.0);
        layer.w_rec.assign(static_cast<size_t>(4 * h) * h, 0.0);
        layer.bias.assign(static_cast<size_t>(4 * h), 0.0);
    }
    w.w_out.assign(static_cast<size_t>(config.output_dim) * h, 0.0);
    w.b_out.assign(static_cast<size_t>(config.output_dim), 0.0);
    return w;
}

DriverWeights init_weights(const DriverConfig& config, uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    DriverWeights w;
    w.config = config;
    const int h = config.hidden_dim;
    const int f = config.feature_dim;
    w.bn.gamma.assign(static_cast<size_t>(f), 1.0);
    w.bn.beta.assign(static_cast<size_t>(f), 0.0);
    w.bn.running_mean.assign(static_cast<size_t>(f), 0.0);
    w.bn.running_var.assign(static_cast<size_t>(f), 1.0);

    w.layers.resize(static_cast<size_t>(config.num_layers));
    for (int l = 0; l < config.num_layers; ++l) {
        const int d = l == 0 ? config.input_dim() : h;
        auto& layer = w.layers[static_cast<size_t>(l)];
        layer.w_in = xavier_uniform(rng, d, 4 * h, static_cast<size_t>(4 * h) * d);
        layer.w_rec.resize(static_cast<size_t>(4 * h) * h);
        for (int gate = 0; gate < 4; ++gate) {
            std::vector<double> m(static_cast<size_t>(h) * h);
            for (auto& v : m) v = gauss(rng);
            const auto q = orthogonal_from(std::move(m), h);
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < h; ++c)
                    layer.w_rec[(static_cast<size_t>(gate) * h + r) * h + c] =
                        q[static_cast<size_t>(r) * h + c];
        }
        layer.bias.assign(static_cast<size_t>(4 * h), 0.0);
        for (int i = 0; i < h; ++i) layer.bias[static_cast<size_t>(h + i)] = 1.0; // forget gate
    }

    w.w_out = xavier_uniform(rng, h, config.output_dim,
                             static_cast<size_t>(config.output_dim) * h);
    w.b_out.assign(static_cast<size_t>(config.output_dim), 0.0);
    return w;
}

BatchStats compute_feature_stats(
    const std::vector<const std::vector<std::vector<double>>*>& batch) {
    if (batch.empty()) throw std::runtime_error("empty batch");
    size_t dim = 0;
    size_t n = 0;
    for (const auto* m : batch) {
        for (const auto& row : *m) {
            if (dim == 0) dim = row.size();
            if (row.size() != dim) throw std::runtime_error("ragged feature rows");
            ++n;
        }
    }
    if (n == 0) throw std::runtime_error("no frames in batch");

    BatchStats stats;
    stats.mean.assign(dim, 0.0);
    stats.var.assign(dim, 0.0);
    for (const auto* m : batch)
        for (const auto& row : *m)
            for (size_t d = 0; d < dim; ++d) stats.mean[d] += row[d];
    for (size_t d = 0; d < dim; ++d) stats.mean[d] /= static_cast<double>(n);
    for (const auto* m : batch)
        for (const auto& row : *m)
            for (size_t d = 0; d < dim; ++d) {
                const double c = row[d] - stats.mean[d];
                stats.var[d] += c * c;
            }
    for (size_t d = 0; d < dim; ++d) stats.var[d] /= static_cast<double>(n);
    return stats;
}

std::vector<std::vector<double>> apply_feature_norm(const std::vector<std::vector<double>>& x,
                                                    const std::vector<double>& mean,
                                                    const std::vector<double>& var,
                                                    const std::vector<double>& gamma,
                                                    const std::vector<double>& beta) {
    std::vector<std::vector<double>> out(x.size());
    for (size_t t = 0; t < x.size(); ++t) {
        out[t].resize(x[t].size());
        for (size_t d = 0; d < x[t].size(); ++d)
            out[t][d] = (x[t][d] - mean[d]) / std::sqrt(var[d] + kBnEps) * gamma[d] + beta[d];
    }
    return out;
}

void update_running_stats(BatchNormState& bn, const BatchStats& stats, double momentum) {
    for (size_t d = 0; d < bn.running_mean.size(); ++d) {
        bn.running_mean[d] = (1.0 - momentum) * bn.running_mean[d] + momentum * stats.mean[d];
        bn.running_var[d] = (1.0 - momentum) * bn.running_var[d] + momentum * stats.var[d];
    }
}

std::vector<std::vector<double>> normalize_input(const std::vector<std::vector<double>>& x,
                                                 BatchNormState& bn, Mode mode) {
    if (mode == Mode::Train) {
        const auto stats = compute_feature_stats({&x});
        auto out = apply_feature_norm(x, stats.mean, stats.var, bn.gamma, bn.beta);
        update_running_stats(bn, stats);
        return out;
    }
    return apply_feature_norm(x, bn.running_mean, bn.running_var, bn.gamma, bn.beta);
}

std::vector<std::vector<double>> lstm_forward_cached(
    const DriverWeights& weights, const std::vector<std::vector<double>>& normed,
    bool use_dropout, uint64_t dropout_seed,
    const std::optional<AttitudeCondition>& attitude, LstmCache* cache) {
    const auto& cfg = weights.config;
    const int h = cfg.hidden_dim;
    const int t_count = static_cast<int>(normed.size());
    if (t_count == 0) throw std::runtime_error("empty feature sequence");
    for (const auto& row : normed)
        if (static_cast<int>(row.size()) != cfg.feature_dim)
            throw std::runtime_error("feature dimension mismatch");
    if (cfg.attitude_dim > 0) {
        if (!attitude) throw std::runtime_error("attitude condition required");
        if (attitude->category < 0 || attitude->category >= cfg.attitude_dim)
            throw std::runtime_error("attitude category out of range");
    } else if (attitude) {
        throw std::runtime_error("attitude given but config has no attitude slots");
    }

    if (cache) {
        cache->frames = t_count;
        cache->norm_x = normed;
        cache->inputs.assign(static_cast<size_t>(cfg.num_layers), {});
        auto init_layer_vec = [&](std::vector<std::vector<double>>& v) {
            v.assign(static_cast<size_t>(cfg.num_layers),
                     std::vector<double>(static_cast<size_t>(t_count) * h, 0.0));
        };
        init_layer_vec(cache->gate_i);
        init_layer_vec(cache->gate_f);
        init_layer_vec(cache->gate_g);
        init_layer_vec(cache->gate_o);
        init_layer_vec(cache->cell);
        init_layer_vec(cache->tanh_cell);
        init_layer_vec(cache->hidden);
        cache->dropout_mask.assign(static_cast<size_t>(std::max(cfg.num_layers - 1, 0)),
                                   std::vector<double>(static_cast<size_t>(t_count) * h, 1.0));
    }

    // dropout masks between layers, inverted scaling
    std::vector<std::vector<double>> masks;
    if (use_dropout && cfg.dropout_rate > 0.0 && cfg.num_layers > 1) {
        std::mt19937_64 rng(dropout_seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double keep = 1.0 - cfg.dropout_rate;
        masks.assign(static_cast<size_t>(cfg.num_layers - 1),
                     std::vector<double>(static_cast<size_t>(t_count) * h, 1.0));
        for (auto& boundary : masks)
            for (auto& m : boundary) m = unif(rng) < keep ? 1.0 / keep : 0.0;
        if (cache) cache->dropout_mask = masks;
    }

    // layer 0 input: scale/shift the normalized features, append attitude one-hot
    const int d0 = cfg.input_dim();
    std::vector<double> current(static_cast<size_t>(t_count) * d0, 0.0);
    for (int t = 0; t < t_count; ++t) {
        double* row = current.data() + static_cast<size_t>(t) * d0;
        for (int d = 0; d < cfg.feature_dim; ++d)
            row[d] = normed[static_cast<size_t>(t)][static_cast<size_t>(d)] *
                         weights.bn.gamma[static_cast<size_t>(d)] +
                     weights.bn.beta[static_cast<size_t>(d)];
        if (cfg.attitude_dim > 0) row[cfg.feature_dim + attitude->category] = 1.0;
    }

    std::vector<double> z(static_cast<size_t>(4) * h);
    std::vector<double> h_prev(static_cast<size_t>(h));
    std::vector<double> c_prev(static_cast<size_t>(h));

    for (int l = 0; l < cfg.num_layers; ++l) {
        const int d = l == 0 ? d0 : h;
        const auto& layer = weights.layers[static_cast<size_t>(l)];
        if (cache) cache->inputs[static_cast<size_t>(l)] = current;

        std::vector<double> next(static_cast<size_t>(t_count) * h, 0.0);
        std::fill(h_prev.begin(), h_prev.end(), 0.0);
        std::fill(c_prev.begin(), c_prev.end(), 0.0);

        for (int t = 0; t < t_count; ++t) {
            const double* in = current.data() + static_cast<size_t>(t) * d;
            for (int k = 0; k < 4 * h; ++k) z[static_cast<size_t>(k)] = layer.bias[static_cast<size_t>(k)];
            matvec_add(layer.w_in.data(), in, 4 * h, d, z.data());
            matvec_add(layer.w_rec.data(), h_prev.data(), 4 * h, h, z.data());
            for (int k = 0; k < h; ++k) {
                const double gi = sigmoid(z[static_cast<size_t>(k)]);
                const double gf = sigmoid(z[static_cast<size_t>(h + k)]);
                const double gg = std::tanh(z[static_cast<size_t>(2 * h + k)]);
                const double go = sigmoid(z[static_cast<size_t>(3 * h + k)]);
                const double c = gf * c_prev[static_cast<size_t>(k)] + gi * gg;
                const double tc = std::tanh(c);
                const double hidden = go * tc;
                if (cache) {
                    const size_t idx = static_cast<size_t>(t) * h + static_cast<size_t>(k);
                    cache->gate_i[static_cast<size_t>(l)][idx] = gi;
                    cache->gate_f[static_cast<size_t>(l)][idx] = gf;
                    cache->gate_g[static_cast<size_t>(l)][idx] = gg;
                    cache->gate_o[static_cast<size_t>(l)][idx] = go;
                    cache->cell[static_cast<size_t>(l)][idx] = c;
                    cache->tanh_cell[static_cast<size_t>(l)][idx] = tc;
                    cache->hidden[static_cast<size_t>(l)][idx] = hidden;
                }
                c_prev[static_cast<size_t>(k)] = c;
                h_prev[static_cast<size_t>(k)] = hidden;
                next[static_cast<size_t>(t) * h + static_cast<size_t>(k)] = hidden;
            }
        }

        if (l + 1 < cfg.num_layers && !masks.empty()) {
            const auto& mask = masks[static_cast<size_t>(l)];
            for (size_t i = 0; i < next.size(); ++i) next[i] *= mask[i];
        }
        current = std::move(next);
    }

    // output projection; frame 0 pinned to the reference
    std::vector<std::vector<double>> residuals(static_cast<size_t>(t_count),
                                               std::vector<double>(static_cast<size_t>(cfg.output_dim), 0.0));
    for (int t = 1; t < t_count; ++t) {
        const double* top = current.data() + static_cast<size_t>(t) * h;
        auto& row = residuals[static_cast<size_t>(t)];
        for (int o = 0; o < cfg.output_dim; ++o) row[static_cast<size_t>(o)] = weights.b_out[static_cast<size_t>(o)];
        matvec_add(weights.w_out.data(), top, cfg.output_dim, h, row.data());
        for (double v : row)
            if (!std::isfinite(v)) throw std::runtime_error("numerical blowup");
    }
    return residuals;
}

std::vector<std::vector<double>> forward_residuals(
    const DriverWeights& weights, const std::vector<std::vector<double>>& features,
    Mode mode, uint64_t dropout_seed, const std::optional<AttitudeCondition>& attitude) {
    std::vector<std::vector<double>> normed(features.size());
    if (mode == Mode::Train) {
        const auto stats = compute_feature_stats({&features});
        for (size_t t = 0; t < features.size(); ++t)
            normed[t] = pre_scale_norm_row(features[t], stats.mean, stats.var);
    } else {
        for (size_t t = 0; t < features.size(); ++t)
            normed[t] = pre_scale_norm_row(features[t], weights.bn.running_mean,
                                           weights.bn.running_var);
    }
    return lstm_forward_cached(weights, normed, mode == Mode::Train, dropout_seed, attitude,
                               nullptr);
}

ParamSequence forward(const DriverWeights& weights, const FeatureSequence& features,
                      const HeadParams& reference, Mode mode, uint64_t dropout_seed,
                      const std::optional<AttitudeCondition>& attitude) {
    return apply_residual(reference, forward_residuals(weights, feature_matrix(features), mode,
                                                       dropout_seed, attitude));
}

DriverGrads zero_grads(const DriverConfig& config) {
    DriverGrads g;
    const int h = config.hidden_dim;
    g.bn_gamma.assign(static_cast<size_t>(config.feature_dim), 0.0);
    g.bn_beta.assign(static_cast<size_t>(config.feature_dim), 0.0);
    g.layers.resize(static_cast<size_t>(config.num_layers));
    for (int l = 0; l < config.num_layers; ++l) {
        const int d = l == 0 ? config.input_dim() : h;
        g.layers[static_cast<size_t>(l)].w_in.assign(static_cast<size_t>(4 * h) * d, 0.0);
        g.layers[static_cast<size_t>(l)].w_rec.assign(static_cast<size_t>(4 * h) * h, 0.0);
        g.layers[static_cast<size_t>(l)].bias.assign(static_cast<size_t>(4 * h), 0.0);
    }
    g.w_out.assign(static_cast<size_t>(config.output_dim) * h, 0.0);
    g.b_out.assign(static_cast<size_t>(config.output_dim), 0.0);
    return g;
}

void accumulate_grads(DriverGrads& into, const DriverGrads& from, double scale) {
    auto add = [scale](std::vector<double>& a, const std::vector<double>& b) {
        for (size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
    };
    add(into.bn_gamma, from.bn_gamma);
    add(into.bn_beta, from.bn_beta);
    for (size_t l = 0; l < into.layers.size(); ++l) {
        add(into.layers[l].w_in, from.layers[l].w_in);
        add(into.layers[l].w_rec, from.layers[l].w_rec);
        add(into.layers[l].bias, from.layers[l].bias);
    }
    add(into.w_out, from.w_out);
    add(into.b_out, from.b_out);
}

void lstm_backward(const DriverWeights& weights, const LstmCache& cache,
                   const std::vector<std::vector<double>>& d_residuals, DriverGrads& grads) {
    const auto& cfg = weights.config;
    const int h = cfg.hidden_dim;
    const int t_count = cache.frames;
    if (static_cast<int>(d_residuals.size()) != t_count)
        throw std::runtime_error("residual gradient length mismatch");

    // output projection: d_hidden on the top layer
    std::vector<double> d_above(static_cast<size_t>(t_count) * h, 0.0);
    const auto& top_hidden = cache.hidden[static_cast<size_t>(cfg.num_layers - 1)];
    const std::vector<double>* top_in = &top_hidden;
    // the top layer's recorded hidden is pre-dropout; output consumes it directly
    for (int t = 1; t < t_count; ++t) {
        const auto& dr = d_residuals[static_cast<size_t>(t)];
        const double* hid = top_in->data() + static_cast<size_t>(t) * h;
        for (int o = 0; o < cfg.output_dim; ++o) {
            const double g = dr[static_cast<size_t>(o)];
            if (g == 0.0) continue;
            grads.b_out[static_cast<size_t>(o)] += g;
            double* wrow = grads.w_out.data() + static_cast<size_t>(o) * h;
            const double* wsrc = weights.w_out.data() + static_cast<size_t>(o) * h;
            double* dh = d_above.data() + static_cast<size_t>(t) * h;
            for (int k = 0; k < h; ++k) {
                wrow[k] += g * hid[k];
                dh[k] += g * wsrc[k];
            }
        }
    }

    std::vector<double> d_below;
    std::vector<double> dz(static_cast<size_t>(4) * h);
    for (int l = cfg.num_layers - 1; l >= 0; --l) {
        const int d = l == 0 ? cfg.input_dim() : h;
        const auto& layer = weights.layers[static_cast<size_t>(l)];
        auto& lg = grads.layers[static_cast<size_t>(l)];
        const auto& gi = cache.gate_i[static_cast<size_t>(l)];
        const auto& gf = cache.gate_f[static_cast<size_t>(l)];
        const auto& gg = cache.gate_g[static_cast<size_t>(l)];
        const auto& go = cache.gate_o[static_cast<size_t>(l)];
        const auto& cell = cache.cell[static_cast<size_t>(l)];
        const auto& tc = cache.tanh_cell[static_cast<size_t>(l)];
        const auto& inputs = cache.inputs[static_cast<size_t>(l)];

        d_below.assign(static_cast<size_t>(t_count) * d, 0.0);
        std::vector<double> dh_next(static_cast<size_t>(h), 0.0);
        std::vector<double> dc_next(static_cast<size_t>(h), 0.0);

        for (int t = t_count - 1; t >= 0; --t) {
            const size_t base = static_cast<size_t>(t) * h;
            for (int k = 0; k < h; ++k) {
                const size_t idx = base + static_cast<size_t>(k);
                const double dh = d_above[idx] + dh_next[static_cast<size_t>(k)];
                const double dtc = dh * go[idx];
                double dc = dtc * (1.0 - tc[idx] * tc[idx]) + dc_next[static_cast<size_t>(k)];
                const double do_ = dh * tc[idx];
                const double c_prev = t > 0 ? cell[idx - static_cast<size_t>(h)] : 0.0;
                const double di = dc * gg[idx];
                const double df = dc * c_prev;
                const double dg = dc * gi[idx];
                dz[static_cast<size_t>(k)] = di * gi[idx] * (1.0 - gi[idx]);
                dz[static_cast<size_t>(h + k)] = df * gf[idx] * (1.0 - gf[idx]);
                dz[static_cast<size_t>(2 * h + k)] = dg * (1.0 - gg[idx] * gg[idx]);
                dz[static_cast<size_t>(3 * h + k)] = do_ * go[idx] * (1.0 - go[idx]);
                dc_next[static_cast<size_t>(k)] = dc * gf[idx];
            }

            const double* in = inputs.data() + static_cast<size_t>(t) * d;
            const double* h_prev =
                t > 0 ? cache.hidden[static_cast<size_t>(l)].data() + static_cast<size_t>(t - 1) * h
                      : nullptr;
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            double* din = d_below.data() + static_cast<size_t>(t) * d;
            for (int r = 0; r < 4 * h; ++r) {
                const double g = dz[static_cast<size_t>(r)];
                if (g == 0.0) continue;
                lg.bias[static_cast<size_t>(r)] += g;
                double* wi_row = lg.w_in.data() + static_cast<size_t>(r) * d;
                const double* wi_src = layer.w_in.data() + static_cast<size_t>(r) * d;
                for (int c = 0; c < d; ++c) {
                    wi_row[c] += g * in[c];
                    din[c] += g * wi_src[c];
                }
                double* wr_row = lg.w_rec.data() + static_cast<size_t>(r) * h;
                const double* wr_src = layer.w_rec.data() + static_cast<size_t>(r) * h;
                if (h_prev) {
                    for (int c = 0; c < h; ++c) {
                        wr_row[c] += g * h_prev[c];
                        dh_next[static_cast<size_t>(c)] += g * wr_src[c];
                    }
                } else {
                    for (int c = 0; c < h; ++c) dh_next[static_cast<size_t>(c)] += g * wr_src[c];
                }
            }
        }

        if (l > 0) {
            // route through the dropout on the boundary below
            d_above.assign(static_cast<size_t>(t_count) * h, 0.0);
            const bool has_mask = !cache.dropout_mask.empty();
            for (int t = 0; t < t_count; ++t)
                for (int k = 0; k < h; ++k) {
                    const size_t idx = static_cast<size_t>(t) * h + static_cast<size_t>(k);
                    const double m =
                        has_mask ? cache.dropout_mask[static_cast<size_t>(l - 1)][idx] : 1.0;
                    d_above[idx] = d_below[idx] * m;
                }
        } else {
            // batch-norm scale/shift gradients from the layer-0 input
            for (int t = 0; t < t_count; ++t) {
                const double* din = d_below.data() + static_cast<size_t>(t) * d;
                const auto& nx = cache.norm_x[static_cast<size_t>(t)];
                for (int k = 0; k < cfg.feature_dim; ++k) {
                    grads.bn_gamma[static_cast<size_t>(k)] += din[k] * nx[static_cast<size_t>(k)];
                    grads.bn_beta[static_cast<size_t>(k)] += din[k];
                }
            }
        }
    }
}

std::vector<std::pair<std::string, std::vector<double>*>> weight_tensors(DriverWeights& w) {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    out.emplace_back("bn.gamma", &w.bn.gamma);
    out.emplace_back("bn.beta", &w.bn.beta);
    for (size_t l = 0; l < w.layers.size(); ++l) {
        const std::string prefix = "lstm." + std::to_string(l) + ".";
        out.emplace_back(prefix + "w_in", &w.layers[l].w_in);
        out.emplace_back(prefix + "w_rec", &w.layers[l].w_rec);
        out.emplace_back(prefix + "bias", &w.layers[l].bias);
    }
    out.emplace_back("out.weight", &w.w_out);
    out.emplace_back("out.bias", &w.b_out);
    return out;
}

std::vector<std::pair<std::string, const std::vector<double>*>> weight_tensors(
    const DriverWeights& w) {
    auto mutable_view = weight_tensors(const_cast<DriverWeights&>(w));
    std::vector<std::pair<std::string, const std::vector<double>*>> out;
    out.reserve(mutable_view.size());
    for (auto& [name, vec] : mutable_view) out.emplace_back(name, vec);
    return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> grad_tensors(DriverGrads& g,
                                                                       const DriverConfig& c) {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    out.emplace_back("bn.gamma", &g.bn_gamma);
    out.emplace_back("bn.beta", &g.bn_beta);
    for (int l = 0; l < c.num_layers; ++l) {
        const std::string prefix = "lstm." + std::to_string(l) + ".";
        out.emplace_back(prefix + "w_in", &g.layers[static_cast<size_t>(l)].w_in);
        out.emplace_back(prefix + "w_rec", &g.layers[static_cast<size_t>(l)].w_rec);
        out.emplace_back(prefix + "bias", &g.layers[static_cast<size_t>(l)].bias);
    }
    out.emplace_back("out.weight", &g.w_out);
    out.emplace_back("out.bias", &g.b_out);
    return out;
}

std::vector<std::pair<std::string, const std::vector<double>*>> grad_tensors(
    const DriverGrads& g, const DriverConfig& c) {
    auto mutable_view = grad_tensors(const_cast<DriverGrads&>(g), c);
    std::vector<std::pair<std::string, const std::vector<double>*>> out;
    out.reserve(mutable_view.size());
    for (auto& [name, vec] : mutable_view) out.emplace_back(name, vec);
    return out;
}

} // namespace convhead
