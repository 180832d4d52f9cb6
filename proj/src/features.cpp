// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/features.hpp"

#include <cmath>
#include <stdexcept>

#include "convhead/dsp.hpp"

namespace convhead {

std::vector<std::vector<double>> frame_signal(const AudioClip& clip, double fps,
                                              double window_seconds) {
    if (clip.samples.empty()) throw std::runtime_error("empty audio");
    if (!(fps > 0.0)) throw std::runtime_error("invalid fps");
    if (clip.sample_rate <= 0) throw std::runtime_error("invalid sample rate");

    const double sr = static_cast<double>(clip.sample_rate);
    const double hop_seconds = 1.0 / fps;
    const double win_seconds = std::max(window_seconds, hop_seconds);
    size_t window = static_cast<size_t>(std::llround(win_seconds * sr));
    if (window < 2) window = 2;

    const size_t n_blocks = static_cast<size_t>(std::floor(clip.duration_seconds() * fps));
    const long long n = static_cast<long long>(clip.samples.size());

    std::vector<std::vector<double>> blocks(n_blocks);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n_blocks); ++i) {
        const long long center = static_cast<long long>(std::llround(static_cast<double>(i) * sr / fps));
        const long long start = center - static_cast<long long>(window) / 2;
        std::vector<double> block(window, 0.0);
        for (size_t k = 0; k < window; ++k) {
            const long long idx = start + static_cast<long long>(k);
            if (idx >= 0 && idx < n) block[k] = clip.samples[static_cast<size_t>(idx)];
        }
        blocks[static_cast<size_t>(i)] = std::move(block);
    }
    return blocks;
}

std::vector<double> mfcc_frame(const std::vector<double>& block, int sample_rate, int n_coeffs) {
    if (block.size() < 2) throw std::runtime_error("block too short for mfcc");
    if (n_coeffs > kMelFilters) throw std::runtime_error("too many mfcc coefficients");
    if (sample_rate <= 0) throw std::runtime_error("invalid sample rate");

    const auto window = dsp::hann_window(block.size());
    std::vector<double> windowed(block.size());
    for (size_t i = 0; i < block.size(); ++i) windowed[i] = block[i] * window[i];

    const size_t fft_size = dsp::next_pow2(block.size());
    const auto power = dsp::power_spectrum(windowed, fft_size);
    const auto bank = dsp::mel_filterbank(kMelFilters, fft_size, static_cast<double>(sample_rate));

    std::vector<double> log_mel(kMelFilters);
    for (int m = 0; m < kMelFilters; ++m) {
        double e = 0.0;
        for (size_t k = 0; k < power.size(); ++k) e += bank[m][k] * power[k];
        log_mel[m] = std::log(std::max(e, kLogFloor));
    }

    const auto dct = dsp::dct_matrix(static_cast<size_t>(n_coeffs), kMelFilters);
    std::vector<double> coeffs(n_coeffs, 0.0);
    for (int j = 0; j < n_coeffs; ++j) {
        double acc = 0.0;
        for (int m = 0; m < kMelFilters; ++m) acc += dct[j][m] * log_mel[m];
        coeffs[j] = acc;
    }
    return coeffs;
}

std::vector<std::vector<double>> delta_sequence(const std::vector<std::vector<double>>& coeffs,
                                                int order) {
    if (order != 1 && order != 2) throw std::runtime_error("delta order must be 1 or 2");
    if (coeffs.empty()) return {};
    if (order == 2) return delta_sequence(delta_sequence(coeffs, 1), 1);

    const long long t_count = static_cast<long long>(coeffs.size());
    const size_t dim = coeffs[0].size();
    // d[t] = sum_{n=1..2} n*(x[t+n] - x[t-n]) / (2*sum n^2), edges replicated
    constexpr double denom = 2.0 * (1.0 + 4.0);
    std::vector<std::vector<double>> delta(coeffs.size(), std::vector<double>(dim, 0.0));
#pragma omp parallel for schedule(static)
    for (long long t = 0; t < t_count; ++t) {
        auto clamp_t = [&](long long v) {
            return static_cast<size_t>(std::min(std::max(v, 0LL), t_count - 1));
        };
        for (size_t d = 0; d < dim; ++d) {
            double acc = 0.0;
            for (long long n = 1; n <= 2; ++n)
                acc += static_cast<double>(n) *
                       (coeffs[clamp_t(t + n)][d] - coeffs[clamp_t(t - n)][d]);
            delta[static_cast<size_t>(t)][d] = acc / denom;
        }
    }
    return delta;
}

ScalarFeatures scalar_features(const std::vector<double>& block) {
    if (block.empty()) throw std::runtime_error("empty block");
    ScalarFeatures out;
    double sq = 0.0;
    for (double s : block) sq += s * s;
    out.energy = sq / static_cast<double>(block.size());
    out.loudness = 10.0 * std::log10(out.energy + 1e-10);
    if (block.size() > 1) {
        size_t crossings = 0;
        for (size_t i = 0; i + 1 < block.size(); ++i)
            if (block[i] * block[i + 1] < 0.0) ++crossings;
        out.zcr = static_cast<double>(crossings) / static_cast<double>(block.size() - 1);
    }
    return out;
}

FeatureSequence extract_features(const AudioClip& clip, double fps, double window_seconds) {
    const auto blocks = frame_signal(clip, fps, window_seconds);
    const long long t_count = static_cast<long long>(blocks.size());

    std::vector<std::vector<double>> mfcc(blocks.size());
    std::vector<ScalarFeatures> scalars(blocks.size());
#pragma omp parallel for schedule(static)
    for (long long t = 0; t < t_count; ++t) {
        mfcc[static_cast<size_t>(t)] = mfcc_frame(blocks[static_cast<size_t>(t)], clip.sample_rate);
        scalars[static_cast<size_t>(t)] = scalar_features(blocks[static_cast<size_t>(t)]);
    }

    const auto d1 = delta_sequence(mfcc, 1);
    const auto d2 = delta_sequence(mfcc, 2);

    FeatureSequence seq;
    seq.fps = fps;
    seq.frames.resize(blocks.size());
    for (size_t t = 0; t < blocks.size(); ++t) {
        auto& v = seq.frames[t].values;
        for (int k = 0; k < kMfccCount; ++k) {
            v[k] = mfcc[t][static_cast<size_t>(k)];
            v[kMfccCount + k] = d1[t][static_cast<size_t>(k)];
            v[2 * kMfccCount + k] = d2[t][static_cast<size_t>(k)];
        }
        v[42] = scalars[t].energy;
        v[43] = scalars[t].loudness;
        v[44] = scalars[t].zcr;
    }
    return seq;
}

std::vector<std::vector<double>> feature_matrix(const FeatureSequence& seq) {
    std::vector<std::vector<double>> m(seq.frames.size(), std::vector<double>(kFeatureDim));
    for (size_t t = 0; t < seq.frames.size(); ++t)
        for (int d = 0; d < kFeatureDim; ++d) m[t][d] = seq.frames[t].values[static_cast<size_t>(d)];
    return m;
}

} // namespace convhead
