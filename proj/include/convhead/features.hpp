// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "convhead/audio.hpp"

namespace convhead {

inline constexpr int kMfccCount = 14;
inline constexpr int kMelFilters = 26;
inline constexpr int kFeatureDim = 45; // [mfcc | delta | delta2 | energy | loudness | zcr]
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kDefaultWindowSeconds = 0.025;

// One per-video-frame feature vector, packed as
// [mfcc(14) | mfcc_delta(14) | mfcc_delta2(14) | energy | loudness | zcr].
struct FeatureFrame {
    std::array<double, kFeatureDim> values{};
};

struct FeatureSequence {
    std::vector<FeatureFrame> frames;
    double fps = 0.0;

    size_t size() const { return frames.size(); }
};

struct ScalarFeatures {
    double energy = 0.0;
    double loudness = 0.0;
    double zcr = 0.0;
};

// Splits the clip into one block per video frame. Block i is centered on
// timestamp i/fps and zero-padded at the clip edges; the block count is
// floor(duration * fps). window_seconds shorter than one hop is clamped
// to the hop.
std::vector<std::vector<double>> frame_signal(const AudioClip& clip, double fps,
                                              double window_seconds = kDefaultWindowSeconds);

// First n_coeffs orthonormal DCT-II coefficients of the log mel-filterbank
// energies of the Hann-windowed block (log floored at 1e-10).
std::vector<double> mfcc_frame(const std::vector<double>& block, int sample_rate,
                               int n_coeffs = kMfccCount);

// Regression delta with window +-2 and edge replication; order 2 is the
// delta of the delta.
std::vector<std::vector<double>> delta_sequence(const std::vector<std::vector<double>>& coeffs,
                                                int order);

// energy = mean square, loudness = 10*log10(energy + 1e-10),
// zcr = sign changes / (len - 1).
ScalarFeatures scalar_features(const std::vector<double>& block);

FeatureSequence extract_features(const AudioClip& clip, double fps,
                                 double window_seconds = kDefaultWindowSeconds);

// Feature rows as a dense T x 45 matrix (row-major).
std::vector<std::vector<double>> feature_matrix(const FeatureSequence& seq);

} // namespace convhead
