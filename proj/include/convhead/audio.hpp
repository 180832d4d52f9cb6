// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace convhead {

// Mono waveform, amplitudes nominally in [-1,1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// 16-bit little-endian mono WAV with the canonical 44-byte header.
AudioClip read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioClip& clip);

// Raw f32 little-endian samples; the sample rate comes from the caller.
AudioClip read_raw_f32(const std::string& path, int sample_rate);

} // namespace convhead
