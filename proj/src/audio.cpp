// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace convhead {

namespace {

void put_u32(std::ofstream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void put_u16(std::ofstream& out, uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

} // namespace

AudioClip read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open wav: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 44) throw std::runtime_error("wav too short: " + path);
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0 ||
        std::memcmp(bytes.data() + 12, "fmt ", 4) != 0 || std::memcmp(bytes.data() + 36, "data", 4) != 0)
        throw std::runtime_error("unsupported wav layout (expect canonical 44-byte header): " + path);

    const uint32_t fmt_size = get_u32(bytes.data() + 16);
    const uint16_t format = get_u16(bytes.data() + 20);
    const uint16_t channels = get_u16(bytes.data() + 22);
    const uint32_t rate = get_u32(bytes.data() + 24);
    const uint16_t bits = get_u16(bytes.data() + 34);
    if (fmt_size != 16 || format != 1 || channels != 1 || bits != 16)
        throw std::runtime_error("unsupported wav format (need 16-bit PCM mono): " + path);

    const uint32_t data_size = get_u32(bytes.data() + 40);
    if (44 + static_cast<size_t>(data_size) > bytes.size())
        throw std::runtime_error("truncated wav data: " + path);

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    const size_t n = data_size / 2;
    clip.samples.resize(n);
    // symmetric 32767 scale so write(read(x)) restores the exact samples
    for (size_t i = 0; i < n; ++i) {
        const int16_t s = static_cast<int16_t>(get_u16(bytes.data() + 44 + 2 * i));
        clip.samples[i] = static_cast<double>(s) / 32767.0;
    }
    return clip;
}

void write_wav(const std::string& path, const AudioClip& clip) {
    if (clip.sample_rate <= 0) throw std::runtime_error("invalid sample rate");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);

    const uint32_t data_size = static_cast<uint32_t>(clip.samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(out, 16);
    put_u16(out, 1); // PCM
    put_u16(out, 1); // mono
    put_u32(out, static_cast<uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<uint32_t>(clip.sample_rate) * 2);
    put_u16(out, 2);  // block align
    put_u16(out, 16); // bits
    out.write("data", 4);
    put_u32(out, data_size);
    for (double s : clip.samples) {
        const double c = std::clamp(s, -1.0, 1.0);
        const int16_t q = static_cast<int16_t>(std::lround(c * 32767.0));
        put_u16(out, static_cast<uint16_t>(q));
    }
}

AudioClip read_raw_f32(const std::string& path, int sample_rate) {
    if (sample_rate <= 0) throw std::runtime_error("invalid sample rate");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open raw audio: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() % 4 != 0) throw std::runtime_error("raw f32 size not a multiple of 4: " + path);
    AudioClip clip;
    clip.sample_rate = sample_rate;
    const size_t n = bytes.size() / 4;
    clip.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        float f;
        std::memcpy(&f, bytes.data() + 4 * i, 4);
        clip.samples[i] = static_cast<double>(f);
    }
    return clip;
}

} // namespace convhead
