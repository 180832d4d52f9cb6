// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace convhead {

// RGB image, row-major, values in [0,1]. Channel order is interleaved
// (r,g,b) per pixel.
struct Frame {
    int height = 0;
    int width = 0;
    std::vector<float> pixels; // height*width*3

    Frame() = default;
    Frame(int h, int w, float fill = 0.0f)
        : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, fill) {}

    float& at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    size_t size() const { return pixels.size(); }
};

// Soft mask in [0,1]; 1 marks background.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<float> values; // height*width

    Mask() = default;
    Mask(int h, int w, float fill = 0.0f)
        : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

    float& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }
};

// 8-bit PNG I/O. Frames are written as RGB, masks as grayscale.
// Values are clamped to [0,1] and quantized with round(v*255).
void write_png(const std::string& path, const Frame& frame);
void write_png(const std::string& path, const Mask& mask);
Frame read_png_frame(const std::string& path);   // accepts RGB, RGBA or gray
Mask read_png_mask(const std::string& path);     // accepts gray or RGB (first channel)

// Frame directory convention: zero-padded %06d.png starting at 000000,
// plus manifest.json holding fps, frame count and the reference path.
struct FrameDirManifest {
    double fps = 0.0;
    int frame_count = 0;
    std::string reference; // may be empty
};

std::string frame_filename(int index);
void write_frame_dir(const std::string& dir, const std::vector<Frame>& frames,
                     const FrameDirManifest& manifest);
std::vector<Frame> read_frame_dir(const std::string& dir, FrameDirManifest* manifest = nullptr);
FrameDirManifest read_manifest(const std::string& dir);

} // namespace convhead
