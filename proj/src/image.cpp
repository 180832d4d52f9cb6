// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <png.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace convhead {

namespace {

uint8_t quantize(float v) {
    float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

struct PngWriter {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

void write_png_bytes(const std::string& path, const std::vector<uint8_t>& bytes,
                     int height, int width, int channels) {
    PngWriter w;
    w.fp = std::fopen(path.c_str(), "wb");
    if (!w.fp) throw std::runtime_error("cannot open for writing: " + path);
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw std::runtime_error("png_create_write_struct failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw std::runtime_error("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(w.png))) throw std::runtime_error("png write error: " + path);

    png_init_io(w.png, w.fp);
    int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(w.png, w.info, width, height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<size_t>(y) * width * channels);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

struct PngReader {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

// Reads any 8/16-bit PNG and normalizes it to 8-bit RGB bytes.
void read_png_rgb(const std::string& path, std::vector<uint8_t>& out, int& height, int& width) {
    PngReader r;
    r.fp = std::fopen(path.c_str(), "rb");
    if (!r.fp) throw std::runtime_error("cannot open for reading: " + path);
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw std::runtime_error("png_create_read_struct failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw std::runtime_error("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(r.png))) throw std::runtime_error("png read error: " + path);

    png_init_io(r.png, r.fp);
    png_read_info(r.png, r.info);

    png_set_strip_16(r.png);
    png_set_palette_to_rgb(r.png);
    png_set_expand_gray_1_2_4_to_8(r.png);
    png_set_strip_alpha(r.png);
    png_set_gray_to_rgb(r.png);
    png_read_update_info(r.png, r.info);

    height = static_cast<int>(png_get_image_height(r.png, r.info));
    width = static_cast<int>(png_get_image_width(r.png, r.info));
    out.resize(static_cast<size_t>(height) * width * 3);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = out.data() + static_cast<size_t>(y) * width * 3;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
}

} // namespace

void write_png(const std::string& path, const Frame& frame) {
    if (frame.height < 1 || frame.width < 1) throw std::runtime_error("empty frame");
    std::vector<uint8_t> bytes(frame.size());
    for (size_t i = 0; i < frame.size(); ++i) bytes[i] = quantize(frame.pixels[i]);
    write_png_bytes(path, bytes, frame.height, frame.width, 3);
}

void write_png(const std::string& path, const Mask& mask) {
    if (mask.height < 1 || mask.width < 1) throw std::runtime_error("empty mask");
    std::vector<uint8_t> bytes(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) bytes[i] = quantize(mask.values[i]);
    write_png_bytes(path, bytes, mask.height, mask.width, 1);
}

Frame read_png_frame(const std::string& path) {
    std::vector<uint8_t> bytes;
    int h = 0, w = 0;
    read_png_rgb(path, bytes, h, w);
    Frame f(h, w);
    for (size_t i = 0; i < f.size(); ++i) f.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
    return f;
}

Mask read_png_mask(const std::string& path) {
    std::vector<uint8_t> bytes;
    int h = 0, w = 0;
    read_png_rgb(path, bytes, h, w);
    Mask m(h, w);
    for (size_t i = 0; i < m.size(); ++i) m.values[i] = static_cast<float>(bytes[i * 3]) / 255.0f;
    return m;
}

std::string frame_filename(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06d.png", index);
    return buf;
}

void write_frame_dir(const std::string& dir, const std::vector<Frame>& frames,
                     const FrameDirManifest& manifest) {
    fs::create_directories(dir);
    for (size_t i = 0; i < frames.size(); ++i)
        write_png((fs::path(dir) / frame_filename(static_cast<int>(i))).string(), frames[i]);
    nlohmann::json j;
    j["fps"] = manifest.fps;
    j["frame_count"] = static_cast<int>(frames.size());
    j["reference"] = manifest.reference;
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << j.dump(2) << "\n";
}

FrameDirManifest read_manifest(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("missing manifest.json in " + dir);
    nlohmann::json j;
    in >> j;
    FrameDirManifest m;
    m.fps = j.value("fps", 0.0);
    m.frame_count = j.value("frame_count", 0);
    m.reference = j.value("reference", std::string());
    return m;
}

std::vector<Frame> read_frame_dir(const std::string& dir, FrameDirManifest* manifest) {
    FrameDirManifest m = read_manifest(dir);
    std::vector<Frame> frames;
    frames.reserve(m.frame_count);
    for (int i = 0; i < m.frame_count; ++i) {
        fs::path p = fs::path(dir) / frame_filename(i);
        if (!fs::exists(p)) throw std::runtime_error("missing frame: " + p.string());
        frames.push_back(read_png_frame(p.string()));
    }
    if (manifest) *manifest = m;
    return frames;
}

} // namespace convhead
