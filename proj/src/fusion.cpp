// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace convhead {

namespace {

void require_same_dims(int h1, int w1, int h2, int w2, const char* what) {
    if (h1 != h2 || w1 != w2) throw std::runtime_error(std::string("dimension mismatch: ") + what);
}

inline int clamp_index(int v, int n) { return std::clamp(v, 0, n - 1); }

} // namespace

Mask threshold_segment(const Frame& frame, const std::array<float, 3>& background_color,
                       float tol) {
    if (tol < 0.0f) throw std::runtime_error("tolerance must be non-negative");
    Mask mask(frame.height, frame.width);
#pragma omp parallel for schedule(static)
    for (long long y = 0; y < static_cast<long long>(frame.height); ++y) {
        for (int x = 0; x < frame.width; ++x) {
            float dist = 0.0f;
            for (int c = 0; c < 3; ++c)
                dist = std::max(dist, std::fabs(frame.at(static_cast<int>(y), x, c) -
                                               background_color[static_cast<size_t>(c)]));
            mask.at(static_cast<int>(y), x) = dist <= tol ? 1.0f : 0.0f;
        }
    }
    return mask;
}

Segmenter make_threshold_segmenter(const std::array<float, 3>& background_color, float tol) {
    return [background_color, tol](const Frame& f) {
        return threshold_segment(f, background_color, tol);
    };
}

Mask temporal_median(const std::vector<Mask>& history) {
    if (history.empty()) throw std::runtime_error("empty mask history");
    if (history.size() > kMedianWindow) throw std::runtime_error("mask history longer than window");
    const int h = history[0].height;
    const int w = history[0].width;
    for (const auto& m : history) require_same_dims(h, w, m.height, m.width, "mask history");
    const size_t n = history.size();
    const size_t mid = (n - 1) / 2; // lower median for even windows

    Mask out(h, w);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(out.size()); ++i) {
        float vals[kMedianWindow];
        for (size_t k = 0; k < n; ++k) vals[k] = history[k].values[static_cast<size_t>(i)];
        std::nth_element(vals, vals + mid, vals + n);
        out.values[static_cast<size_t>(i)] = vals[mid];
    }
    return out;
}

Mask mask_intersect(const Mask& a, const Mask& b) {
    require_same_dims(a.height, a.width, b.height, b.width, "mask intersect");
    Mask out(a.height, a.width);
    for (size_t i = 0; i < out.size(); ++i) out.values[i] = std::min(a.values[i], b.values[i]);
    return out;
}

std::vector<double> gaussian_kernel(int kernel_size, double sigma) {
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::runtime_error("kernel size must be odd and positive");
    const int r = kernel_size / 2;
    std::vector<double> k(static_cast<size_t>(kernel_size));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        k[static_cast<size_t>(i + r)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

Mask gaussian_blur(const Mask& mask, int kernel_size, double sigma) {
    const auto kernel = gaussian_kernel(kernel_size, sigma);
    const int r = kernel_size / 2;
    const int h = mask.height;
    const int w = mask.width;

    // horizontal then vertical pass; border replication is separable
    std::vector<double> tmp(static_cast<size_t>(h) * w);
#pragma omp parallel for schedule(static)
    for (long long y = 0; y < static_cast<long long>(h); ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += kernel[static_cast<size_t>(i + r)] *
                       static_cast<double>(mask.at(static_cast<int>(y), clamp_index(x + i, w)));
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    Mask out(h, w);
#pragma omp parallel for schedule(static)
    for (long long y = 0; y < static_cast<long long>(h); ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += kernel[static_cast<size_t>(i + r)] *
                       tmp[static_cast<size_t>(clamp_index(static_cast<int>(y) + i, h)) * w + x];
            out.at(static_cast<int>(y), x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    }
    return out;
}

Mask fusion_mask(const Mask& median_mask, const Mask& reference_mask) {
    require_same_dims(median_mask.height, median_mask.width, reference_mask.height,
                      reference_mask.width, "fusion mask");
    return gaussian_blur(mask_intersect(median_mask, reference_mask));
}

Frame composite(const Frame& generated, const Frame& reference, const Mask& fmask) {
    require_same_dims(generated.height, generated.width, reference.height, reference.width,
                      "composite frames");
    require_same_dims(generated.height, generated.width, fmask.height, fmask.width,
                      "composite mask");
    Frame out(generated.height, generated.width);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(fmask.size()); ++i) {
        const float m = fmask.values[static_cast<size_t>(i)];
        for (int c = 0; c < 3; ++c) {
            const size_t p = static_cast<size_t>(i) * 3 + static_cast<size_t>(c);
            out.pixels[p] = (1.0f - m) * generated.pixels[p] + m * reference.pixels[p];
        }
    }
    return out;
}

std::vector<Frame> fuse_sequence(const std::vector<Frame>& generated, const Frame& reference,
                                 const Segmenter& segmenter) {
    if (generated.empty()) throw std::runtime_error("no frames to fuse");
    std::vector<Mask> masks;
    masks.reserve(generated.size());
    for (const auto& frame : generated) masks.push_back(segmenter(frame));
    return fuse_sequence_with_masks(generated, reference, masks, segmenter(reference));
}

std::vector<Frame> fuse_sequence_with_masks(const std::vector<Frame>& generated,
                                            const Frame& reference,
                                            const std::vector<Mask>& masks,
                                            const Mask& reference_mask) {
    if (generated.empty()) throw std::runtime_error("no frames to fuse");
    if (masks.size() != generated.size())
        throw std::runtime_error("mask count does not match frame count");

    std::vector<Frame> fused;
    fused.reserve(generated.size());
    std::vector<Mask> window;
    for (size_t t = 0; t < generated.size(); ++t) {
        require_same_dims(generated[t].height, generated[t].width, reference.height,
                          reference.width, "fuse sequence");
        window.push_back(masks[t]);
        if (window.size() > kMedianWindow) window.erase(window.begin());
        const Mask med = temporal_median(window);
        const Mask fmask = fusion_mask(med, reference_mask);
        fused.push_back(composite(generated[t], reference, fmask));
    }
    return fused;
}

} // namespace convhead
