// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace convhead {

namespace {

// Normalized coordinate of pixel center j out of n (align-corners).
inline double pixel_to_norm(int j, int n) {
    return n > 1 ? 2.0 * static_cast<double>(j) / static_cast<double>(n - 1) - 1.0 : 0.0;
}

// Fractional offsets within one part in 1e7 of an integer are snapped so
// that algebraically exact grids (identity, whole-pixel translations)
// sample bit-exactly despite rounding in the normalized round trip.
constexpr double kSnap = 1e-7;

struct SamplePos {
    int i0;
    int i1;
    double frac;
};

inline SamplePos locate(double coord, int n) {
    double u = (coord + 1.0) * 0.5 * static_cast<double>(n - 1);
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    double fl = std::floor(u);
    double frac = u - fl;
    int i0 = static_cast<int>(fl);
    if (frac < kSnap) {
        frac = 0.0;
    } else if (frac > 1.0 - kSnap) {
        frac = 0.0;
        ++i0;
    }
    i0 = std::clamp(i0, 0, n - 1);
    const int i1 = std::min(i0 + 1, n - 1);
    return {i0, i1, frac};
}

template <typename Image, typename Fetch, typename Store>
void sample_image(const Image& src, const SampleGrid& grid, Image& dst, int channels,
                  Fetch fetch, Store store) {
    const int height = grid.height;
    const int width = grid.width;
#pragma omp parallel for schedule(static)
    for (long long row = 0; row < static_cast<long long>(height); ++row) {
        for (int col = 0; col < width; ++col) {
            const size_t g = grid.index(static_cast<int>(row), col);
            const SamplePos px = locate(grid.x[g], src.width);
            const SamplePos py = locate(grid.y[g], src.height);
            for (int c = 0; c < channels; ++c) {
                const double v00 = fetch(src, py.i0, px.i0, c);
                const double v01 = fetch(src, py.i0, px.i1, c);
                const double v10 = fetch(src, py.i1, px.i0, c);
                const double v11 = fetch(src, py.i1, px.i1, c);
                const double top = v00 + px.frac * (v01 - v00);
                const double bottom = v10 + px.frac * (v11 - v10);
                double val = top + py.frac * (bottom - top);
                // keep the convex-combination bound exact under rounding
                const double lo = std::min(std::min(v00, v01), std::min(v10, v11));
                const double hi = std::max(std::max(v00, v01), std::max(v10, v11));
                store(dst, static_cast<int>(row), col, c,
                      static_cast<float>(std::clamp(val, lo, hi)));
            }
        }
    }
}

} // namespace

SampleGrid affine_grid(const HeadParams& params, int height, int width) {
    if (height < 1 || width < 1) throw std::runtime_error("invalid grid size");
    const double scale = params.crop[2];
    if (!(scale > 0.0)) throw std::runtime_error("crop scale must be positive");
    const double tx = params.crop[0];
    const double ty = params.crop[1];
    const double theta = params.pose[0];
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);

    SampleGrid grid(height, width);
#pragma omp parallel for schedule(static)
    for (long long row = 0; row < static_cast<long long>(height); ++row) {
        const double oy = pixel_to_norm(static_cast<int>(row), height);
        for (int col = 0; col < width; ++col) {
            const double ox = pixel_to_norm(col, width);
            // invert: rotate by theta, scale, then translate
            const double dx = (ox - tx) / scale;
            const double dy = (oy - ty) / scale;
            const size_t g = grid.index(static_cast<int>(row), col);
            grid.x[g] = cos_t * dx + sin_t * dy;
            grid.y[g] = -sin_t * dx + cos_t * dy;
        }
    }
    return grid;
}

Frame grid_sample_border(const Frame& image, const SampleGrid& grid) {
    if (image.height < 1 || image.width < 1) throw std::runtime_error("empty image");
    Frame out(grid.height, grid.width);
    sample_image(
        image, grid, out, 3,
        [](const Frame& f, int y, int x, int c) { return static_cast<double>(f.at(y, x, c)); },
        [](Frame& f, int y, int x, int c, float v) { f.at(y, x, c) = v; });
    return out;
}

Mask grid_sample_border(const Mask& image, const SampleGrid& grid) {
    if (image.height < 1 || image.width < 1) throw std::runtime_error("empty mask");
    Mask out(grid.height, grid.width);
    sample_image(
        image, grid, out, 1,
        [](const Mask& m, int y, int x, int) { return static_cast<double>(m.at(y, x)); },
        [](Mask& m, int y, int x, int, float v) { m.at(y, x) = v; });
    return out;
}

Frame toy_render(const Frame& reference, const HeadParams& params) {
    return grid_sample_border(reference, affine_grid(params, reference.height, reference.width));
}

} // namespace convhead
