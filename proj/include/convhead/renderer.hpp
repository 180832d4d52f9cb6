// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "convhead/head_params.hpp"
#include "convhead/image.hpp"

namespace convhead {

// Per-pixel source coordinates in the normalized [-1,1]^2 convention:
// (-1,-1) is the center of the top-left pixel and (+1,+1) the center of
// the bottom-right pixel (align-corners). Out-of-range values are legal;
// the sampler replicates the border.
struct SampleGrid {
    int height = 0;
    int width = 0;
    std::vector<double> x; // height*width
    std::vector<double> y;

    SampleGrid() = default;
    SampleGrid(int h, int w)
        : height(h), width(w),
          x(static_cast<size_t>(h) * w, 0.0), y(static_cast<size_t>(h) * w, 0.0) {}

    size_t index(int row, int col) const { return static_cast<size_t>(row) * width + col; }
};

// Inverse-warp grid for a translation by crop (x,y), uniform scale by the
// crop scale, and in-plane rotation by pose component 0. Translation is
// expressed directly in normalized grid units.
SampleGrid affine_grid(const HeadParams& params, int height, int width);

// Bilinear sampling with border replication: coordinates outside [-1,1]
// clamp to the nearest border pixel.
Frame grid_sample_border(const Frame& image, const SampleGrid& grid);
Mask grid_sample_border(const Mask& image, const SampleGrid& grid);

// grid_sample_border(reference, affine_grid(params)). Expression
// coefficients are ignored; this renderer exists to exercise warping and
// fusion, not face synthesis.
Frame toy_render(const Frame& reference, const HeadParams& params);

// Contract for pluggable renderers: (params, reference frame) -> frame.
class Renderer {
public:
    virtual ~Renderer() = default;
    virtual Frame render(const HeadParams& params, const Frame& reference) const = 0;
};

class ToyRenderer final : public Renderer {
public:
    Frame render(const HeadParams& params, const Frame& reference) const override {
        return toy_render(reference, params);
    }
};

} // namespace convhead
