// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

namespace convhead {

inline constexpr int kExpressionDim = 64;
inline constexpr int kPoseDim = 6;
inline constexpr int kCropDim = 3;
inline constexpr int kParamDim = kExpressionDim + kPoseDim + kCropDim; // 73

// 3DMM-style head parameters. Packed vector order is
// [expression(64) | pose(6) | crop(3)]; crop is (x, y, scale) with the
// translation in normalized image units and scale > 0 for rendering.
struct HeadParams {
    std::array<double, kExpressionDim> expression{};
    std::array<double, kPoseDim> pose{};
    std::array<double, kCropDim> crop{};
};

struct ParamSequence {
    std::vector<HeadParams> frames;

    size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
};

enum class ParamSelector { Expression, Pose, Crop };

std::array<double, kParamDim> pack(const HeadParams& params);
HeadParams unpack(const std::vector<double>& v); // throws on wrong length
HeadParams unpack(const std::array<double, kParamDim>& v);

// frame t = reference + residuals[t]; row 0 is forced to zero so frame 0
// reproduces the reference exactly. Residual rows must be 73-dim.
ParamSequence apply_residual(const HeadParams& reference,
                             const std::vector<std::vector<double>>& residuals);

// Row t-1 = selected components at frame t minus frame t-1. Needs T >= 2.
std::vector<std::vector<double>> motion_delta(const ParamSequence& seq, ParamSelector selector);

// CSV with 73 columns b0..b63,p0..p5,c0..c2, one row per frame, '.'
// decimal, no header. Values round-trip bit-exactly.
void write_param_csv(const std::string& path, const ParamSequence& seq);
ParamSequence read_param_csv(const std::string& path);

} // namespace convhead
