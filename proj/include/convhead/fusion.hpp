// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <deque>
#include <functional>
#include <vector>

#include "convhead/image.hpp"

namespace convhead {

inline constexpr int kMedianWindow = 5;
inline constexpr int kBlurKernelSize = 7;
inline constexpr double kBlurSigma = 1.5;

// Background segmenter contract: the mask matches the frame dimensions,
// 1 marks background.
using Segmenter = std::function<Mask(const Frame&)>;

// Reference segmenter: mask = 1 where the pixel is within tol of
// background_color in the max norm.
Mask threshold_segment(const Frame& frame, const std::array<float, 3>& background_color,
                       float tol);
Segmenter make_threshold_segmenter(const std::array<float, 3>& background_color, float tol);

// Per-pixel median over the window (newest masks of the current frame and
// up to four predecessors). Even window sizes take the lower median.
Mask temporal_median(const std::vector<Mask>& history);

// Elementwise minimum of the two masks followed by a normalized 7x7
// Gaussian blur (sigma 1.5, border-replicated).
Mask fusion_mask(const Mask& median_mask, const Mask& reference_mask);

// min of soft masks (set intersection on binary masks).
Mask mask_intersect(const Mask& a, const Mask& b);

// Normalized Gaussian blur with border replication, separable fast path.
Mask gaussian_blur(const Mask& mask, int kernel_size = kBlurKernelSize,
                   double sigma = kBlurSigma);

// The normalized 1-D kernel the blur uses.
std::vector<double> gaussian_kernel(int kernel_size = kBlurKernelSize,
                                    double sigma = kBlurSigma);

// out = (1 - m) * generated + m * reference, per pixel and channel.
Frame composite(const Frame& generated, const Frame& reference, const Mask& fmask);

// Streams frames through segment -> temporal median (sliding window of 5)
// -> intersect with the segmented reference -> blur -> composite. Causal:
// frame t depends only on frames <= t.
std::vector<Frame> fuse_sequence(const std::vector<Frame>& generated, const Frame& reference,
                                 const Segmenter& segmenter);

// Same pipeline with precomputed masks (external segmenter protocol);
// masks[t] must match generated[t], reference_mask the reference frame.
std::vector<Frame> fuse_sequence_with_masks(const std::vector<Frame>& generated,
                                            const Frame& reference,
                                            const std::vector<Mask>& masks,
                                            const Mask& reference_mask);

} // namespace convhead
