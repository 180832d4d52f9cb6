// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "convhead/head_params.hpp"
#include "convhead/image.hpp"

namespace convhead {

struct GaussianStats {
    std::vector<double> mean;             // d
    std::vector<std::vector<double>> cov; // d x d, symmetric

    size_t dim() const { return mean.size(); }
};

struct MetricsReport {
    std::optional<double> psnr;    // dB; +infinity flags identical inputs
    std::optional<double> frechet;
    std::optional<double> expfd;   // beta-space proxy for the challenge's ExpFD

    std::string to_text() const;
    std::string to_csv_row(bool with_header = false) const;
};

// 10*log10(peak^2 / MSE); identical frames give +infinity.
double psnr(const Frame& a, const Frame& b, double peak = 1.0);
double psnr_sequences(const std::vector<Frame>& a, const std::vector<Frame>& b,
                      double peak = 1.0);

// Sample mean and unbiased covariance of the feature rows; needs N >= 2.
GaussianStats gaussian_stats(const std::vector<std::vector<double>>& features);

// ||mu1-mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}); the matrix square root is
// taken through the symmetric eigendecomposition of S1^{1/2} S2 S1^{1/2}.
double frechet_distance(const GaussianStats& p, const GaussianStats& q);

// Mean over frames of the expression-coefficient Euclidean distance.
double exp_distance(const ParamSequence& pred, const ParamSequence& truth);

// Cheap deterministic per-frame embedding used by the CLI's Frechet
// computation in place of an Inception network: per-channel means over a
// 4x4 block grid (48 dims).
std::vector<double> frame_embedding(const Frame& frame);

} // namespace convhead
