// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/ensemble.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace convhead {

std::vector<std::vector<double>> ensemble_residuals(
    const EnsembleSpec& spec, const std::vector<std::vector<double>>& features,
    const std::optional<AttitudeCondition>& attitude) {
    if (spec.members.empty()) throw std::runtime_error("ensemble needs at least one member");
    const auto& first = spec.members.front()->config;
    for (const auto* member : spec.members) {
        if (!member) throw std::runtime_error("null ensemble member");
        const auto& c = member->config;
        if (c.feature_dim != first.feature_dim || c.attitude_dim != first.attitude_dim ||
            c.output_dim != first.output_dim)
            throw std::runtime_error("ensemble members disagree on input/output dimensions");
    }

    // member passes are independent; the mean is taken in member order
    std::vector<std::vector<std::vector<double>>> all(spec.members.size());
    const long long n = static_cast<long long>(spec.members.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i)
        all[static_cast<size_t>(i)] =
            forward_residuals(*spec.members[static_cast<size_t>(i)], features, Mode::Infer, 0,
                              attitude);

    auto mean = std::move(all[0]);
    for (size_t m = 1; m < all.size(); ++m)
        for (size_t t = 0; t < mean.size(); ++t)
            for (size_t d = 0; d < mean[t].size(); ++d) mean[t][d] += all[m][t][d];
    const double inv = 1.0 / static_cast<double>(spec.members.size());
    for (auto& row : mean)
        for (auto& v : row) v *= inv;
    return mean;
}

ParamSequence ensemble_predict(const EnsembleSpec& spec, const FeatureSequence& features,
                               const HeadParams& reference,
                               const std::optional<AttitudeCondition>& attitude) {
    return apply_residual(reference,
                          ensemble_residuals(spec, feature_matrix(features), attitude));
}

std::vector<size_t> select_top_k(const std::vector<double>& validation_losses, size_t k) {
    if (k == 0) throw std::runtime_error("k must be positive");
    if (k > validation_losses.size())
        throw std::runtime_error("k exceeds the candidate count");
    std::vector<size_t> order(validation_losses.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return validation_losses[a] < validation_losses[b];
    });
    order.resize(k);
    return order;
}

} // namespace convhead
