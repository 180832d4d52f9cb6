// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "convhead/driver.hpp"

namespace convhead {

enum class EnsembleKind { SelfEnsemble, CrossModel };

struct EnsembleSpec {
    std::vector<const DriverWeights*> members;
    EnsembleKind kind = EnsembleKind::CrossModel;
};

// Per-frame arithmetic mean of every member's predicted residuals, applied
// to the reference once. Members must agree on input and output dims.
std::vector<std::vector<double>> ensemble_residuals(
    const EnsembleSpec& spec, const std::vector<std::vector<double>>& features,
    const std::optional<AttitudeCondition>& attitude = std::nullopt);

ParamSequence ensemble_predict(const EnsembleSpec& spec, const FeatureSequence& features,
                               const HeadParams& reference,
                               const std::optional<AttitudeCondition>& attitude = std::nullopt);

// The k candidates with the smallest validation loss; ties keep the
// earlier list position. Returns indices into `candidates` in selection
// order.
std::vector<size_t> select_top_k(const std::vector<double>& validation_losses, size_t k);

} // namespace convhead
