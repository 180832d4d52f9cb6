// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "convhead/driver.hpp"

namespace convhead {

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr uint32_t kFeatureFileVersion = 1;

// Checkpoint file ("CHDR"): version, config block, named tensor table with
// f32 little-endian row-major payloads (trainable weights followed by the
// running normalization statistics). Values are quantized to f32 on save;
// a saved file reloads and re-saves byte-identically.
void save_checkpoint(const std::string& path, const DriverWeights& weights);
DriverWeights load_checkpoint(const std::string& path);

// Feature file ("CHFT"): version, frame count, dim, f32 little-endian
// row-major payload.
void save_features(const std::string& path, const std::vector<std::vector<double>>& rows,
                   double fps);
std::vector<std::vector<double>> load_features(const std::string& path, double* fps = nullptr);

// Ensemble manifest: JSON listing of checkpoint paths plus the kind tag
// ("self" or "cross"). Relative paths resolve against the manifest's
// directory on load.
struct EnsembleManifest {
    std::string kind = "cross";
    std::vector<std::string> checkpoints;
};

void save_ensemble_manifest(const std::string& path, const EnsembleManifest& manifest);
EnsembleManifest load_ensemble_manifest(const std::string& path);

} // namespace convhead
