// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/persistence.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace convhead {

namespace {

void put_u32(std::ostream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

uint32_t get_u32(std::istream& in) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("unexpected end of file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(std::istream& in) {
    const uint32_t bits = get_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const uint32_t n = get_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw std::runtime_error("unexpected end of file");
    return s;
}

std::vector<uint32_t> tensor_shape(const std::string& name, const DriverConfig& c) {
    const auto h = static_cast<uint32_t>(c.hidden_dim);
    const auto f = static_cast<uint32_t>(c.feature_dim);
    if (name.starts_with("bn.")) return {f};
    if (name == "out.weight") return {static_cast<uint32_t>(c.output_dim), h};
    if (name == "out.bias") return {static_cast<uint32_t>(c.output_dim)};
    if (name.starts_with("lstm.")) {
        const size_t dot = name.find('.', 5);
        const int layer = std::stoi(name.substr(5, dot - 5));
        const std::string kind = name.substr(dot + 1);
        const auto d = static_cast<uint32_t>(layer == 0 ? c.input_dim() : c.hidden_dim);
        if (kind == "w_in") return {4 * h, d};
        if (kind == "w_rec") return {4 * h, h};
        if (kind == "bias") return {4 * h};
    }
    throw std::runtime_error("unknown tensor name: " + name);
}

void put_tensor(std::ostream& out, const std::string& name, const std::vector<double>& data,
                const DriverConfig& cfg) {
    put_string(out, name);
    const auto shape = tensor_shape(name, cfg);
    put_u32(out, static_cast<uint32_t>(shape.size()));
    size_t expect = 1;
    for (uint32_t dim : shape) {
        put_u32(out, dim);
        expect *= dim;
    }
    if (expect != data.size()) throw std::runtime_error("tensor shape mismatch for " + name);
    for (double v : data) put_f32(out, static_cast<float>(v));
}

void get_tensor(std::istream& in, const std::string& expect_name, std::vector<double>& data,
                const DriverConfig& cfg) {
    const std::string name = get_string(in);
    if (name != expect_name)
        throw std::runtime_error("unexpected tensor '" + name + "', wanted '" + expect_name + "'");
    const auto shape = tensor_shape(name, cfg);
    const uint32_t ndim = get_u32(in);
    if (ndim != shape.size()) throw std::runtime_error("tensor rank mismatch for " + name);
    size_t total = 1;
    for (uint32_t i = 0; i < ndim; ++i) {
        const uint32_t dim = get_u32(in);
        if (dim != shape[i]) throw std::runtime_error("tensor shape mismatch for " + name);
        total *= dim;
    }
    if (total != data.size()) throw std::runtime_error("tensor size mismatch for " + expect_name);
    for (auto& v : data) v = static_cast<double>(get_f32(in));
}

} // namespace

void save_checkpoint(const std::string& path, const DriverWeights& weights) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write("CHDR", 4);
    put_u32(out, kCheckpointVersion);

    const auto& c = weights.config;
    put_u32(out, static_cast<uint32_t>(c.feature_dim));
    put_u32(out, static_cast<uint32_t>(c.attitude_dim));
    put_u32(out, static_cast<uint32_t>(c.hidden_dim));
    put_u32(out, static_cast<uint32_t>(c.num_layers));
    put_u32(out, static_cast<uint32_t>(c.output_dim));
    put_f32(out, static_cast<float>(c.dropout_rate));

    const auto tensors = weight_tensors(weights);
    put_u32(out, static_cast<uint32_t>(tensors.size() + 2));
    for (const auto& [name, data] : tensors) put_tensor(out, name, *data, c);
    put_tensor(out, "bn.running_mean", weights.bn.running_mean, c);
    put_tensor(out, "bn.running_var", weights.bn.running_var, c);
    if (!out) throw std::runtime_error("write failed: " + path);
}

DriverWeights load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "CHDR", 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    const uint32_t version = get_u32(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    DriverConfig cfg;
    cfg.feature_dim = static_cast<int>(get_u32(in));
    cfg.attitude_dim = static_cast<int>(get_u32(in));
    cfg.hidden_dim = static_cast<int>(get_u32(in));
    cfg.num_layers = static_cast<int>(get_u32(in));
    cfg.output_dim = static_cast<int>(get_u32(in));
    cfg.dropout_rate = static_cast<double>(get_f32(in));
    cfg.validate();

    // allocate the right shapes, then fill in declared order
    DriverWeights weights = allocate_weights(cfg);
    auto tensors = weight_tensors(weights);
    const uint32_t count = get_u32(in);
    if (count != tensors.size() + 2)
        throw std::runtime_error("unexpected tensor count in " + path);
    for (auto& [name, data] : tensors) get_tensor(in, name, *data, cfg);
    get_tensor(in, "bn.running_mean", weights.bn.running_mean, cfg);
    get_tensor(in, "bn.running_var", weights.bn.running_var, cfg);
    return weights;
}

void save_features(const std::string& path, const std::vector<std::vector<double>>& rows,
                   double fps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const uint32_t dim = rows.empty() ? 0 : static_cast<uint32_t>(rows[0].size());
    out.write("CHFT", 4);
    put_u32(out, kFeatureFileVersion);
    put_u32(out, static_cast<uint32_t>(rows.size()));
    put_u32(out, dim);
    put_f32(out, static_cast<float>(fps));
    for (const auto& row : rows) {
        if (row.size() != dim) throw std::runtime_error("ragged feature rows");
        for (double v : row) put_f32(out, static_cast<float>(v));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::vector<double>> load_features(const std::string& path, double* fps) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open feature file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "CHFT", 4) != 0)
        throw std::runtime_error("not a feature file: " + path);
    const uint32_t version = get_u32(in);
    if (version != kFeatureFileVersion)
        throw std::runtime_error("unsupported feature file version " + std::to_string(version));
    const uint32_t frames = get_u32(in);
    const uint32_t dim = get_u32(in);
    const float f = get_f32(in);
    if (fps) *fps = static_cast<double>(f);
    std::vector<std::vector<double>> rows(frames, std::vector<double>(dim));
    for (auto& row : rows)
        for (auto& v : row) v = static_cast<double>(get_f32(in));
    return rows;
}

void save_ensemble_manifest(const std::string& path, const EnsembleManifest& manifest) {
    nlohmann::json j;
    j["kind"] = manifest.kind;
    j["checkpoints"] = manifest.checkpoints;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

EnsembleManifest load_ensemble_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    nlohmann::json j;
    in >> j;
    EnsembleManifest m;
    m.kind = j.value("kind", "cross");
    if (m.kind != "self" && m.kind != "cross")
        throw std::runtime_error("manifest kind must be 'self' or 'cross'");
    if (!j.contains("checkpoints") || !j["checkpoints"].is_array() || j["checkpoints"].empty())
        throw std::runtime_error("manifest needs a non-empty checkpoint list");
    const fs::path base = fs::path(path).parent_path();
    for (const auto& entry : j["checkpoints"]) {
        fs::path p = entry.get<std::string>();
        if (p.is_relative()) p = base / p;
        m.checkpoints.push_back(p.string());
    }
    return m;
}

} // namespace convhead
