// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/head_params.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace convhead {

std::array<double, kParamDim> pack(const HeadParams& params) {
    std::array<double, kParamDim> v{};
    for (int i = 0; i < kExpressionDim; ++i) v[i] = params.expression[static_cast<size_t>(i)];
    for (int i = 0; i < kPoseDim; ++i) v[kExpressionDim + i] = params.pose[static_cast<size_t>(i)];
    for (int i = 0; i < kCropDim; ++i)
        v[kExpressionDim + kPoseDim + i] = params.crop[static_cast<size_t>(i)];
    return v;
}

HeadParams unpack(const std::array<double, kParamDim>& v) {
    HeadParams p;
    for (int i = 0; i < kExpressionDim; ++i) p.expression[static_cast<size_t>(i)] = v[i];
    for (int i = 0; i < kPoseDim; ++i) p.pose[static_cast<size_t>(i)] = v[kExpressionDim + i];
    for (int i = 0; i < kCropDim; ++i)
        p.crop[static_cast<size_t>(i)] = v[kExpressionDim + kPoseDim + i];
    return p;
}

HeadParams unpack(const std::vector<double>& v) {
    if (v.size() != kParamDim) throw std::runtime_error("param vector must have 73 entries");
    std::array<double, kParamDim> a{};
    for (int i = 0; i < kParamDim; ++i) a[static_cast<size_t>(i)] = v[static_cast<size_t>(i)];
    return unpack(a);
}

ParamSequence apply_residual(const HeadParams& reference,
                             const std::vector<std::vector<double>>& residuals) {
    const auto ref = pack(reference);
    ParamSequence seq;
    seq.frames.resize(residuals.size());
    for (size_t t = 0; t < residuals.size(); ++t) {
        if (residuals[t].size() != kParamDim)
            throw std::runtime_error("residual row must have 73 entries");
        if (t == 0) {
            seq.frames[0] = reference;
            continue;
        }
        std::array<double, kParamDim> v{};
        for (int i = 0; i < kParamDim; ++i)
            v[static_cast<size_t>(i)] = ref[static_cast<size_t>(i)] + residuals[t][static_cast<size_t>(i)];
        seq.frames[t] = unpack(v);
    }
    return seq;
}

std::vector<std::vector<double>> motion_delta(const ParamSequence& seq, ParamSelector selector) {
    if (seq.size() < 2) throw std::runtime_error("motion delta needs at least two frames");
    int dim = 0;
    switch (selector) {
        case ParamSelector::Expression: dim = kExpressionDim; break;
        case ParamSelector::Pose: dim = kPoseDim; break;
        case ParamSelector::Crop: dim = kCropDim; break;
    }
    auto select = [&](const HeadParams& p, int i) -> double {
        switch (selector) {
            case ParamSelector::Expression: return p.expression[static_cast<size_t>(i)];
            case ParamSelector::Pose: return p.pose[static_cast<size_t>(i)];
            case ParamSelector::Crop: return p.crop[static_cast<size_t>(i)];
        }
        return 0.0;
    };
    std::vector<std::vector<double>> delta(seq.size() - 1, std::vector<double>(dim));
    for (size_t t = 1; t < seq.size(); ++t)
        for (int i = 0; i < dim; ++i)
            delta[t - 1][static_cast<size_t>(i)] =
                select(seq.frames[t], i) - select(seq.frames[t - 1], i);
    return delta;
}

void write_param_csv(const std::string& path, const ParamSequence& seq) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[40];
    for (const auto& frame : seq.frames) {
        const auto v = pack(frame);
        for (int i = 0; i < kParamDim; ++i) {
            // shortest representation that parses back to the same double
            auto res = std::to_chars(buf, buf + sizeof buf, v[static_cast<size_t>(i)]);
            out.write(buf, res.ptr - buf);
            out.put(i + 1 < kParamDim ? ',' : '\n');
        }
    }
}

ParamSequence read_param_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open param csv: " + path);
    ParamSequence seq;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::array<double, kParamDim> v{};
        const char* p = line.c_str();
        const char* line_end = p + line.size();
        for (int i = 0; i < kParamDim; ++i) {
            auto res = std::from_chars(p, line_end, v[static_cast<size_t>(i)]);
            if (res.ec != std::errc{}) throw std::runtime_error("bad param csv row in " + path);
            p = res.ptr;
            if (i + 1 < kParamDim) {
                if (p >= line_end || *p != ',')
                    throw std::runtime_error("expected 73 columns in " + path);
                ++p;
            }
        }
        if (p != line_end) throw std::runtime_error("expected 73 columns in " + path);
        seq.frames.push_back(unpack(v));
    }
    if (seq.empty()) throw std::runtime_error("empty param csv: " + path);
    return seq;
}

} // namespace convhead
