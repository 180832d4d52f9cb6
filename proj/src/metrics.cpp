// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace convhead {

namespace {

constexpr double kEigClampRel = 1e-10;
constexpr double kPsdTolRel = 1e-9;

Eigen::MatrixXd to_eigen(const std::vector<std::vector<double>>& m) {
    const auto rows = static_cast<Eigen::Index>(m.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(m[0].size()) : 0;
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            out(i, j) = m[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return out;
}

// Symmetric PSD square root with relative eigenvalue clamping.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sym, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    Eigen::VectorXd vals = eig.eigenvalues();
    const double max_eig = vals.size() > 0 ? vals.maxCoeff() : 0.0;
    const double psd_tol = kPsdTolRel * std::max(1.0, max_eig);
    const double clamp = kEigClampRel * std::max(0.0, max_eig);
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) < -psd_tol)
            throw std::runtime_error(std::string("matrix not PSD within tolerance: ") + what);
        vals(i) = vals(i) <= clamp ? 0.0 : std::sqrt(vals(i));
    }
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace

double psnr(const Frame& a, const Frame& b, double peak) {
    if (a.height != b.height || a.width != b.width)
        throw std::runtime_error("dimension mismatch: psnr");
    double sq = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
        sq += d * d;
    }
    const double mse = sq / static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double psnr_sequences(const std::vector<Frame>& a, const std::vector<Frame>& b, double peak) {
    if (a.size() != b.size()) throw std::runtime_error("sequence length mismatch: psnr");
    if (a.empty()) throw std::runtime_error("empty sequences: psnr");
    double sq = 0.0;
    size_t count = 0;
    for (size_t t = 0; t < a.size(); ++t) {
        if (a[t].height != b[t].height || a[t].width != b[t].width)
            throw std::runtime_error("dimension mismatch: psnr");
        for (size_t i = 0; i < a[t].size(); ++i) {
            const double d =
                static_cast<double>(a[t].pixels[i]) - static_cast<double>(b[t].pixels[i]);
            sq += d * d;
        }
        count += a[t].size();
    }
    const double mse = sq / static_cast<double>(count);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

GaussianStats gaussian_stats(const std::vector<std::vector<double>>& features) {
    const size_t n = features.size();
    if (n < 2) throw std::runtime_error("gaussian stats need at least two samples");
    const size_t d = features[0].size();
    for (const auto& row : features)
        if (row.size() != d) throw std::runtime_error("ragged feature rows");

    GaussianStats stats;
    stats.mean.assign(d, 0.0);
    for (const auto& row : features)
        for (size_t j = 0; j < d; ++j) stats.mean[j] += row[j];
    for (size_t j = 0; j < d; ++j) stats.mean[j] /= static_cast<double>(n);

    stats.cov.assign(d, std::vector<double>(d, 0.0));
    // upper triangle, then mirror for exact symmetry
#pragma omp parallel for schedule(static)
    for (long long j = 0; j < static_cast<long long>(d); ++j) {
        for (size_t k = static_cast<size_t>(j); k < d; ++k) {
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i)
                acc += (features[i][static_cast<size_t>(j)] - stats.mean[static_cast<size_t>(j)]) *
                       (features[i][k] - stats.mean[k]);
            stats.cov[static_cast<size_t>(j)][k] = acc / static_cast<double>(n - 1);
        }
    }
    for (size_t j = 0; j < d; ++j)
        for (size_t k = 0; k < j; ++k) stats.cov[j][k] = stats.cov[k][j];
    return stats;
}

double frechet_distance(const GaussianStats& p, const GaussianStats& q) {
    if (p.dim() != q.dim()) throw std::runtime_error("dimension mismatch: frechet");
    const auto d = static_cast<Eigen::Index>(p.dim());

    Eigen::VectorXd mu_diff(d);
    for (Eigen::Index i = 0; i < d; ++i)
        mu_diff(i) = p.mean[static_cast<size_t>(i)] - q.mean[static_cast<size_t>(i)];

    Eigen::MatrixXd s1 = to_eigen(p.cov);
    Eigen::MatrixXd s2 = to_eigen(q.cov);
    s1 = ((s1 + s1.transpose()) / 2.0).eval();
    s2 = ((s2 + s2.transpose()) / 2.0).eval();

    const Eigen::MatrixXd root1 = psd_sqrt(s1, "first covariance");
    Eigen::MatrixXd inner = root1 * s2 * root1;
    inner = ((inner + inner.transpose()) / 2.0).eval();
    const Eigen::MatrixXd cross = psd_sqrt(inner, "covariance product");

    const double dist =
        mu_diff.squaredNorm() + s1.trace() + s2.trace() - 2.0 * cross.trace();
    return std::max(dist, 0.0);
}

double exp_distance(const ParamSequence& pred, const ParamSequence& truth) {
    if (pred.size() != truth.size()) throw std::runtime_error("sequence length mismatch: expfd");
    if (pred.empty()) throw std::runtime_error("empty sequences: expfd");
    double total = 0.0;
    for (size_t t = 0; t < pred.size(); ++t) {
        double sq = 0.0;
        for (int i = 0; i < kExpressionDim; ++i) {
            const double diff = pred.frames[t].expression[static_cast<size_t>(i)] -
                                truth.frames[t].expression[static_cast<size_t>(i)];
            sq += diff * diff;
        }
        total += std::sqrt(sq);
    }
    return total / static_cast<double>(pred.size());
}

std::vector<double> frame_embedding(const Frame& frame) {
    constexpr int kGrid = 4;
    std::vector<double> emb(kGrid * kGrid * 3, 0.0);
    std::vector<double> counts(kGrid * kGrid, 0.0);
    for (int y = 0; y < frame.height; ++y) {
        const int by = std::min(y * kGrid / frame.height, kGrid - 1);
        for (int x = 0; x < frame.width; ++x) {
            const int bx = std::min(x * kGrid / frame.width, kGrid - 1);
            const int cell = by * kGrid + bx;
            counts[static_cast<size_t>(cell)] += 1.0;
            for (int c = 0; c < 3; ++c)
                emb[static_cast<size_t>(cell * 3 + c)] += static_cast<double>(frame.at(y, x, c));
        }
    }
    for (int cell = 0; cell < kGrid * kGrid; ++cell) {
        const double n = std::max(counts[static_cast<size_t>(cell)], 1.0);
        for (int c = 0; c < 3; ++c) emb[static_cast<size_t>(cell * 3 + c)] /= n;
    }
    return emb;
}

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out.precision(12);
    if (psnr) {
        out << "psnr=";
        if (std::isinf(*psnr))
            out << "inf\n";
        else
            out << *psnr << "\n";
    }
    if (frechet) out << "frechet=" << *frechet << "\n";
    if (expfd) out << "expfd_beta_proxy=" << *expfd << "\n";
    return out.str();
}

std::string MetricsReport::to_csv_row(bool with_header) const {
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out.precision(12);
    if (with_header) out << "psnr,frechet,expfd_beta_proxy\n";
    auto put = [&](const std::optional<double>& v, bool last) {
        if (v) {
            if (std::isinf(*v))
                out << "inf";
            else
                out << *v;
        }
        if (!last) out << ",";
    };
    put(psnr, false);
    put(frechet, false);
    put(expfd, true);
    out << "\n";
    return out.str();
}

} // namespace convhead
