// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#include "convhead/dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace convhead::dsp {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<double> hann_window(size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    for (size_t k = 0; k < n; ++k)
        w[k] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n - 1)));
    return w;
}

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::vector<std::complex<double>>& data) {
    const size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::runtime_error("fft size must be a power of two");

    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = data[i + k];
                std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<double> power_spectrum(const std::vector<double>& signal, size_t fft_size) {
    if (fft_size < signal.size()) throw std::runtime_error("fft size smaller than signal");
    std::vector<std::complex<double>> buf(fft_size, {0.0, 0.0});
    for (size_t i = 0; i < signal.size(); ++i) buf[i] = {signal[i], 0.0};
    fft_inplace(buf);
    std::vector<double> power(fft_size / 2 + 1);
    for (size_t k = 0; k <= fft_size / 2; ++k) power[k] = std::norm(buf[k]);
    return power;
}

std::vector<std::vector<double>> dct_matrix(size_t rows, size_t n) {
    if (rows > n) throw std::runtime_error("dct rows exceed input size");
    std::vector<std::vector<double>> d(rows, std::vector<double>(n));
    const double a0 = std::sqrt(1.0 / static_cast<double>(n));
    const double aj = std::sqrt(2.0 / static_cast<double>(n));
    for (size_t j = 0; j < rows; ++j) {
        const double a = (j == 0) ? a0 : aj;
        for (size_t m = 0; m < n; ++m)
            d[j][m] = a * std::cos(kPi * static_cast<double>(j) * (static_cast<double>(m) + 0.5) /
                                   static_cast<double>(n));
    }
    return d;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(size_t n_filters, size_t fft_size,
                                                double sample_rate) {
    if (n_filters == 0) throw std::runtime_error("need at least one mel filter");
    const size_t n_bins = fft_size / 2 + 1;
    const double mel_max = hz_to_mel(sample_rate / 2.0);

    std::vector<double> edges(n_filters + 2);
    for (size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(n_filters + 1));

    std::vector<std::vector<double>> bank(n_filters, std::vector<double>(n_bins, 0.0));
    for (size_t m = 0; m < n_filters; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
            if (f > lo && f < mid) {
                bank[m][k] = (f - lo) / (mid - lo);
            } else if (f == mid) {
                bank[m][k] = 1.0;
            } else if (f > mid && f < hi) {
                bank[m][k] = (hi - f) / (hi - mid);
            }
        }
    }
    return bank;
}

} // namespace convhead::dsp
