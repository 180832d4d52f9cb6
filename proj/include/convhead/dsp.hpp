// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace convhead::dsp {

// Symmetric Hann window of length n: w[k] = 0.5*(1 - cos(2*pi*k/(n-1))).
// n == 1 yields {1}.
std::vector<double> hann_window(size_t n);

size_t next_pow2(size_t n);

// In-place iterative radix-2 FFT; data.size() must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& data);

// Power spectrum of a real signal zero-padded to fft_size (power of two):
// |X[k]|^2 for k = 0..fft_size/2.
std::vector<double> power_spectrum(const std::vector<double>& signal, size_t fft_size);

// Orthonormal DCT-II matrix, m rows (coefficients) by n columns (inputs):
// D[j][m] = a_j * cos(pi*j*(m+0.5)/n), a_0 = sqrt(1/n), a_j = sqrt(2/n).
std::vector<std::vector<double>> dct_matrix(size_t rows, size_t n);

// Triangular mel filterbank on FFT bin frequencies. Filters are linear in
// frequency between mel-spaced breakpoints covering 0..sample_rate/2 and
// are unnormalized (peak 1), so interior bins sum to 1 across filters.
// Result: n_filters rows of (fft_size/2 + 1) weights.
std::vector<std::vector<double>> mel_filterbank(size_t n_filters, size_t fft_size,
                                                double sample_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

} // namespace convhead::dsp
