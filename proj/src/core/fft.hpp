#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace simdps {

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& data);

// One-sided magnitude spectrum of a real frame zero-padded to fft_size:
// bins 0..fft_size/2.
std::vector<double> real_fft_magnitude(const std::vector<double>& frame, std::size_t fft_size);

bool is_power_of_two(std::size_t n);

} // namespace simdps
