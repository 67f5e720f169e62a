#pragma once

#include <complex>
#include <span>
#include <vector>

namespace convsim {

// In-place iterative radix-2 FFT. data.size() must be a power of two.
void fft(std::vector<std::complex<double>>& data, bool inverse);

// Full linear convolution, output length = len(x) + len(h) - 1.
// convolve_fft pads to the next power of two; both kernels agree to well
// under 1e-6 absolute for audio-scale inputs.
std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h);
std::vector<double> convolve_fft(std::span<const double> x, std::span<const double> h);

// Mean squared sample value.
double mean_power(std::span<const double> x);

}  // namespace convsim
