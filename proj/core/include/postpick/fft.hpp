#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "postpick/image.hpp"

namespace postpick {

using Complex = std::complex<double>;

/// Dense complex raster in the same row-major layout as WindowedImage.
struct Spectrum {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Complex> data;

  Complex& at(std::size_t kx, std::size_t ky) { return data[ky * width + kx]; }
  Complex at(std::size_t kx, std::size_t ky) const { return data[ky * width + kx]; }
};

/// Unnormalised forward 2-D DFT.
Spectrum fft2(const WindowedImage& img);
Spectrum fft2(const Spectrum& grid);
/// Inverse 2-D DFT scaled by 1/(W*H), so ifft2(fft2(x)) == x.
Spectrum ifft2(const Spectrum& spec);

/// Signed frequency of DFT index k on an n-point axis, in cycles/sample,
/// in [-0.5, 0.5).
double fft_frequency(std::size_t k, std::size_t n);

/// Real part of a complex raster as an image.
WindowedImage real_part(const Spectrum& grid);

}  // namespace postpick
