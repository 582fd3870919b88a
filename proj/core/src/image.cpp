#include "postpick/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "postpick/error.hpp"

namespace postpick {

WindowedImage::WindowedImage(std::size_t width, std::size_t height)
    : width_(width), height_(height), pixels_(width * height, 0.0) {}

WindowedImage::WindowedImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width_ * height_) {
    throw ArgumentError("pixel count does not match width x height");
  }
}

bool WindowedImage::all_finite() const {
  return std::all_of(pixels_.begin(), pixels_.end(), [](double v) { return std::isfinite(v); });
}

BinaryImage::BinaryImage(std::size_t width, std::size_t height)
    : width_(width), height_(height), bits_(width * height, 0) {}

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Moments moments(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    ss += d * d;
  }
  m.stddev = std::sqrt(ss / n);
  return m;
}

WindowedImage normalize(const WindowedImage& img) {
  WindowedImage out(img.width(), img.height());
  const Moments m = moments(img.pixels());
  // Relative cut-off so that rounding residue of a constant image is not
  // amplified into noise.
  const double scale = std::max(std::abs(m.mean), 1.0);
  if (!(m.stddev > 1e-12 * scale)) return out;
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - m.mean) / m.stddev;
  return out;
}

BinaryImage binarize(const WindowedImage& img, double threshold) {
  BinaryImage out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) out.set(x, y, img.at(x, y) > threshold);
  }
  return out;
}

WindowedImage rotate90(const WindowedImage& img) {
  // (x, y) -> (y, W-1-x): counter-clockwise in image coordinates with y down.
  WindowedImage out(img.height(), img.width());
  const std::size_t w = img.width();
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < w; ++x) out.at(y, w - 1 - x) = img.at(x, y);
  }
  return out;
}

}  // namespace postpick
