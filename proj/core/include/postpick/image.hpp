#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace postpick {

/// A W x H grayscale raster stored row-major. The unit of classification.
class WindowedImage {
 public:
  static constexpr std::size_t kMinSide = 8;

  WindowedImage() = default;
  /// Zero-filled image. Any size is accepted here; loaders enforce kMinSide.
  WindowedImage(std::size_t width, std::size_t height);
  WindowedImage(std::size_t width, std::size_t height, std::vector<double> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }
  bool square() const { return width_ == height_; }

  double& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  double& operator[](std::size_t i) { return pixels_[i]; }
  double operator[](std::size_t i) const { return pixels_[i]; }

  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  bool all_finite() const;

  friend bool operator==(const WindowedImage&, const WindowedImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

/// Row-major boolean mask, same geometry conventions as WindowedImage.
class BinaryImage {
 public:
  BinaryImage() = default;
  BinaryImage(std::size_t width, std::size_t height);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v) { bits_[y * width_ + x] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }

  std::size_t count() const;

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<unsigned char> bits_;
};

/// Sample mean and population standard deviation.
struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(std::span<const double> values);

/// Z-score an image: mean 0, population standard deviation 1.
/// A constant image maps to all zeros.
WindowedImage normalize(const WindowedImage& img);

/// Pixels strictly greater than `threshold`.
BinaryImage binarize(const WindowedImage& img, double threshold);

/// 90 degree counter-clockwise rotation of a square or rectangular raster.
WindowedImage rotate90(const WindowedImage& img);

}  // namespace postpick
