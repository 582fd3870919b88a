#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "postpick/image.hpp"

namespace postpick {

/// Separable Gaussian smoothing, kernel radius ceil(3*sigma), symmetric
/// (half-sample) reflection at the borders. sigma must be > 0.
WindowedImage gaussian_blur(const WindowedImage& img, double sigma);

struct Gradients {
  WindowedImage gx;
  WindowedImage gy;
  WindowedImage magnitude;
};

/// 3x3 Sobel derivatives with reflected borders.
Gradients sobel(const WindowedImage& img);

struct CannyParams {
  double sigma = 1.4;
  /// High threshold = this percentile of the nonzero gradient magnitudes.
  double high_percentile = 90.0;
  /// Low threshold = low_ratio * high threshold.
  double low_ratio = 0.4;
};

/// Canny edge map: smoothing, Sobel, non-maximum suppression, hysteresis.
BinaryImage canny(const WindowedImage& img, const CannyParams& params = {});

/// Otsu threshold over a 256-bin histogram spanning [min, max]. Candidate k
/// splits bins 0..k from k+1..255 and the returned value is the upper
/// boundary of bin k; the smallest maximising k wins. A constant image
/// returns its value.
double otsu_threshold(const WindowedImage& img);

/// 8-connected component labelling. labels[i] is 0 for background and
/// 1..count for foreground pixels, numbered in raster order of first pixel.
struct Components {
  std::size_t count = 0;
  std::vector<std::size_t> labels;
};

Components label_components(const BinaryImage& mask);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Mean pixel coordinate of every component, indexed by label - 1.
std::vector<Point2> component_centers(const Components& comps, std::size_t width);

/// Mean squared Euclidean distance of points from their centroid; 0 for
/// fewer than two points.
double dispersion(const std::vector<Point2>& points);

/// Nearest-rank percentile (0..100) of an ascending-sorted sample:
/// element ceil(percent/100 * n) - 1, clamped to the first element.
double nearest_rank_sorted(std::span<const double> sorted, int percent);

/// Same, for an unsorted sample.
double nearest_rank(std::vector<double> values, int percent);

}  // namespace postpick
