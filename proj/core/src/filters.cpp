#include "postpick/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "postpick/error.hpp"

namespace postpick {
namespace {

// Symmetric reflection: -1 -> 0, n -> n-1. Repeats for offsets larger than n.
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

double sample(const WindowedImage& img, std::ptrdiff_t x, std::ptrdiff_t y) {
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  return img.at(static_cast<std::size_t>(reflect(x, w)), static_cast<std::size_t>(reflect(y, h)));
}

}  // namespace

WindowedImage gaussian_blur(const WindowedImage& img, double sigma) {
  if (!(sigma > 0)) throw ArgumentError("gaussian_blur: sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (auto& v : kernel) v /= total;

  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  WindowedImage tmp(img.width(), img.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * sample(img, x + i, y);
      }
      tmp.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
    }
  }
  WindowedImage out(img.width(), img.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * sample(tmp, x, y + i);
      }
      out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
    }
  }
  return out;
}

Gradients sobel(const WindowedImage& img) {
  Gradients g{WindowedImage(img.width(), img.height()), WindowedImage(img.width(), img.height()),
              WindowedImage(img.width(), img.height())};
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const double a = sample(img, x - 1, y - 1), b = sample(img, x, y - 1), c = sample(img, x + 1, y - 1);
      const double d = sample(img, x - 1, y), f = sample(img, x + 1, y);
      const double p = sample(img, x - 1, y + 1), q = sample(img, x, y + 1), r = sample(img, x + 1, y + 1);
      const double gx = (c + 2 * f + r) - (a + 2 * d + p);
      const double gy = (p + 2 * q + r) - (a + 2 * b + c);
      const auto ux = static_cast<std::size_t>(x), uy = static_cast<std::size_t>(y);
      g.gx.at(ux, uy) = gx;
      g.gy.at(ux, uy) = gy;
      g.magnitude.at(ux, uy) = std::hypot(gx, gy);
    }
  }
  return g;
}

BinaryImage canny(const WindowedImage& img, const CannyParams& params) {
  const std::size_t w = img.width(), h = img.height();
  BinaryImage edges(w, h);
  const Gradients g = sobel(gaussian_blur(img, params.sigma));

  std::vector<double> nonzero;
  nonzero.reserve(g.magnitude.size());
  for (double m : g.magnitude.pixels()) {
    if (m > 0) nonzero.push_back(m);
  }
  if (nonzero.empty()) return edges;
  const double high = nearest_rank(std::move(nonzero), static_cast<int>(std::lround(params.high_percentile)));
  const double low = params.low_ratio * high;

  // Non-maximum suppression along the quantised gradient direction. The
  // asymmetric comparison keeps exactly one pixel of a two-pixel plateau.
  WindowedImage thin(w, h);
  const auto sw = static_cast<std::ptrdiff_t>(w), sh = static_cast<std::ptrdiff_t>(h);
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      const auto ux = static_cast<std::size_t>(x), uy = static_cast<std::size_t>(y);
      const double m = g.magnitude.at(ux, uy);
      if (m <= 0) continue;
      double angle = std::atan2(g.gy.at(ux, uy), g.gx.at(ux, uy)) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 180.0;
      std::ptrdiff_t dx = 0, dy = 0;
      if (angle < 22.5 || angle >= 157.5) {
        dx = 1;
      } else if (angle < 67.5) {
        dx = 1;
        dy = 1;
      } else if (angle < 112.5) {
        dy = 1;
      } else {
        dx = -1;
        dy = 1;
      }
      const double ahead = sample(g.magnitude, x + dx, y + dy);
      const double behind = sample(g.magnitude, x - dx, y - dy);
      if (m >= ahead && m > behind) thin.at(ux, uy) = m;
    }
  }

  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < thin.size(); ++i) {
    if (thin[i] >= high && thin[i] > 0) {
      edges.set(i % w, i / w, true);
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const auto x = static_cast<std::ptrdiff_t>(i % w), y = static_cast<std::ptrdiff_t>(i / w);
    for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
      for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
        const std::ptrdiff_t nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= sw || ny >= sh) continue;
        const auto ux = static_cast<std::size_t>(nx), uy = static_cast<std::size_t>(ny);
        if (!edges.at(ux, uy) && thin.at(ux, uy) >= low && thin.at(ux, uy) > 0) {
          edges.set(ux, uy, true);
          stack.push_back(uy * w + ux);
        }
      }
    }
  }
  return edges;
}

double otsu_threshold(const WindowedImage& img) {
  if (img.empty()) throw ArgumentError("otsu_threshold: empty image");
  constexpr std::size_t kBins = 256;
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels().begin(), img.pixels().end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return lo;
  const double width = (hi - lo) / static_cast<double>(kBins);
  auto boundary = [&](std::size_t j) { return lo + static_cast<double>(j) * width; };

  std::array<double, kBins> count{};
  std::array<double, kBins> sum{};
  for (double v : img.pixels()) {
    auto j = static_cast<std::size_t>(std::min<double>(kBins - 1, std::floor((v - lo) / width)));
    // Make bin membership agree exactly with the strict comparison used
    // for binarisation: bin j holds values in (boundary(j), boundary(j+1)].
    while (j > 0 && !(v > boundary(j))) --j;
    while (j + 1 < kBins && v > boundary(j + 1)) ++j;
    count[j] += 1.0;
    sum[j] += v;
  }

  const double n = static_cast<double>(img.size());
  double total_sum = 0.0;
  for (double s : sum) total_sum += s;

  double best = -1.0;
  std::size_t best_k = 0;
  double c0 = 0.0, s0 = 0.0;
  for (std::size_t k = 0; k < kBins; ++k) {
    c0 += count[k];
    s0 += sum[k];
    const double c1 = n - c0;
    double between = 0.0;
    if (c0 > 0 && c1 > 0) {
      const double mu0 = s0 / c0;
      const double mu1 = (total_sum - s0) / c1;
      between = (c0 / n) * (c1 / n) * (mu0 - mu1) * (mu0 - mu1);
    }
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  return boundary(best_k + 1);
}

Components label_components(const BinaryImage& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  Components out;
  out.labels.assign(mask.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || out.labels[start] != 0) continue;
    const std::size_t label = ++out.count;
    out.labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t x = i % w, y = i / w;
      const std::size_t x0 = x > 0 ? x - 1 : 0, x1 = std::min(x + 1, w - 1);
      const std::size_t y0 = y > 0 ? y - 1 : 0, y1 = std::min(y + 1, h - 1);
      for (std::size_t ny = y0; ny <= y1; ++ny) {
        for (std::size_t nx = x0; nx <= x1; ++nx) {
          const std::size_t j = ny * w + nx;
          if (mask[j] && out.labels[j] == 0) {
            out.labels[j] = label;
            stack.push_back(j);
          }
        }
      }
    }
  }
  return out;
}

std::vector<Point2> component_centers(const Components& comps, std::size_t width) {
  std::vector<Point2> sums(comps.count);
  std::vector<double> counts(comps.count, 0.0);
  for (std::size_t i = 0; i < comps.labels.size(); ++i) {
    const std::size_t l = comps.labels[i];
    if (l == 0) continue;
    sums[l - 1].x += static_cast<double>(i % width);
    sums[l - 1].y += static_cast<double>(i / width);
    counts[l - 1] += 1.0;
  }
  for (std::size_t c = 0; c < comps.count; ++c) {
    sums[c].x /= counts[c];
    sums[c].y /= counts[c];
  }
  return sums;
}

double dispersion(const std::vector<Point2>& points) {
  if (points.size() < 2) return 0.0;
  Point2 centroid;
  for (const auto& p : points) {
    centroid.x += p.x;
    centroid.y += p.y;
  }
  const double n = static_cast<double>(points.size());
  centroid.x /= n;
  centroid.y /= n;
  double acc = 0.0;
  for (const auto& p : points) {
    const double dx = p.x - centroid.x, dy = p.y - centroid.y;
    acc += dx * dx + dy * dy;
  }
  return acc / n;
}

double nearest_rank_sorted(std::span<const double> sorted, int percent) {
  if (sorted.empty()) throw ArgumentError("nearest_rank: empty sample");
  if (percent < 0 || percent > 100) throw ArgumentError("nearest_rank: percent outside [0, 100]");
  const std::size_t n = sorted.size();
  const std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  return sorted[rank == 0 ? 0 : rank - 1];
}

double nearest_rank(std::vector<double> values, int percent) {
  std::sort(values.begin(), values.end());
  return nearest_rank_sorted(values, percent);
}

}  // namespace postpick
