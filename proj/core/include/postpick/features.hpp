#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "postpick/filters.hpp"
#include "postpick/image.hpp"
#include "postpick/manifest.hpp"
#include "postpick/phase_symmetry.hpp"

namespace postpick {

inline constexpr std::size_t kFeatureCount = 10;

/// Column order of every feature vector, feature CSV and model file.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "radial_weighted_intensity", "blob_fraction", "dark_dot_dispersion", "q0", "q10",
    "q50", "q90", "q100", "foreground_fraction", "edge_count"};

enum class Feature : std::size_t {
  kRadialWeightedIntensity = 0,
  kBlobFraction,
  kDarkDotDispersion,
  kQ0,
  kQ10,
  kQ50,
  kQ90,
  kQ100,
  kForegroundFraction,
  kEdgeCount,
};

/// Stable identifier of the default schema, stored in model files.
std::vector<std::string> default_schema();

struct FeatureParams {
  PhaseSymmetryParams symmetry;
  double dark_dot_sigma = 2.0;
  /// Dark pixels lie strictly below this percentile of the smoothed image.
  int dark_dot_percentile = 5;
  CannyParams canny;
};

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](std::size_t i) const { return values[i]; }
  static constexpr std::size_t size() { return kFeatureCount; }
  static constexpr const auto& names() { return kFeatureNames; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Weighted mean with weights proportional to 1 / (1 + d), d the distance
/// from ((W-1)/2, (H-1)/2). Weights sum to one.
double radial_weighted_intensity(const WindowedImage& img);

/// The normalised weight raster used by radial_weighted_intensity.
WindowedImage radial_weights(std::size_t width, std::size_t height);

/// Fraction of pixels whose phase symmetry exceeds the Otsu threshold of
/// the symmetry map.
double blob_fraction(const WindowedImage& img, const PhaseSymmetryParams& params = {});

/// Mean squared distance of dark-dot centres from their centroid. Dark dots
/// are 8-connected regions of the Gaussian-smoothed image strictly below
/// its `percentile` nearest-rank quantile.
double dark_dot_dispersion(const WindowedImage& img, double sigma = 2.0, int percentile = 5);

struct Quantiles {
  double q0 = 0, q10 = 0, q50 = 0, q90 = 0, q100 = 0;
};

/// Nearest-rank 0/10/50/90/100 percent quantiles of the pixel values.
Quantiles intensity_quantiles(const WindowedImage& img);

/// Fraction of pixels strictly above the image's Otsu threshold.
double foreground_fraction(const WindowedImage& img);

/// Number of 8-connected contours in the Canny edge map.
double edge_count(const WindowedImage& img, const CannyParams& params = {});

/// Normalises `img` and evaluates the full schema. Deterministic.
FeatureVector extract_features(const WindowedImage& img, const FeatureParams& params = {});

/// One row of the feature matrix.
struct FeatureRow {
  std::string path;
  ManifestLabel label = ManifestLabel::kUnlabeled;
  FeatureVector features;
};

/// Feature matrix for a manifest, rows in manifest order regardless of
/// how the work is scheduled. Paths are resolved against `base_dir`.
std::vector<FeatureRow> extract_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                                         const FeatureParams& params = {}, std::size_t threads = 0);

/// CSV with header "path,label,<feature names>", values printed with 9
/// significant digits.
std::string format_feature_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_feature_csv(std::string_view text);
void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path);

}  // namespace postpick
