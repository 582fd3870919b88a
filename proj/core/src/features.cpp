#include "postpick/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "postpick/error.hpp"
#include "postpick/image_io.hpp"
#include "postpick/parallel.hpp"

namespace postpick {

std::vector<std::string> default_schema() {
  return {kFeatureNames.begin(), kFeatureNames.end()};
}

WindowedImage radial_weights(std::size_t width, std::size_t height) {
  WindowedImage w(width, height);
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double d = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy);
      w.at(x, y) = 1.0 / (1.0 + d);
      total += w.at(x, y);
    }
  }
  for (auto& v : w.pixels()) v /= total;
  return w;
}

double radial_weighted_intensity(const WindowedImage& img) {
  const WindowedImage w = radial_weights(img.width(), img.height());
  double acc = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) acc += w[i] * img[i];
  return acc;
}

double blob_fraction(const WindowedImage& img, const PhaseSymmetryParams& params) {
  const WindowedImage symmetry = phase_symmetry(img, params);
  const double t = otsu_threshold(symmetry);
  return static_cast<double>(binarize(symmetry, t).count()) / static_cast<double>(img.size());
}

double dark_dot_dispersion(const WindowedImage& img, double sigma, int percentile) {
  if (!(sigma > 0)) throw ArgumentError("dark_dot_dispersion: sigma must be positive");
  const WindowedImage smooth = gaussian_blur(img, sigma);
  const double q = nearest_rank({smooth.pixels().begin(), smooth.pixels().end()}, percentile);
  BinaryImage dark(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) dark.set(x, y, smooth.at(x, y) < q);
  }
  return dispersion(component_centers(label_components(dark), img.width()));
}

Quantiles intensity_quantiles(const WindowedImage& img) {
  std::vector<double> sorted(img.pixels().begin(), img.pixels().end());
  std::sort(sorted.begin(), sorted.end());
  return {nearest_rank_sorted(sorted, 0), nearest_rank_sorted(sorted, 10), nearest_rank_sorted(sorted, 50),
          nearest_rank_sorted(sorted, 90), nearest_rank_sorted(sorted, 100)};
}

double foreground_fraction(const WindowedImage& img) {
  const double t = otsu_threshold(img);
  return static_cast<double>(binarize(img, t).count()) / static_cast<double>(img.size());
}

double edge_count(const WindowedImage& img, const CannyParams& params) {
  return static_cast<double>(label_components(canny(img, params)).count);
}

FeatureVector extract_features(const WindowedImage& img, const FeatureParams& params) {
  const WindowedImage z = normalize(img);
  FeatureVector fv;
  fv[Feature::kRadialWeightedIntensity] = radial_weighted_intensity(z);
  fv[Feature::kBlobFraction] = blob_fraction(z, params.symmetry);
  fv[Feature::kDarkDotDispersion] = dark_dot_dispersion(z, params.dark_dot_sigma, params.dark_dot_percentile);
  const Quantiles q = intensity_quantiles(z);
  fv[Feature::kQ0] = q.q0;
  fv[Feature::kQ10] = q.q10;
  fv[Feature::kQ50] = q.q50;
  fv[Feature::kQ90] = q.q90;
  fv[Feature::kQ100] = q.q100;
  fv[Feature::kForegroundFraction] = foreground_fraction(z);
  fv[Feature::kEdgeCount] = edge_count(z, params.canny);
  return fv;
}

std::vector<FeatureRow> extract_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                                         const FeatureParams& params, std::size_t threads) {
  std::vector<FeatureRow> rows(manifest.size());
  parallel_for(
      manifest.size(),
      [&](std::size_t i) {
        const auto& e = manifest[i];
        rows[i].path = e.path;
        rows[i].label = e.label;
        rows[i].features = extract_features(load_image(DatasetManifest::resolve(base_dir, e.path)), params);
      },
      threads);
  return rows;
}

namespace {

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_feature_csv(const std::vector<FeatureRow>& rows) {
  std::string out = "path,label";
  for (auto name : kFeatureNames) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const auto& r : rows) {
    out += quote_csv(r.path);
    out += ',';
    out += to_string(r.label);
    for (double v : r.features.values) {
      out += ',';
      out += format_g9(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<FeatureRow> parse_feature_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw FormatError("feature CSV is empty");
  const auto header = split_csv_line(line);
  if (header.size() != kFeatureCount + 2 || header[0] != "path" || header[1] != "label" ||
      !std::equal(kFeatureNames.begin(), kFeatureNames.end(), header.begin() + 2)) {
    throw FormatError("feature CSV header does not match the feature schema");
  }
  std::vector<FeatureRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != kFeatureCount + 2) {
      throw FormatError("feature CSV line " + std::to_string(lineno) + ": expected " +
                        std::to_string(kFeatureCount + 2) + " columns");
    }
    FeatureRow r;
    r.path = cells[0];
    try {
      r.label = parse_manifest_label(cells[1]);
    } catch (const ArgumentError& e) {
      throw FormatError("feature CSV line " + std::to_string(lineno) + ": " + e.what());
    }
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const std::string& cell = cells[k + 2];
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw FormatError("feature CSV line " + std::to_string(lineno) + ": bad value '" + cell + "'");
      }
      r.features.values[k] = v;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  out << format_feature_csv(rows);
  if (!out) throw FormatError("failed writing " + path.string());
}

std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_feature_csv(ss.str());
}

}  // namespace postpick
