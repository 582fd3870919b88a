#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "postpick/image.hpp"
#include "postpick/manifest.hpp"

namespace postpick {

enum class TemplateKind { kParticleProxy, kPlate, kCylinder, kSphere, kVoid };

std::string_view to_string(TemplateKind kind);
TemplateKind parse_template_kind(std::string_view s);

/// Width of the raised-cosine edge of every template solid, in voxels.
/// The nominal radius sits in the middle of the edge.
inline constexpr double kSoftEdgeWidth = 2.0;

/// Cubic density grid, voxel (x, y, z) at index (z * side + y) * side + x.
struct Volume {
  std::size_t side = 0;
  TemplateKind kind = TemplateKind::kVoid;
  std::vector<double> density;

  double at(std::size_t x, std::size_t y, std::size_t z) const { return density[(z * side + y) * side + x]; }
  double sum() const;
};

/// Builds a template volume. Solids are confined to the ball of radius
/// 0.45 * side so that any rotation keeps them inside the grid.
///   particle_proxy: union of 40 soft balls, centres uniform in a ball of
///                   radius 0.35 * side, radii uniform in [0.03, 0.08] * side
///   plate:          slab of thickness 0.15 * side, random normal
///   cylinder:       rod of radius 0.12 * side, random axis
///   sphere:         centred ball of radius 0.3 * side
///   void:           zero
/// Throws ArgumentError for side < 32.
Volume make_volume(TemplateKind kind, std::size_t side, std::uint64_t seed);

/// Proper rotation as a row-major 3x3 matrix.
struct Rotation {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Rotation identity() { return {}; }
  /// From a (not necessarily unit) quaternion w + xi + yj + zk.
  static Rotation from_quaternion(double w, double x, double y, double z);
  /// Rotation by `angle` radians about a unit axis.
  static Rotation about_axis(std::array<double, 3> axis, double angle);

  std::array<double, 3> apply(const std::array<double, 3>& v) const;
  Rotation transposed() const;
};

/// Uniformly distributed rotation (Shoemake's uniform unit quaternion).
Rotation random_rotation(std::mt19937_64& rng);

/// Rotates the volume about its centre with trilinear resampling and sums
/// along z. The output is side x side and shares the volume's centre.
WindowedImage project(const Volume& vol, const Rotation& rotation, std::size_t side);

/// Bright-field optics. Units: kV, micrometres (underfocus positive),
/// millimetres, fraction, Angstrom per pixel.
struct CtfParams {
  double accelerating_voltage = 300.0;
  double defocus = 2.0;
  double spherical_aberration = 2.0;
  double amplitude_contrast = 0.07;
  double pixel_size = 2.5;

  /// Relativistic electron wavelength in Angstrom.
  double wavelength() const;
  void validate() const;
};

/// CTF(q) = -[sqrt(1 - A^2) sin chi + A cos chi],
/// chi = pi lambda dz q^2 - pi/2 Cs lambda^3 q^4, q in 1/Angstrom.
double ctf_value(const CtfParams& p, double q);

/// Multiplies the DFT of a square image by the CTF and returns the real
/// part of the inverse transform. Throws ArgumentError for non-square input.
WindowedImage apply_ctf(const WindowedImage& img, const CtfParams& p);

/// img + n, n i.i.d. N(0, var(img) / target_snr). Throws ArgumentError
/// when img has zero variance or target_snr <= 0.
WindowedImage add_noise_to_snr(const WindowedImage& img, double target_snr, std::uint64_t seed);

/// Half-width of the Gaussian roll-off of the band mask, cycles/pixel.
inline constexpr double kBandpassEdgeWidth = 0.01;

/// Radial band mask in cycles/pixel with Gaussian edges. low == 0 keeps DC
/// and applies no lower edge; high == 0.5 applies no upper edge. Throws
/// ArgumentError unless 0 <= low < high <= 0.5.
WindowedImage bandpass(const WindowedImage& img, double low, double high);

enum class Scenario { kPlate, kCylinder, kSphere, kVoid, kAll };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view s);

struct SplitCounts {
  std::string name;
  std::size_t particles = 0;
  std::size_t non_particles = 0;
};

struct SimulationConfig {
  std::size_t image_side = 80;
  double structural_snr = 1.4;
  double shot_snr = 0.05;
  CtfParams ctf;
  double band_low = 0.005;
  double band_high = 0.15;
  double particle_fraction = 0.9;
  Scenario scenario = Scenario::kAll;
  /// Fixed per-split counts. When empty, `count` samples are drawn with
  /// labels chosen by particle_fraction into a single split "images".
  std::vector<SplitCounts> splits;
  std::size_t count = 0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t total_samples() const;
};

std::string config_to_json(const SimulationConfig& cfg);
SimulationConfig config_from_json(std::string_view text);
SimulationConfig load_config(const std::filesystem::path& path);

/// Sub-seed for sample `index`: splitmix64(seed XOR index).
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

/// Every random choice made for one sample.
struct SampleDraw {
  Label label = Label::kParticle;
  TemplateKind kind = TemplateKind::kParticleProxy;
  Rotation rotation;
  std::uint64_t structural_seed = 0;
  std::uint64_t shot_seed = 0;
  std::uint64_t void_seed = 0;
};

/// Intermediate images of one sample, in pipeline order.
struct SampleStages {
  WindowedImage projection;
  WindowedImage structural;
  WindowedImage ctf;
  WindowedImage shot;
  WindowedImage filtered;
  WindowedImage image;  // z-normalised output
};

struct SimulatedSample {
  WindowedImage image;
  Label label = Label::kParticle;
  TemplateKind kind = TemplateKind::kParticleProxy;
};

/// Holds the template volumes for one configuration and produces samples.
/// Thread-safe: generate() only reads shared state.
class Simulator {
 public:
  explicit Simulator(SimulationConfig cfg);

  const SimulationConfig& config() const { return cfg_; }
  const Volume& volume(TemplateKind kind) const;

  /// Draws for global sample `index`. `forced` fixes the label (split
  /// mode); otherwise the label follows particle_fraction.
  SampleDraw draw(std::uint64_t index, std::optional<Label> forced) const;

  /// projection -> structural noise -> CTF -> shot noise -> band-pass ->
  /// z-normalisation. Void samples replace the first two stages by a
  /// unit-variance Gaussian field.
  SampleStages run(const SampleDraw& d) const;

  SimulatedSample generate(std::uint64_t index, std::optional<Label> forced) const;

 private:
  SimulationConfig cfg_;
  std::array<Volume, 5> volumes_;
};

struct GeneratedSplit {
  std::string name;
  std::vector<SimulatedSample> samples;
};

/// Generates every split in memory. Sample indices run consecutively across
/// splits; within a split particles precede non-particles.
std::vector<GeneratedSplit> simulate(const SimulationConfig& cfg, std::size_t threads = 0);

/// Writes <out>/<split>.ppk and <out>/<split>.jsonl per split (source
/// "simulator") and returns the manifest paths.
std::vector<std::filesystem::path> generate_dataset(const SimulationConfig& cfg, const std::filesystem::path& out_dir,
                                                    std::size_t threads = 0);

}  // namespace postpick
