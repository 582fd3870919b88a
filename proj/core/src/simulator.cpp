#include "postpick/simulator.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "postpick/error.hpp"
#include "postpick/fft.hpp"
#include "postpick/image_io.hpp"
#include "postpick/parallel.hpp"

namespace postpick {

double CtfParams::wavelength() const {
  const double volts = accelerating_voltage * 1e3;
  return 12.2639 / std::sqrt(volts * (1.0 + 0.97845e-6 * volts));
}

void CtfParams::validate() const {
  if (!(accelerating_voltage > 0)) throw ArgumentError("ctf: accelerating_voltage must be positive");
  if (!(pixel_size > 0)) throw ArgumentError("ctf: pixel_size must be positive");
  if (!(amplitude_contrast >= 0 && amplitude_contrast < 1)) {
    throw ArgumentError("ctf: amplitude_contrast must be in [0, 1)");
  }
  if (!std::isfinite(defocus) || !std::isfinite(spherical_aberration)) throw ArgumentError("ctf: non-finite optics");
}

double ctf_value(const CtfParams& p, double q) {
  const double lambda = p.wavelength();
  const double dz = p.defocus * 1e4;               // um -> A
  const double cs = p.spherical_aberration * 1e7;  // mm -> A
  const double q2 = q * q;
  const double chi = std::numbers::pi * lambda * dz * q2 - 0.5 * std::numbers::pi * cs * lambda * lambda * lambda * q2 * q2;
  const double a = p.amplitude_contrast;
  return -(std::sqrt(1.0 - a * a) * std::sin(chi) + a * std::cos(chi));
}

WindowedImage apply_ctf(const WindowedImage& img, const CtfParams& p) {
  if (!img.square()) throw ArgumentError("apply_ctf: image must be square");
  p.validate();
  Spectrum spec = fft2(img);
  for (std::size_t ky = 0; ky < spec.height; ++ky) {
    const double fy = fft_frequency(ky, spec.height);
    for (std::size_t kx = 0; kx < spec.width; ++kx) {
      const double fx = fft_frequency(kx, spec.width);
      spec.at(kx, ky) *= ctf_value(p, std::hypot(fx, fy) / p.pixel_size);
    }
  }
  return real_part(ifft2(spec));
}

WindowedImage add_noise_to_snr(const WindowedImage& img, double target_snr, std::uint64_t seed) {
  if (!(target_snr > 0)) throw ArgumentError("add_noise_to_snr: target_snr must be positive");
  const Moments m = moments(img.pixels());
  const double scale = std::max(std::abs(m.mean), 1e-300);
  if (!(m.stddev > 1e-12 * scale) || m.stddev == 0.0) {
    throw ArgumentError("add_noise_to_snr: signal has zero variance");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, m.stddev / std::sqrt(target_snr));
  WindowedImage out = img;
  for (auto& v : out.pixels()) v += noise(rng);
  return out;
}

WindowedImage bandpass(const WindowedImage& img, double low, double high) {
  if (!(low >= 0 && low < high && high <= 0.5)) {
    throw ArgumentError("bandpass: require 0 <= low < high <= 0.5");
  }
  const double two_w2 = 2.0 * kBandpassEdgeWidth * kBandpassEdgeWidth;
  Spectrum spec = fft2(img);
  for (std::size_t ky = 0; ky < spec.height; ++ky) {
    const double fy = fft_frequency(ky, spec.height);
    for (std::size_t kx = 0; kx < spec.width; ++kx) {
      const double fx = fft_frequency(kx, spec.width);
      const double q = std::hypot(fx, fy);
      double mask = 1.0;
      if (low > 0 && q < low) mask = q == 0.0 ? 0.0 : std::exp(-(low - q) * (low - q) / two_w2);
      if (high < 0.5 && q > high) mask = std::exp(-(q - high) * (q - high) / two_w2);
      spec.at(kx, ky) *= mask;
    }
  }
  return real_part(ifft2(spec));
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::kPlate: return "plate";
    case Scenario::kCylinder: return "cylinder";
    case Scenario::kSphere: return "sphere";
    case Scenario::kVoid: return "void";
    case Scenario::kAll: return "all";
  }
  return "all";
}

Scenario parse_scenario(std::string_view s) {
  if (s == "plate") return Scenario::kPlate;
  if (s == "cylinder") return Scenario::kCylinder;
  if (s == "sphere") return Scenario::kSphere;
  if (s == "void") return Scenario::kVoid;
  if (s == "all") return Scenario::kAll;
  throw ArgumentError("unknown scenario '" + std::string(s) + "'");
}

void SimulationConfig::validate() const {
  if (image_side < 32) throw ArgumentError("simulation: image_side must be >= 32");
  if (!(shot_snr > 0 && shot_snr < structural_snr)) {
    throw ArgumentError("simulation: require 0 < shot_snr < structural_snr");
  }
  if (!(band_low >= 0 && band_low < band_high && band_high <= 0.5)) {
    throw ArgumentError("simulation: require 0 <= bandpass.low < bandpass.high <= 0.5");
  }
  if (!(particle_fraction > 0 && particle_fraction <= 1)) {
    throw ArgumentError("simulation: particle_fraction must be in (0, 1]");
  }
  ctf.validate();
  for (const auto& s : splits) {
    if (s.name.empty() || s.name.find_first_of("/\\#") != std::string::npos) {
      throw ArgumentError("simulation: invalid split name '" + s.name + "'");
    }
  }
  if (total_samples() == 0) throw ArgumentError("simulation: nothing to generate");
}

std::size_t SimulationConfig::total_samples() const {
  if (splits.empty()) return count;
  std::size_t n = 0;
  for (const auto& s : splits) n += s.particles + s.non_particles;
  return n;
}

std::string config_to_json(const SimulationConfig& cfg) {
  nlohmann::ordered_json j;
  j["image_side"] = cfg.image_side;
  j["structural_snr"] = cfg.structural_snr;
  j["shot_snr"] = cfg.shot_snr;
  j["ctf"] = {{"accelerating_voltage", cfg.ctf.accelerating_voltage},
              {"defocus", cfg.ctf.defocus},
              {"spherical_aberration", cfg.ctf.spherical_aberration},
              {"amplitude_contrast", cfg.ctf.amplitude_contrast},
              {"pixel_size", cfg.ctf.pixel_size}};
  j["bandpass"] = {{"low", cfg.band_low}, {"high", cfg.band_high}};
  j["particle_fraction"] = cfg.particle_fraction;
  j["scenario"] = to_string(cfg.scenario);
  if (cfg.splits.empty()) {
    j["count"] = cfg.count;
  } else {
    j["splits"] = nlohmann::ordered_json::object();
    for (const auto& s : cfg.splits) {
      j["splits"][s.name] = {{"particles", s.particles}, {"non_particles", s.non_particles}};
    }
  }
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

SimulationConfig config_from_json(std::string_view text) {
  SimulationConfig cfg;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    cfg.image_side = j.value("image_side", cfg.image_side);
    cfg.structural_snr = j.value("structural_snr", cfg.structural_snr);
    cfg.shot_snr = j.value("shot_snr", cfg.shot_snr);
    if (j.contains("ctf")) {
      const auto& c = j.at("ctf");
      cfg.ctf.accelerating_voltage = c.value("accelerating_voltage", cfg.ctf.accelerating_voltage);
      cfg.ctf.defocus = c.value("defocus", cfg.ctf.defocus);
      cfg.ctf.spherical_aberration = c.value("spherical_aberration", cfg.ctf.spherical_aberration);
      cfg.ctf.amplitude_contrast = c.value("amplitude_contrast", cfg.ctf.amplitude_contrast);
      cfg.ctf.pixel_size = c.value("pixel_size", cfg.ctf.pixel_size);
    }
    if (j.contains("bandpass")) {
      cfg.band_low = j.at("bandpass").value("low", cfg.band_low);
      cfg.band_high = j.at("bandpass").value("high", cfg.band_high);
    }
    cfg.particle_fraction = j.value("particle_fraction", cfg.particle_fraction);
    cfg.scenario = parse_scenario(j.value("scenario", std::string("all")));
    if (j.contains("splits")) {
      for (const auto& [name, counts] : j.at("splits").items()) {
        cfg.splits.push_back({name, counts.at("particles").get<std::size_t>(),
                              counts.at("non_particles").get<std::size_t>()});
      }
    }
    cfg.count = j.value("count", cfg.count);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("simulation config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = (seed ^ index) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::array<TemplateKind, 4> kContaminants = {TemplateKind::kPlate, TemplateKind::kCylinder,
                                                       TemplateKind::kSphere, TemplateKind::kVoid};

// Volume seeds live far from the sample index range.
constexpr std::uint64_t kVolumeStream = 0xffffffff00000000ULL;

}  // namespace

Simulator::Simulator(SimulationConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  for (std::size_t k = 0; k < volumes_.size(); ++k) {
    const auto kind = static_cast<TemplateKind>(k);
    volumes_[k] = make_volume(kind, cfg_.image_side, sample_seed(cfg_.seed, kVolumeStream + k));
  }
}

const Volume& Simulator::volume(TemplateKind kind) const { return volumes_[static_cast<std::size_t>(kind)]; }

SampleDraw Simulator::draw(std::uint64_t index, std::optional<Label> forced) const {
  std::mt19937_64 rng(sample_seed(cfg_.seed, index));
  SampleDraw d;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double label_draw = unit(rng);
  d.label = forced ? *forced : (label_draw < cfg_.particle_fraction ? Label::kParticle : Label::kNonParticle);
  std::uniform_int_distribution<std::size_t> pick(0, kContaminants.size() - 1);
  const TemplateKind contaminant = cfg_.scenario == Scenario::kAll
                                       ? kContaminants[pick(rng)]
                                       : kContaminants[static_cast<std::size_t>(cfg_.scenario)];
  d.kind = d.label == Label::kParticle ? TemplateKind::kParticleProxy : contaminant;
  d.rotation = random_rotation(rng);
  d.structural_seed = rng();
  d.shot_seed = rng();
  d.void_seed = rng();
  return d;
}

SampleStages Simulator::run(const SampleDraw& d) const {
  SampleStages st;
  st.projection = project(volume(d.kind), d.rotation, cfg_.image_side);
  if (d.kind == TemplateKind::kVoid) {
    st.structural = WindowedImage(cfg_.image_side, cfg_.image_side);
    std::mt19937_64 rng(d.void_seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& v : st.structural.pixels()) v = g(rng);
  } else {
    st.structural = add_noise_to_snr(st.projection, cfg_.structural_snr, d.structural_seed);
  }
  st.ctf = apply_ctf(st.structural, cfg_.ctf);
  st.shot = add_noise_to_snr(st.ctf, cfg_.shot_snr, d.shot_seed);
  st.filtered = bandpass(st.shot, cfg_.band_low, cfg_.band_high);
  st.image = normalize(st.filtered);
  return st;
}

SimulatedSample Simulator::generate(std::uint64_t index, std::optional<Label> forced) const {
  const SampleDraw d = draw(index, forced);
  return {run(d).image, d.label, d.kind};
}

namespace {

struct PlannedSplit {
  std::string name;
  std::uint64_t first_index = 0;
  std::size_t size = 0;
  std::size_t particles = 0;
  bool forced = false;
};

std::vector<PlannedSplit> plan(const SimulationConfig& cfg) {
  std::vector<PlannedSplit> out;
  std::uint64_t next = 0;
  if (cfg.splits.empty()) {
    out.push_back({"images", 0, cfg.count, 0, false});
    return out;
  }
  for (const auto& s : cfg.splits) {
    out.push_back({s.name, next, s.particles + s.non_particles, s.particles, true});
    next += s.particles + s.non_particles;
  }
  return out;
}

std::optional<Label> forced_label(const PlannedSplit& p, std::size_t i) {
  if (!p.forced) return std::nullopt;
  return i < p.particles ? Label::kParticle : Label::kNonParticle;
}

}  // namespace

std::vector<GeneratedSplit> simulate(const SimulationConfig& cfg, std::size_t threads) {
  const Simulator sim(cfg);
  std::vector<GeneratedSplit> out;
  for (const auto& p : plan(cfg)) {
    GeneratedSplit split{p.name, std::vector<SimulatedSample>(p.size)};
    parallel_for(
        p.size, [&](std::size_t i) { split.samples[i] = sim.generate(p.first_index + i, forced_label(p, i)); },
        threads);
    out.push_back(std::move(split));
  }
  return out;
}

std::vector<std::filesystem::path> generate_dataset(const SimulationConfig& cfg, const std::filesystem::path& out_dir,
                                                    std::size_t threads) {
  const Simulator sim(cfg);
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> manifests;
  constexpr std::size_t kBatch = 256;
  for (const auto& p : plan(cfg)) {
    const std::string stack_name = p.name + ".ppk";
    StackWriter writer(out_dir / stack_name, static_cast<std::uint32_t>(cfg.image_side),
                       static_cast<std::uint32_t>(cfg.image_side));
    DatasetManifest manifest;
    std::vector<SimulatedSample> batch;
    for (std::size_t start = 0; start < p.size; start += kBatch) {
      const std::size_t n = std::min(kBatch, p.size - start);
      batch.assign(n, {});
      parallel_for(
          n,
          [&](std::size_t i) { batch[i] = sim.generate(p.first_index + start + i, forced_label(p, start + i)); },
          threads);
      for (std::size_t i = 0; i < n; ++i) {
        writer.append(batch[i].image);
        manifest.add({stack_name + "#" + std::to_string(start + i), as_manifest_label(batch[i].label),
                      Source::kSimulator});
      }
    }
    writer.close();
    const auto manifest_path = out_dir / (p.name + ".jsonl");
    manifest.write(manifest_path);
    manifests.push_back(manifest_path);
  }
  return manifests;
}

}  // namespace postpick
