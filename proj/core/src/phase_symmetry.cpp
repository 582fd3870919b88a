#include "postpick/phase_symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <string>
#include <tuple>

#include "postpick/error.hpp"

namespace postpick {

void PhaseSymmetryParams::validate() const {
  if (n_scales < 1) throw ArgumentError("phase symmetry: n_scales must be >= 1");
  if (n_orientations < 1) throw ArgumentError("phase symmetry: n_orientations must be >= 1");
  if (!(min_wavelength >= 2.0)) throw ArgumentError("phase symmetry: min_wavelength must be >= 2");
  if (!(scale_multiplier > 1.0)) throw ArgumentError("phase symmetry: scale_multiplier must be > 1");
  if (!(sigma_on_f > 0.0 && sigma_on_f < 1.0)) throw ArgumentError("phase symmetry: sigma_on_f must be in (0, 1)");
  if (!(noise_k >= 0.0)) throw ArgumentError("phase symmetry: noise_k must be >= 0");
}

LogGaborBank make_log_gabor_bank(std::size_t width, std::size_t height, const PhaseSymmetryParams& params) {
  params.validate();
  LogGaborBank bank{width, height, {}, {}};
  const std::size_t n = width * height;
  std::vector<double> radius(n), theta(n);
  std::vector<bool> nyquist(n, false);
  for (std::size_t ky = 0; ky < height; ++ky) {
    const double v = fft_frequency(ky, height);
    for (std::size_t kx = 0; kx < width; ++kx) {
      const double u = fft_frequency(kx, width);
      const std::size_t i = ky * width + kx;
      radius[i] = std::hypot(u, v);
      // Image rows grow downward; flip v so angles are counter-clockwise.
      theta[i] = std::atan2(-v, u);
      nyquist[i] = (width % 2 == 0 && 2 * kx == width) || (height % 2 == 0 && 2 * ky == height);
    }
  }

  const double log_sigma_sq = 2.0 * std::log(params.sigma_on_f) * std::log(params.sigma_on_f);
  for (int s = 0; s < params.n_scales; ++s) {
    const double wavelength = params.min_wavelength * std::pow(params.scale_multiplier, s);
    const double fo = 1.0 / wavelength;
    std::vector<double> filt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (radius[i] == 0.0 || nyquist[i]) continue;
      const double lg = std::log(radius[i] / fo);
      const double lowpass = 1.0 / (1.0 + std::pow(radius[i] / kLowpassCutoff, 2 * kLowpassOrder));
      filt[i] = std::exp(-(lg * lg) / log_sigma_sq) * lowpass;
    }
    bank.radial.push_back(std::move(filt));
  }

  const double theta_sigma = std::numbers::pi / params.n_orientations / kThetaOnSigma;
  for (int o = 0; o < params.n_orientations; ++o) {
    const double angle = o * std::numbers::pi / params.n_orientations;
    const double ca = std::cos(angle), sa = std::sin(angle);
    std::vector<double> spread(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double st = std::sin(theta[i]), ct = std::cos(theta[i]);
      const double ds = st * ca - ct * sa;
      const double dc = ct * ca + st * sa;
      const double dtheta = std::abs(std::atan2(ds, dc));
      spread[i] = std::exp(-(dtheta * dtheta) / (2.0 * theta_sigma * theta_sigma));
    }
    bank.angular.push_back(std::move(spread));
  }
  return bank;
}

namespace {

double median(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

const LogGaborBank& cached_bank(std::size_t width, std::size_t height, const PhaseSymmetryParams& params) {
  using Key = std::tuple<std::size_t, std::size_t, int, int, double, double, double>;
  thread_local std::map<Key, LogGaborBank> cache;
  const Key key{width, height, params.n_scales, params.n_orientations, params.min_wavelength,
                params.scale_multiplier, params.sigma_on_f};
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_log_gabor_bank(width, height, params)).first;
  return it->second;
}

}  // namespace

WindowedImage phase_symmetry(const WindowedImage& img, const PhaseSymmetryParams& params) {
  params.validate();
  const double min_side = static_cast<double>(std::min(img.width(), img.height()));
  if (min_side < 2.0 * params.min_wavelength) {
    throw SizeError("phase symmetry: image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " is smaller than twice the minimum wavelength");
  }
  const std::size_t n = img.size();
  const LogGaborBank& bank = cached_bank(img.width(), img.height(), params);
  const Spectrum spectrum = fft2(img);

  std::vector<double> total_energy(n, 0.0);
  std::vector<double> total_amplitude(n, 0.0);
  std::vector<double> energy(n);
  std::vector<double> smallest_scale_amplitude(n);
  Spectrum filtered{img.width(), img.height(), std::vector<Complex>(n)};

  const double inv_mult = 1.0 / params.scale_multiplier;
  for (int o = 0; o < params.n_orientations; ++o) {
    std::fill(energy.begin(), energy.end(), 0.0);
    const auto& spread = bank.angular[static_cast<std::size_t>(o)];
    for (int s = 0; s < params.n_scales; ++s) {
      const auto& radial = bank.radial[static_cast<std::size_t>(s)];
      for (std::size_t i = 0; i < n; ++i) filtered.data[i] = spectrum.data[i] * (radial[i] * spread[i]);
      const Spectrum response = ifft2(filtered);
      for (std::size_t i = 0; i < n; ++i) {
        const double even = response.data[i].real();
        const double odd = response.data[i].imag();
        const double amplitude = std::sqrt(even * even + odd * odd);
        total_amplitude[i] += amplitude;
        switch (params.polarity) {
          case Polarity::kBoth: energy[i] += std::abs(even) - std::abs(odd); break;
          case Polarity::kBright: energy[i] += even - std::abs(odd); break;
          case Polarity::kDark: energy[i] += -even - std::abs(odd); break;
        }
        if (s == 0) smallest_scale_amplitude[i] = amplitude;
      }
    }
    // Noise model: Rayleigh-distributed smallest-scale amplitude, whose
    // median gives the scale parameter; summed over the geometric scale series.
    const double tau = median(smallest_scale_amplitude) / std::sqrt(std::log(4.0));
    const double total_tau = tau * (1.0 - std::pow(inv_mult, params.n_scales)) / (1.0 - inv_mult);
    const double noise_mean = total_tau * std::sqrt(std::numbers::pi / 2.0);
    const double noise_sigma = total_tau * std::sqrt((4.0 - std::numbers::pi) / 2.0);
    const double threshold = noise_mean + params.noise_k * noise_sigma;
    for (std::size_t i = 0; i < n; ++i) total_energy[i] += std::max(energy[i] - threshold, 0.0);
  }

  WindowedImage out(img.width(), img.height());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::clamp(total_energy[i] / (total_amplitude[i] + kSymmetryEpsilon), 0.0, 1.0);
  }
  return out;
}

}  // namespace postpick
