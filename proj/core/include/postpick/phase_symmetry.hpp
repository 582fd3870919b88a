#pragma once

#include <vector>

#include "postpick/fft.hpp"
#include "postpick/image.hpp"

namespace postpick {

enum class Polarity { kBright, kDark, kBoth };

/// Log-Gabor quadrature filter bank settings. Defaults are Kovesi's
/// standard phase-symmetry parameters.
struct PhaseSymmetryParams {
  int n_scales = 5;
  int n_orientations = 6;
  double min_wavelength = 3.0;
  double scale_multiplier = 2.1;
  double sigma_on_f = 0.55;
  double noise_k = 2.0;
  Polarity polarity = Polarity::kBoth;

  /// Throws ArgumentError when an invariant is violated.
  void validate() const;
};

/// Angular spread of each orientation filter relative to the orientation spacing.
inline constexpr double kThetaOnSigma = 1.2;
inline constexpr double kLowpassCutoff = 0.45;
inline constexpr int kLowpassOrder = 15;
inline constexpr double kSymmetryEpsilon = 1e-4;

/// Frequency-domain filters for one image geometry. radial[s] is the
/// low-passed log-Gabor magnitude for scale s; angular[o] the spread for
/// orientation o. The filter for (s, o) is their product. DC and the Nyquist
/// row/column are zero, which keeps the bank exactly equivariant under
/// 90 degree rotations.
struct LogGaborBank {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::vector<double>> radial;
  std::vector<std::vector<double>> angular;
};

LogGaborBank make_log_gabor_bank(std::size_t width, std::size_t height, const PhaseSymmetryParams& params);

/// Per-pixel local symmetry in [0, 1]. Throws SizeError when
/// min(W, H) < 2 * min_wavelength.
WindowedImage phase_symmetry(const WindowedImage& img, const PhaseSymmetryParams& params = {});

}  // namespace postpick
