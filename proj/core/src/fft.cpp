#include "postpick/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace postpick {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* ptr = nullptr;
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

class Plan {
 public:
  Plan(std::size_t w, std::size_t h, int sign) : in_(w * h), out_(w * h), n_(w * h) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), in_.ptr, out_.ptr, sign, FFTW_ESTIMATE);
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  void run(const Complex* src, Complex* dst) {
    std::copy(src, src + n_, reinterpret_cast<Complex*>(in_.ptr));
    fftw_execute(plan_);
    const auto* o = reinterpret_cast<const Complex*>(out_.ptr);
    std::copy(o, o + n_, dst);
  }

 private:
  FftwBuffer in_;
  FftwBuffer out_;
  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

Plan& plan_for(std::size_t w, std::size_t h, int sign) {
  thread_local std::map<std::tuple<std::size_t, std::size_t, int>, std::unique_ptr<Plan>> cache;
  auto& slot = cache[{w, h, sign}];
  if (!slot) slot = std::make_unique<Plan>(w, h, sign);
  return *slot;
}

Spectrum transform(const Spectrum& in, int sign) {
  Spectrum out{in.width, in.height, std::vector<Complex>(in.data.size())};
  plan_for(in.width, in.height, sign).run(in.data.data(), out.data.data());
  return out;
}

}  // namespace

Spectrum fft2(const WindowedImage& img) {
  Spectrum grid{img.width(), img.height(), std::vector<Complex>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) grid.data[i] = img[i];
  return transform(grid, FFTW_FORWARD);
}

Spectrum fft2(const Spectrum& grid) { return transform(grid, FFTW_FORWARD); }

Spectrum ifft2(const Spectrum& spec) {
  Spectrum out = transform(spec, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(out.data.size());
  for (auto& c : out.data) c *= scale;
  return out;
}

double fft_frequency(std::size_t k, std::size_t n) {
  const auto ki = static_cast<long long>(k);
  const auto ni = static_cast<long long>(n);
  const long long s = 2 * ki < ni ? ki : ki - ni;
  return static_cast<double>(s) / static_cast<double>(n);
}

WindowedImage real_part(const Spectrum& grid) {
  WindowedImage out(grid.width, grid.height);
  for (std::size_t i = 0; i < grid.data.size(); ++i) out[i] = grid.data[i].real();
  return out;
}

}  // namespace postpick
