#include <cmath>
#include <numbers>
#include <numeric>

#include "postpick/error.hpp"
#include "postpick/simulator.hpp"

namespace postpick {

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kParticleProxy: return "particle_proxy";
    case TemplateKind::kPlate: return "plate";
    case TemplateKind::kCylinder: return "cylinder";
    case TemplateKind::kSphere: return "sphere";
    case TemplateKind::kVoid: return "void";
  }
  return "void";
}

TemplateKind parse_template_kind(std::string_view s) {
  if (s == "particle_proxy") return TemplateKind::kParticleProxy;
  if (s == "plate") return TemplateKind::kPlate;
  if (s == "cylinder") return TemplateKind::kCylinder;
  if (s == "sphere") return TemplateKind::kSphere;
  if (s == "void") return TemplateKind::kVoid;
  throw ArgumentError("unknown template kind '" + std::string(s) + "'");
}

double Volume::sum() const { return std::accumulate(density.begin(), density.end(), 0.0); }

namespace {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// 1 inside radius - w/2, 0 outside radius + w/2, raised cosine between.
double soft_inside(double distance, double radius) {
  const double inner = radius - 0.5 * kSoftEdgeWidth;
  if (distance <= inner) return 1.0;
  if (distance >= radius + 0.5 * kSoftEdgeWidth) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (distance - inner) / kSoftEdgeWidth));
}

Vec3 random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Vec3 v{g(rng), g(rng), g(rng)};
    const double n = norm(v);
    if (n > 1e-9) return {v[0] / n, v[1] / n, v[2] / n};
  }
}

template <typename F>
void fill(Volume& vol, F&& density_at) {
  const double c = (static_cast<double>(vol.side) - 1.0) / 2.0;
  for (std::size_t z = 0; z < vol.side; ++z) {
    for (std::size_t y = 0; y < vol.side; ++y) {
      for (std::size_t x = 0; x < vol.side; ++x) {
        const Vec3 r{static_cast<double>(x) - c, static_cast<double>(y) - c, static_cast<double>(z) - c};
        vol.density[(z * vol.side + y) * vol.side + x] = density_at(r);
      }
    }
  }
}

}  // namespace

Volume make_volume(TemplateKind kind, std::size_t side, std::uint64_t seed) {
  if (side < 32) throw ArgumentError("make_volume: side must be >= 32");
  Volume vol{side, kind, std::vector<double>(side * side * side, 0.0)};
  const double s = static_cast<double>(side);
  const double confine = 0.45 * s;
  std::mt19937_64 rng(seed);

  switch (kind) {
    case TemplateKind::kVoid:
      break;
    case TemplateKind::kSphere: {
      const double radius = 0.3 * s;
      fill(vol, [&](const Vec3& r) { return soft_inside(norm(r), radius); });
      break;
    }
    case TemplateKind::kPlate: {
      const Vec3 normal = random_unit_vector(rng);
      const double half_thickness = 0.075 * s;
      fill(vol, [&](const Vec3& r) {
        return soft_inside(std::abs(dot(r, normal)), half_thickness) * soft_inside(norm(r), confine);
      });
      break;
    }
    case TemplateKind::kCylinder: {
      const Vec3 axis = random_unit_vector(rng);
      const double radius = 0.12 * s;
      fill(vol, [&](const Vec3& r) {
        const double along = dot(r, axis);
        const double radial = std::sqrt(std::max(0.0, dot(r, r) - along * along));
        return soft_inside(radial, radius) * soft_inside(norm(r), confine);
      });
      break;
    }
    case TemplateKind::kParticleProxy: {
      constexpr int kBalls = 40;
      const double bound = 0.35 * s;
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      std::uniform_real_distribution<double> radius_draw(0.03 * s, 0.08 * s);
      std::vector<std::pair<Vec3, double>> balls;
      while (balls.size() < kBalls) {
        const Vec3 p{unit(rng) * bound, unit(rng) * bound, unit(rng) * bound};
        if (norm(p) > bound) continue;
        balls.emplace_back(p, radius_draw(rng));
      }
      fill(vol, [&](const Vec3& r) {
        double v = 0.0;
        for (const auto& [centre, radius] : balls) {
          const Vec3 d{r[0] - centre[0], r[1] - centre[1], r[2] - centre[2]};
          v = std::max(v, soft_inside(norm(d), radius));
        }
        return v;
      });
      break;
    }
  }
  return vol;
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0)) throw ArgumentError("Rotation: zero quaternion");
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Rotation r;
  r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
         2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
  return r;
}

Rotation Rotation::about_axis(std::array<double, 3> axis, double angle) {
  const double n = norm(axis);
  if (!(n > 0)) throw ArgumentError("Rotation: zero axis");
  const double s = std::sin(angle / 2) / n;
  return from_quaternion(std::cos(angle / 2), axis[0] * s, axis[1] * s, axis[2] * s);
}

std::array<double, 3> Rotation::apply(const std::array<double, 3>& v) const {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Rotation Rotation::transposed() const {
  Rotation t;
  t.m = {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
  return t;
}

Rotation random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double u1 = u(rng), u2 = u(rng), u3 = u(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
  return Rotation::from_quaternion(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3));
}

namespace {

double voxel_or_zero(const Volume& vol, std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) {
  const auto n = static_cast<std::ptrdiff_t>(vol.side);
  if (x < 0 || y < 0 || z < 0 || x >= n || y >= n || z >= n) return 0.0;
  return vol.density[static_cast<std::size_t>((z * n + y) * n + x)];
}

// Voxels outside the grid read as zero.
double trilinear(const Volume& vol, double qx, double qy, double qz) {
  // Samples below -1 touch no voxel; above it, truncation of q + 2 is floor.
  if (qx < -1.0 || qy < -1.0 || qz < -1.0) return 0.0;
  const auto x0 = static_cast<std::ptrdiff_t>(qx + 2.0) - 2, y0 = static_cast<std::ptrdiff_t>(qy + 2.0) - 2,
             z0 = static_cast<std::ptrdiff_t>(qz + 2.0) - 2;
  const double fx = qx - static_cast<double>(x0), fy = qy - static_cast<double>(y0),
               fz = qz - static_cast<double>(z0);
  const auto n = static_cast<std::ptrdiff_t>(vol.side);
  double c000, c100, c010, c110, c001, c101, c011, c111;
  if (x0 >= 0 && y0 >= 0 && z0 >= 0 && x0 + 1 < n && y0 + 1 < n && z0 + 1 < n) {
    const double* p = vol.density.data() + (z0 * n + y0) * n + x0;
    const std::ptrdiff_t sy = n, sz = n * n;
    c000 = p[0], c100 = p[1], c010 = p[sy], c110 = p[sy + 1];
    c001 = p[sz], c101 = p[sz + 1], c011 = p[sz + sy], c111 = p[sz + sy + 1];
  } else {
    if (x0 < -1 || y0 < -1 || z0 < -1 || x0 >= n || y0 >= n || z0 >= n) return 0.0;
    c000 = voxel_or_zero(vol, x0, y0, z0), c100 = voxel_or_zero(vol, x0 + 1, y0, z0);
    c010 = voxel_or_zero(vol, x0, y0 + 1, z0), c110 = voxel_or_zero(vol, x0 + 1, y0 + 1, z0);
    c001 = voxel_or_zero(vol, x0, y0, z0 + 1), c101 = voxel_or_zero(vol, x0 + 1, y0, z0 + 1);
    c011 = voxel_or_zero(vol, x0, y0 + 1, z0 + 1), c111 = voxel_or_zero(vol, x0 + 1, y0 + 1, z0 + 1);
  }
  const double c00 = c000 + (c100 - c000) * fx;
  const double c10 = c010 + (c110 - c010) * fx;
  const double c01 = c001 + (c101 - c001) * fx;
  const double c11 = c011 + (c111 - c011) * fx;
  const double c0 = c00 + (c10 - c00) * fy;
  const double c1 = c01 + (c11 - c01) * fy;
  return c0 + (c1 - c0) * fz;
}

}  // namespace

WindowedImage project(const Volume& vol, const Rotation& rotation, std::size_t side) {
  WindowedImage out(side, side);
  if (vol.kind == TemplateKind::kVoid) return out;
  const Rotation inv = rotation.transposed();
  const double cv = (static_cast<double>(vol.side) - 1.0) / 2.0;
  const double ci = (static_cast<double>(side) - 1.0) / 2.0;
  // Every template lives inside this ball; rays outside it contribute nothing.
  const double reach = 0.5 * static_cast<double>(vol.side);
  const double reach_sq = reach * reach;
  const auto& m = inv.m;
  // Slice-major traversal keeps neighbouring samples in neighbouring voxels.
  // Each pixel still accumulates its ray in increasing z.
  for (std::size_t k = 0; k < vol.side; ++k) {
    const double pz = static_cast<double>(k) - cv;
    const double rem = reach_sq - pz * pz;
    if (rem < 0.0) continue;
    for (std::size_t j = 0; j < side; ++j) {
      const double py = static_cast<double>(j) - ci;
      if (py * py > rem) continue;
      const double bx = m[1] * py + m[2] * pz + cv;
      const double by = m[4] * py + m[5] * pz + cv;
      const double bz = m[7] * py + m[8] * pz + cv;
      double* row = &out.at(0, j);
      for (std::size_t i = 0; i < side; ++i) {
        const double px = static_cast<double>(i) - ci;
        if (px * px + py * py > rem) continue;
        row[i] += trilinear(vol, bx + m[0] * px, by + m[3] * px, bz + m[6] * px);
      }
    }
  }
  return out;
}

}  // namespace postpick
