#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

#include "postpick/error.hpp"
#include "postpick/image.hpp"
#include "postpick/image_io.hpp"
#include "postpick/manifest.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace postpick;
using testing_support::TempDir;

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void write_pgm8(const std::filesystem::path& p, std::size_t w, std::size_t h, unsigned char value) {
  std::ofstream out(p, std::ios::binary);
  out << "P5\n" << w << " " << h << "\n255\n";
  for (std::size_t i = 0; i < w * h; ++i) out.put(static_cast<char>(value));
}

WindowedImage checkerboard(std::size_t side, double a, double b) {
  WindowedImage img(side, side);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) img.at(x, y) = ((x + y) % 2 == 0) ? a : b;
  return img;
}

}  // namespace

TEST(ImageIo, ConstantPgmLoadsWithoutRescaling) {
  TempDir dir;
  write_pgm8(dir / "c.pgm", 64, 64, 100);
  const auto img = load_image((dir / "c.pgm").string());
  ASSERT_EQ(img.width(), 64u);
  ASSERT_EQ(img.height(), 64u);
  for (double v : img.pixels()) EXPECT_EQ(v, 100.0);
}

TEST(ImageIo, StackRoundTripKeepsOrder) {
  TempDir dir;
  std::vector<WindowedImage> images{checkerboard(128, 1, 0), checkerboard(128, -2.5, 7), checkerboard(128, 0.25, 3)};
  save_stack(dir / "s.ppk", images);
  const auto back = load_stack(dir / "s.ppk");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i], images[i]);
  EXPECT_EQ(load_image((dir / "s.ppk").string() + "#2"), images[2]);
}

TEST(ImageIo, StackRoundTripIsBitExactForFloat32Values) {
  TempDir dir;
  auto img = oracle::random_image(33, 17, 5);
  for (auto& v : img.pixels()) v = static_cast<float>(v);
  save_stack(dir / "r.ppk", std::vector<WindowedImage>{img});
  const auto back = load_stack_image(dir / "r.ppk", 0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(img[i]));
  }
}

TEST(ImageIo, StackHeaderLayout) {
  TempDir dir;
  WindowedImage img(8, 9);
  img.at(0, 0) = 1.5f;
  save_stack(dir / "h.ppk", std::vector<WindowedImage>{img});
  std::ifstream in(dir / "h.ppk", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(bytes.size(), 16u + 4u * 72u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PPK1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 8);
  EXPECT_EQ(bytes[12], 9);
  const std::uint32_t first = bytes[16] | bytes[17] << 8 | bytes[18] << 16 | static_cast<std::uint32_t>(bytes[19]) << 24;
  EXPECT_EQ(std::bit_cast<float>(first), 1.5f);
}

TEST(ImageIo, TruncatedStackIsDataError) {
  TempDir dir;
  std::ofstream out(dir / "t.ppk", std::ios::binary);
  out << "PPK1";
  write_u32(out, 3);
  write_u32(out, 16);
  write_u32(out, 16);
  for (int i = 0; i < 16 * 16; ++i) write_u32(out, 0);
  out.close();
  EXPECT_THROW(load_stack(dir / "t.ppk"), DataError);
}

TEST(ImageIo, NonFiniteStackIsDataError) {
  TempDir dir;
  std::ofstream out(dir / "n.ppk", std::ios::binary);
  out << "PPK1";
  write_u32(out, 1);
  write_u32(out, 8);
  write_u32(out, 8);
  for (int i = 0; i < 64; ++i) {
    write_u32(out, std::bit_cast<std::uint32_t>(i == 10 ? std::numeric_limits<float>::quiet_NaN() : 1.0f));
  }
  out.close();
  EXPECT_THROW(load_image((dir / "n.ppk").string()), DataError);
}

TEST(ImageIo, TooSmallIsSizeError) {
  TempDir dir;
  write_pgm8(dir / "s.pgm", 7, 12, 1);
  EXPECT_THROW(load_image((dir / "s.pgm").string()), SizeError);
}

TEST(ImageIo, UnreadableIsFormatError) {
  TempDir dir;
  std::ofstream(dir / "x.png") << "definitely not a png";
  EXPECT_THROW(load_image((dir / "x.png").string()), FormatError);
  EXPECT_THROW(load_image((dir / "missing.pgm").string()), FormatError);
  std::ofstream(dir / "bad.ppk") << "PPK2";
  EXPECT_THROW(load_image((dir / "bad.ppk").string()), FormatError);
}

TEST(ImageIo, Png16RoundTrip) {
  TempDir dir;
  WindowedImage img(12, 10);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i * 500);
  save_png16(dir / "p.png", img);
  EXPECT_EQ(load_image((dir / "p.png").string()), img);
}

TEST(ImageIo, DisplayPngDecodes) {
  TempDir dir;
  const auto img = oracle::random_image(16, 16, 2);
  const auto bytes = encode_png_display(img);
  std::ofstream(dir / "d.png", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                       static_cast<std::streamsize>(bytes.size()));
  const auto back = load_png(dir / "d.png");
  const auto [lo, hi] = std::minmax_element(back.pixels().begin(), back.pixels().end());
  EXPECT_EQ(*lo, 0.0);
  EXPECT_EQ(*hi, 255.0);
}

TEST(Normalize, ConstantImageBecomesZero) {
  WindowedImage img(9, 9, std::vector<double>(81, 4.25));
  const auto z = normalize(img);
  for (double v : z.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, TwoPointDistribution) {
  WindowedImage img(8, 8);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = i % 2 ? 2.0 : 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_DOUBLE_EQ(normalize(img)[i], i % 2 ? 1.0 : -1.0);
}

TEST(Normalize, MomentsAndIdempotence) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto img = oracle::random_image(20 + seed, 31, seed);
    for (auto& v : img.pixels()) v = 3.0 * v * v + 10.0;
    const auto z = normalize(img);
    double mean = 0;
    for (double v : z.pixels()) mean += v;
    mean /= static_cast<double>(z.size());
    double var = 0;
    for (double v : z.pixels()) var += (v - mean) * (v - mean);
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_LT(std::abs(std::sqrt(var / static_cast<double>(z.size())) - 1.0), 1e-9);
    const auto zz = normalize(z);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(zz[i], z[i], 1e-9);
  }
}

TEST(Normalize, AffineInvariance) {
  const auto img = oracle::random_image(24, 24, 9);
  const double scales[] = {0.01, 1.0, 3.0, 250.0};
  const double shifts[] = {-100.0, 0.0, 7.5};
  const auto base = normalize(img);
  for (double a : scales) {
    for (double b : shifts) {
      WindowedImage t = img;
      for (auto& v : t.pixels()) v = a * v + b;
      const auto z = normalize(t);
      for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], base[i], 1e-9);
    }
  }
}

TEST(Manifest, RoundTripAndRelativeResolution) {
  TempDir dir;
  DatasetManifest m;
  m.add({"a.ppk#0", ManifestLabel::kParticle, Source::kSimulator});
  m.add({"b.pgm", ManifestLabel::kUnlabeled, Source::kHand});
  m.add({"c.png", ManifestLabel::kNonParticle, Source::kPrediction});
  m.write(dir / "m.jsonl");
  const auto back = DatasetManifest::read(dir / "m.jsonl");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i], m[i]);
  EXPECT_EQ(m.serialize().substr(0, m.serialize().find('\n')),
            R"({"path":"a.ppk#0","label":"particle","source":"simulator"})");
  EXPECT_EQ(DatasetManifest::resolve("/data", "x.pgm"), "/data/x.pgm");
  EXPECT_EQ(DatasetManifest::resolve("/data", "/abs/x.pgm"), "/abs/x.pgm");
}

TEST(Manifest, DuplicatesAndBadLabelsRejected) {
  DatasetManifest m;
  m.add({"a", ManifestLabel::kParticle, Source::kHand});
  EXPECT_THROW(m.add({"a", ManifestLabel::kNonParticle, Source::kHand}), ArgumentError);
  EXPECT_THROW(DatasetManifest::parse(R"({"path":"x","label":"maybe","source":"hand"})"), FormatError);
  EXPECT_THROW(DatasetManifest::parse("{\"path\":\"x\",\"label\":\"particle\",\"source\":\"hand\"}\n"
                                      "{\"path\":\"x\",\"label\":\"particle\",\"source\":\"hand\"}\n"),
               FormatError);
}
