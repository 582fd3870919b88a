#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "postpick/image.hpp"

namespace postpick {

/// Float stack layout: "PPK1", u32 count, u32 width, u32 height (little-endian),
/// then count*width*height float32 little-endian samples, row-major, image-major.
inline constexpr char kStackMagic[4] = {'P', 'P', 'K', '1'};

/// Loads every image in a float stack, in stored order.
std::vector<WindowedImage> load_stack(const std::filesystem::path& path);

/// Loads the image at `index` without reading the rest of the payload.
WindowedImage load_stack_image(const std::filesystem::path& path, std::size_t index);

/// Writes a float stack. All images must share one geometry. Samples are
/// narrowed to float32.
void save_stack(const std::filesystem::path& path, std::span<const WindowedImage> images);

/// Incremental stack writer for datasets that do not fit in memory at once.
class StackWriter {
 public:
  StackWriter(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height);
  ~StackWriter();
  StackWriter(const StackWriter&) = delete;
  StackWriter& operator=(const StackWriter&) = delete;

  void append(const WindowedImage& img);
  /// Patches the count field and flushes. Called by the destructor if needed.
  void close();
  std::uint32_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::uint32_t width_;
  std::uint32_t height_;
  std::uint32_t count_ = 0;
};

/// Binary PGM (P5), 8 or 16 bit.
WindowedImage load_pgm(const std::filesystem::path& path);
/// 8 or 16 bit grayscale PNG.
WindowedImage load_png(const std::filesystem::path& path);

/// Loads a windowed image from a locator:
///   "<file>.ppk#<index>"  one image of a float stack
///   "<file>.ppk"          a single-image stack
///   "<file>.pgm" / "<file>.png"
/// Integer formats map to doubles without rescaling. Throws FormatError,
/// SizeError (below 8x8) or DataError (non-finite samples, truncation).
WindowedImage load_image(const std::string& locator);

/// Min-max stretched 8-bit PNG rendering, for display.
std::vector<unsigned char> encode_png_display(const WindowedImage& img);

void save_pgm8(const std::filesystem::path& path, const WindowedImage& img);
void save_png16(const std::filesystem::path& path, const WindowedImage& img);

}  // namespace postpick
