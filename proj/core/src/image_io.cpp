#include "postpick/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <csetjmp>
#include <sstream>

#include "postpick/error.hpp"

namespace postpick {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kHeaderBytes = 16;

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32le(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

float read_f32le(const unsigned char* p) { return std::bit_cast<float>(read_u32le(p)); }

void write_f32le(unsigned char* p, float v) { write_u32le(p, std::bit_cast<std::uint32_t>(v)); }

struct StackHeader {
  std::uint32_t count = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

std::ifstream open_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::uintmax_t file_size_or_zero(const fs::path& path) {
  std::error_code ec;
  const auto n = fs::file_size(path, ec);
  return ec ? 0 : n;
}

StackHeader read_stack_header(std::ifstream& in, const fs::path& path) {
  std::array<unsigned char, kHeaderBytes> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size()) ||
      std::memcmp(buf.data(), kStackMagic, 4) != 0) {
    throw FormatError("not a PPK1 stack: " + path.string());
  }
  StackHeader h{read_u32le(buf.data() + 4), read_u32le(buf.data() + 8), read_u32le(buf.data() + 12)};
  if (h.width < WindowedImage::kMinSide || h.height < WindowedImage::kMinSide) {
    throw SizeError("stack image size " + std::to_string(h.width) + "x" + std::to_string(h.height) +
                    " is below 8x8: " + path.string());
  }
  const std::uintmax_t need = kHeaderBytes + std::uintmax_t{h.count} * h.width * h.height * 4;
  if (file_size_or_zero(path) < need) {
    throw DataError("stack payload shorter than declared count x width x height: " + path.string());
  }
  return h;
}

WindowedImage decode_frame(const unsigned char* data, std::uint32_t w, std::uint32_t h,
                           const std::string& what) {
  std::vector<double> px(std::size_t{w} * h);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const float v = read_f32le(data + 4 * i);
    if (!std::isfinite(v)) throw DataError("non-finite sample in " + what);
    px[i] = v;
  }
  return WindowedImage(w, h, std::move(px));
}

void check_min_size(std::size_t w, std::size_t h, const std::string& what) {
  if (w < WindowedImage::kMinSide || h < WindowedImage::kMinSide) {
    throw SizeError("image " + what + " is " + std::to_string(w) + "x" + std::to_string(h) +
                    ", below the 8x8 minimum");
  }
}

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

std::vector<WindowedImage> load_stack(const fs::path& path) {
  auto in = open_binary(path);
  const StackHeader h = read_stack_header(in, path);
  const std::size_t frame = std::size_t{h.width} * h.height * 4;
  std::vector<unsigned char> buf(frame);
  std::vector<WindowedImage> out;
  out.reserve(h.count);
  for (std::uint32_t i = 0; i < h.count; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(frame));
    if (in.gcount() != static_cast<std::streamsize>(frame)) throw DataError("truncated stack " + path.string());
    out.push_back(decode_frame(buf.data(), h.width, h.height, path.string()));
  }
  return out;
}

WindowedImage load_stack_image(const fs::path& path, std::size_t index) {
  auto in = open_binary(path);
  const StackHeader h = read_stack_header(in, path);
  if (index >= h.count) {
    throw DataError("index " + std::to_string(index) + " out of range for " + path.string());
  }
  const std::size_t frame = std::size_t{h.width} * h.height * 4;
  in.seekg(static_cast<std::streamoff>(kHeaderBytes + index * frame));
  std::vector<unsigned char> buf(frame);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(frame));
  if (in.gcount() != static_cast<std::streamsize>(frame)) throw DataError("truncated stack " + path.string());
  return decode_frame(buf.data(), h.width, h.height, path.string() + "#" + std::to_string(index));
}

void save_stack(const fs::path& path, std::span<const WindowedImage> images) {
  if (images.empty()) throw ArgumentError("save_stack: no images");
  StackWriter w(path, static_cast<std::uint32_t>(images.front().width()),
                static_cast<std::uint32_t>(images.front().height()));
  for (const auto& img : images) w.append(img);
  w.close();
}

StackWriter::StackWriter(const fs::path& path, std::uint32_t width, std::uint32_t height)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), width_(width), height_(height) {
  if (!out_) throw FormatError("cannot create " + path.string());
  std::array<unsigned char, kHeaderBytes> hdr{};
  std::memcpy(hdr.data(), kStackMagic, 4);
  write_u32le(hdr.data() + 4, 0);
  write_u32le(hdr.data() + 8, width);
  write_u32le(hdr.data() + 12, height);
  out_.write(reinterpret_cast<const char*>(hdr.data()), hdr.size());
}

StackWriter::~StackWriter() {
  try {
    close();
  } catch (...) {
  }
}

void StackWriter::append(const WindowedImage& img) {
  if (!out_.is_open()) throw ArgumentError("StackWriter already closed");
  if (img.width() != width_ || img.height() != height_) {
    throw ArgumentError("stack images must share one geometry");
  }
  std::vector<unsigned char> buf(img.size() * 4);
  for (std::size_t i = 0; i < img.size(); ++i) write_f32le(buf.data() + 4 * i, static_cast<float>(img[i]));
  out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  ++count_;
}

void StackWriter::close() {
  if (!out_.is_open()) return;
  unsigned char cnt[4];
  write_u32le(cnt, count_);
  out_.seekp(4);
  out_.write(reinterpret_cast<const char*>(cnt), 4);
  out_.close();
  if (out_.fail()) throw FormatError("failed writing " + path_.string());
}

WindowedImage load_pgm(const fs::path& path) {
  auto in = open_binary(path);
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string line;
        std::getline(in, line);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  if (token() != "P5") throw FormatError("not a binary PGM: " + path.string());
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::exception&) {
    throw FormatError("bad PGM header: " + path.string());
  }
  if (maxval == 0 || maxval > 65535) throw FormatError("bad PGM maxval: " + path.string());
  check_min_size(w, h, path.string());
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> buf(w * h * bpp);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw DataError("truncated PGM " + path.string());
  std::vector<double> px(w * h);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = bpp == 1 ? buf[i] : static_cast<double>((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  return WindowedImage(w, h, std::move(px));
}

namespace {

// libpng reports errors by longjmp; the helpers below keep only trivially
// destructible locals between setjmp and the libpng calls.

struct PngHeader {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int color = 0;
  int depth = 0;
};

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}
void png_flush_noop(png_structp) {}

bool png_read_header(png_structp png, png_infop info, FILE* f, PngHeader* hdr) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  hdr->width = png_get_image_width(png, info);
  hdr->height = png_get_image_height(png, info);
  hdr->color = png_get_color_type(png, info);
  hdr->depth = png_get_bit_depth(png, info);
  return true;
}

bool png_read_rows(png_structp png, unsigned char* data, std::size_t stride, png_uint_32 rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  for (png_uint_32 y = 0; y < rows; ++y) png_read_row(png, data + y * stride, nullptr);
  return true;
}

bool png_write_gray(png_structp png, png_infop info, png_uint_32 w, png_uint_32 h, int depth,
                    const unsigned char* data) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_IHDR(png, info, w, h, depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = std::size_t{w} * static_cast<std::size_t>(depth / 8);
  for (png_uint_32 y = 0; y < h; ++y) png_write_row(png, const_cast<png_bytep>(data + y * stride));
  png_write_end(png, nullptr);
  return true;
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

class PngReader {
 public:
  PngReader() {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png_) info_ = png_create_info_struct(png_);
    if (!png_ || !info_) throw FormatError("libpng initialisation failed");
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
  png_structp png() const { return png_; }
  png_infop info() const { return info_; }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

class PngWriter {
 public:
  PngWriter() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png_) info_ = png_create_info_struct(png_);
    if (!png_ || !info_) throw FormatError("libpng initialisation failed");
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;
  png_structp png() const { return png_; }
  png_infop info() const { return info_; }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

}  // namespace

WindowedImage load_png(const fs::path& path) {
  std::unique_ptr<FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw FormatError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("not a PNG: " + path.string());
  }
  PngReader reader;
  PngHeader hdr;
  if (!png_read_header(reader.png(), reader.info(), f.get(), &hdr)) {
    throw FormatError("corrupt PNG header: " + path.string());
  }
  if (hdr.color != PNG_COLOR_TYPE_GRAY || (hdr.depth != 8 && hdr.depth != 16)) {
    throw FormatError("only 8/16-bit grayscale PNG is supported: " + path.string());
  }
  check_min_size(hdr.width, hdr.height, path.string());
  const std::size_t bpp = static_cast<std::size_t>(hdr.depth / 8);
  const std::size_t stride = std::size_t{hdr.width} * bpp;
  std::vector<unsigned char> raw(stride * hdr.height);
  if (!png_read_rows(reader.png(), raw.data(), stride, hdr.height)) {
    throw DataError("corrupt PNG payload: " + path.string());
  }
  std::vector<double> px(std::size_t{hdr.width} * hdr.height);
  for (std::size_t i = 0; i < px.size(); ++i) {
    // 16-bit PNG samples are big-endian.
    px[i] = bpp == 1 ? raw[i] : static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return WindowedImage(hdr.width, hdr.height, std::move(px));
}

WindowedImage load_image(const std::string& locator) {
  std::string file = locator;
  std::optional<std::size_t> index;
  if (const auto hash = locator.rfind('#'); hash != std::string::npos) {
    const std::string tail = locator.substr(hash + 1);
    if (!tail.empty() && std::all_of(tail.begin(), tail.end(), [](unsigned char c) { return std::isdigit(c); })) {
      file = locator.substr(0, hash);
      index = std::stoull(tail);
    }
  }
  const fs::path p(file);
  if (!fs::exists(p)) throw FormatError("no such file: " + file);
  const std::string ext = lower_ext(p);
  if (ext == ".pgm") return load_pgm(p);
  if (ext == ".png") return load_png(p);
  if (ext == ".ppk") {
    if (index) return load_stack_image(p, *index);
    auto in = open_binary(p);
    const StackHeader h = read_stack_header(in, p);
    if (h.count != 1) throw FormatError("stack holds " + std::to_string(h.count) + " images; use <file>#<index>");
    return load_stack_image(p, 0);
  }
  throw FormatError("unsupported image format: " + file);
}

std::vector<unsigned char> encode_png_display(const WindowedImage& img) {
  if (img.empty()) throw ArgumentError("encode_png_display: empty image");
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels().begin(), img.pixels().end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<unsigned char> rows(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    rows[i] = range > 0 ? static_cast<unsigned char>(std::lround(255.0 * (img[i] - lo) / range)) : 0;
  }
  std::vector<unsigned char> out;
  PngWriter writer;
  png_set_write_fn(writer.png(), &out, png_write_to_vector, png_flush_noop);
  if (!png_write_gray(writer.png(), writer.info(), static_cast<png_uint_32>(img.width()),
                      static_cast<png_uint_32>(img.height()), 8, rows.data())) {
    throw FormatError("PNG encoding failed");
  }
  return out;
}

void save_png16(const fs::path& path, const WindowedImage& img) {
  std::vector<unsigned char> rows(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(std::clamp(std::lround(img[i]), 0L, 65535L));
    rows[2 * i] = static_cast<unsigned char>(v >> 8);
    rows[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
  }
  std::unique_ptr<FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw FormatError("cannot create " + path.string());
  PngWriter writer;
  png_init_io(writer.png(), f.get());
  if (!png_write_gray(writer.png(), writer.info(), static_cast<png_uint_32>(img.width()),
                      static_cast<png_uint_32>(img.height()), 16, rows.data())) {
    throw FormatError("PNG encoding failed: " + path.string());
  }
}

void save_pgm8(const fs::path& path, const WindowedImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot create " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.put(static_cast<char>(std::clamp(std::lround(img[i]), 0L, 255L)));
  }
}

}  // namespace postpick
