#include "cosparse/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <fmt/format.h>

namespace cosparse {

namespace {

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // samples per pixel after alpha stripping
  int max_value = 255;
  bool indexed = false;
  std::vector<std::array<std::uint8_t, 3>> palette;
  std::vector<int> samples;  // row-major, channels per pixel
};

bool is_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void read_from_cursor(png_structp png, png_bytep out, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, cur->bytes.data() + cur->pos, len);
  cur->pos += len;
}

void silent_warning(png_structp, png_const_charp) {}

struct PngErrorText {
  char text[160] = "";
};

[[noreturn]] void record_error(png_structp png, png_const_charp msg) {
  if (auto* sink = static_cast<PngErrorText*>(png_get_error_ptr(png)))
    std::snprintf(sink->text, sizeof sink->text, "%s", msg);
  png_longjmp(png, 1);
}

RawImage decode_png(std::span<const std::uint8_t> bytes) {
  ReadCursor cursor{bytes};
  RawImage raw;
  PngErrorText error;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, record_error, silent_warning);
  if (!png) throw ImageIoError("cannot allocate PNG reader");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("cannot allocate PNG info");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError(std::string("corrupt PNG data: ") + error.text);
  }
  png_set_read_fn(png, &cursor, read_from_cursor);
  png_read_png(png, info, PNG_TRANSFORM_PACKING | PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA,
               nullptr);

  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  raw.channels = png_get_channels(png, info);
  raw.indexed = color_type == PNG_COLOR_TYPE_PALETTE;
  raw.max_value = bit_depth >= 8 ? 255 : (1 << bit_depth) - 1;
  if (raw.indexed) {
    png_colorp colors = nullptr;
    int count = 0;
    if (png_get_PLTE(png, info, &colors, &count) == PNG_INFO_PLTE)
      for (int i = 0; i < count; ++i)
        raw.palette.push_back({colors[i].red, colors[i].green, colors[i].blue});
  }
  png_bytepp rows = png_get_rows(png, info);
  raw.samples.resize(static_cast<std::size_t>(raw.width) * raw.height * raw.channels);
  for (int y = 0; y < raw.height; ++y)
    for (int i = 0; i < raw.width * raw.channels; ++i)
      raw.samples[static_cast<std::size_t>(y) * raw.width * raw.channels + i] = rows[y][i];
  png_destroy_read_struct(&png, &info, nullptr);
  return raw;
}

RawImage decode_pnm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    long v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start || v > 1 << 24) throw ImageIoError("malformed PNM header");
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw ImageIoError("unsupported image format (expected PNG, binary PGM or PPM)");
  RawImage raw;
  raw.channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  raw.width = read_int();
  raw.height = read_int();
  raw.max_value = read_int();
  if (raw.max_value < 1 || raw.max_value > 255) throw ImageIoError("only 8-bit PNM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ImageIoError("malformed PNM header");
  ++pos;
  const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  if (bytes.size() - pos < count) throw ImageIoError("truncated PNM data");
  raw.samples.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + count));
  return raw;
}

RawImage decode_raw(std::span<const std::uint8_t> bytes) {
  RawImage raw = is_png(bytes) ? decode_png(bytes) : decode_pnm(bytes);
  if (raw.width < 1 || raw.height < 1) throw ImageIoError("image has no pixels");
  return raw;
}

class PngWriter {
 public:
  PngWriter() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, record_error, silent_warning);
    if (!png_) throw ImageIoError("cannot allocate PNG writer");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_write_struct(&png_, nullptr);
      throw ImageIoError("cannot allocate PNG info");
    }
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  // rows: width * channels bytes each.
  Bytes write(int width, int height, int color_type, std::span<const std::uint8_t> pixels,
              std::span<const png_color> palette) {
    const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    std::vector<png_const_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
      rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * channels;
    if (setjmp(png_jmpbuf(png_))) throw ImageIoError("PNG encoding failed");
    png_set_write_fn(png_, &out_, append, nullptr);
    png_set_IHDR(png_, info_, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    if (!palette.empty())
      png_set_PLTE(png_, info_, palette.data(), static_cast<int>(palette.size()));
    png_set_rows(png_, info_, const_cast<png_bytepp>(rows.data()));
    png_write_png(png_, info_, PNG_TRANSFORM_IDENTITY, nullptr);
    return std::move(out_);
  }

 private:
  static void append(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
  }

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  Bytes out_;
};

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError(fmt::format("cannot open {}", path.string()));
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError(fmt::format("cannot write {}", path.string()));
}

ColorImage decode_image(std::span<const std::uint8_t> bytes) {
  const RawImage raw = decode_raw(bytes);
  const int channels = raw.indexed ? 3 : (raw.channels >= 3 ? 3 : 1);
  ColorImage image(raw.width, raw.height, channels);
  auto out = image.values();
  const std::size_t np = image.pixel_count();
  for (std::size_t p = 0; p < np; ++p) {
    if (raw.indexed) {
      const int idx = raw.samples[p];
      if (idx >= static_cast<int>(raw.palette.size())) throw ImageIoError("palette index out of range");
      for (int c = 0; c < 3; ++c) out[p * 3 + c] = raw.palette[idx][c] / 255.0;
    } else {
      for (int c = 0; c < channels; ++c)
        out[p * channels + c] =
            static_cast<double>(raw.samples[p * raw.channels + c]) / raw.max_value;
    }
  }
  return image;
}

ColorImage read_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

Field<int> decode_index_map(std::span<const std::uint8_t> bytes) {
  const RawImage raw = decode_raw(bytes);
  Field<int> map(raw.width, raw.height);
  for (std::size_t p = 0; p < map.size(); ++p) {
    const int* s = raw.samples.data() + p * raw.channels;
    if (raw.channels >= 3 && (s[0] != s[1] || s[1] != s[2]))
      throw ImageIoError("label maps must be indexed or gray images");
    map[p] = s[0];
  }
  return map;
}

Field<int> read_index_map(const std::filesystem::path& path) {
  return decode_index_map(read_file(path));
}

Bytes encode_png(const ColorImage& image) {
  std::vector<std::uint8_t> pixels(image.values().size());
  std::transform(image.values().begin(), image.values().end(), pixels.begin(), to_byte);
  PngWriter writer;
  return writer.write(image.width(), image.height(),
                      image.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, pixels, {});
}

std::array<std::uint8_t, 3> label_color(int label) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 13> kBase{{
      {230, 25, 75}, {60, 180, 75}, {0, 130, 200}, {255, 225, 25}, {245, 130, 48},
      {145, 30, 180}, {70, 240, 240}, {240, 50, 230}, {210, 245, 60}, {250, 190, 212},
      {0, 128, 128}, {170, 110, 40}, {128, 0, 0},
  }};
  if (label < 0) return {0, 0, 0};
  auto c = kBase[static_cast<std::size_t>(label) % kBase.size()];
  // Darken repeated cycles so nearby labels stay distinguishable.
  const int cycle = label / static_cast<int>(kBase.size());
  for (auto& v : c) v = static_cast<std::uint8_t>(v >> std::min(cycle, 3));
  return c;
}

Bytes encode_label_png(const Segmentation& seg) {
  const auto& L = seg.labels;
  int top = seg.num_labels - 1;
  for (int l : L.values()) top = std::max(top, l);
  if (top + 1 > 255) throw ImageIoError("at most 255 labels fit an indexed PNG");
  std::vector<png_color> palette(static_cast<std::size_t>(top + 2));
  palette[0] = {0, 0, 0};
  for (int l = 0; l <= top; ++l) {
    const auto c = label_color(l);
    palette[l + 1] = {c[0], c[1], c[2]};
  }
  std::vector<std::uint8_t> pixels(L.size());
  for (std::size_t p = 0; p < L.size(); ++p) pixels[p] = static_cast<std::uint8_t>(L[p] + 1);
  PngWriter writer;
  return writer.write(L.width(), L.height(), PNG_COLOR_TYPE_PALETTE, pixels, palette);
}

Segmentation decode_label_png(std::span<const std::uint8_t> bytes) {
  auto map = decode_index_map(bytes);
  int top = 0;
  for (auto& v : map.values()) {
    v -= 1;
    top = std::max(top, v + 1);
  }
  return {std::move(map), top};
}

Segmentation read_label_map(const std::filesystem::path& path) {
  return decode_label_png(read_file(path));
}

ColorImage label_overlay(const ColorImage& image, const Segmentation& seg, double alpha) {
  if (seg.labels.width() != image.width() || seg.labels.height() != image.height())
    throw DimensionError("segmentation does not match image");
  ColorImage out(image.width(), image.height(), 3);
  auto dst = out.values();
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    const auto src = image.at(p);
    const int l = seg.labels[p];
    const auto c = label_color(l);
    for (int ch = 0; ch < 3; ++ch) {
      const double base = image.channels() == 3 ? src[ch] : src[0];
      dst[p * 3 + ch] = l < 0 ? base : (1.0 - alpha) * base + alpha * c[ch] / 255.0;
    }
  }
  return out;
}

}  // namespace cosparse
