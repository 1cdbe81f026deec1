#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <png.h>

#include "liftkit/error.hpp"
#include "liftkit/io.hpp"

namespace liftkit::io {
namespace {

static_assert(std::endian::native == std::endian::little, "PNG sample swapping assumes a little-endian host");

// libpng reports errors through longjmp; the functions that call setjmp keep
// only trivially destructible locals so no C++ destructor is skipped.
struct ErrorSink {
  char message[256];
};

void on_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

struct ReadCursor {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

void read_bytes(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + n > cur->size) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->data + cur->pos, n);
  cur->pos += n;
}

void write_bytes(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

void flush_bytes(png_structp) {}

struct Gray16 {
  std::uint32_t width;
  std::uint32_t height;
  std::uint16_t* pixels;  // malloc'd, row-major
};

bool decode_gray16(ReadCursor* cursor, Gray16* out, ErrorSink* sink) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, sink, on_error, on_warning);
  if (png == nullptr) {
    std::snprintf(sink->message, sizeof(sink->message), "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  png_bytep* volatile rows = nullptr;
  out->pixels = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    std::free(rows);
    std::free(out->pixels);
    out->pixels = nullptr;
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, cursor, read_bytes);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 16) png_error(png, "expected a 16-bit single-channel PNG");
  png_set_swap(png);
  png_read_update_info(png, info);
  out->width = w;
  out->height = h;
  out->pixels = static_cast<std::uint16_t*>(std::malloc(static_cast<std::size_t>(w) * h * sizeof(std::uint16_t) + 1));
  rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * (h + 1)));
  if (out->pixels == nullptr || rows == nullptr) png_error(png, "out of memory");
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = reinterpret_cast<png_bytep>(out->pixels + static_cast<std::size_t>(y) * w);
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  std::free(rows);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_gray16(const Gray16* in, std::string* out, ErrorSink* sink) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, sink, on_error, on_warning);
  if (png == nullptr) {
    std::snprintf(sink->message, sizeof(sink->message), "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, write_bytes, flush_bytes);
  png_set_IHDR(png, info, in->width, in->height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);
  for (std::uint32_t y = 0; y < in->height; ++y) {
    png_write_row(png, reinterpret_cast<png_const_bytep>(in->pixels + static_cast<std::size_t>(y) * in->width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

DepthImage decode_depth_png(std::string_view bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    fail(ErrorCode::kFormat, "not a PNG file");
  }
  ReadCursor cursor{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
  Gray16 image{};
  ErrorSink sink{};
  if (!decode_gray16(&cursor, &image, &sink)) fail(ErrorCode::kFormat, std::string("PNG decode failed: ") + sink.message);
  DepthImage depth(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::uint32_t v = 0; v < image.height; ++v) {
    for (std::uint32_t u = 0; u < image.width; ++u) {
      const std::uint16_t mm = image.pixels[static_cast<std::size_t>(v) * image.width + u];
      if (mm != 0) depth.set(static_cast<int>(u), static_cast<int>(v), mm / 1000.0);
    }
  }
  std::free(image.pixels);
  return depth;
}

std::string encode_depth_png(const DepthImage& depth) {
  if (depth.width() < 1 || depth.height() < 1) fail(ErrorCode::kInvalidArgument, "cannot encode an empty image");
  std::vector<std::uint16_t> pixels(depth.size(), 0);
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      const double mm = std::floor(depth.depth(u, v) * 1000.0 + 0.5);
      pixels[depth.index(u, v)] = static_cast<std::uint16_t>(std::clamp(mm, 1.0, 65535.0));
    }
  }
  const Gray16 image{static_cast<std::uint32_t>(depth.width()), static_cast<std::uint32_t>(depth.height()), pixels.data()};
  std::string out;
  ErrorSink sink{};
  if (!encode_gray16(&image, &out, &sink)) fail(ErrorCode::kFormat, std::string("PNG encode failed: ") + sink.message);
  return out;
}

}  // namespace liftkit::io
