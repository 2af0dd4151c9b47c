#include "modseg/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>

#include "modseg/error.hpp"

namespace modseg {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const char* what) {
  throw IoError(std::string(what) + ": " + path.string());
}

}  // namespace

std::int64_t Mask::area() const {
  std::int64_t n = 0;
  for (std::uint8_t b : v) n += b ? 1 : 0;
  return n;
}

Image make_image(int height, int width, std::array<std::uint8_t, 3> fill) {
  Image img;
  img.height = height;
  img.width = width;
  img.rgb.resize(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = fill[0];
    img.rgb[i + 1] = fill[1];
    img.rgb[i + 2] = fill[2];
  }
  return img;
}

Mask mask_from_labels(const LabelMap& labels, int object_id) {
  Mask m(labels.height, labels.width);
  for (std::size_t i = 0; i < labels.v.size(); ++i) {
    m.v[i] = labels.v[i] == object_id ? 1 : 0;
  }
  return m;
}

std::array<std::uint8_t, 256 * 3> label_palette() {
  std::array<std::uint8_t, 256 * 3> pal{};
  for (int i = 0; i < 256; ++i) {
    int c = i;
    std::uint8_t r = 0, g = 0, b = 0;
    for (int j = 0; j < 8; ++j) {
      r = static_cast<std::uint8_t>(r | ((c >> 0 & 1) << (7 - j)));
      g = static_cast<std::uint8_t>(g | ((c >> 1 & 1) << (7 - j)));
      b = static_cast<std::uint8_t>(b | ((c >> 2 & 1) << (7 - j)));
      c >>= 3;
    }
    pal[static_cast<std::size_t>(i) * 3] = r;
    pal[static_cast<std::size_t>(i) * 3 + 1] = g;
    pal[static_cast<std::size_t>(i) * 3 + 2] = b;
  }
  return pal;
}

Image read_image_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open image");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "png allocation failed reading");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "corrupt png");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize anything readable to 8-bit RGB.
  png_set_expand(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);

  Image img;
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.width = static_cast<int>(png_get_image_width(png, info));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(img.width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported pixel layout in image");
  }
  img.rgb.resize(static_cast<std::size_t>(img.height) * img.width * 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] = img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_image_png(const std::filesystem::path& path, const Image& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open image for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(path, "png allocation failed writing");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "png write failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

LabelMap read_label_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open label map");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "png allocation failed reading");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "corrupt png");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_PALETTE && color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "label map must be 8-bit indexed or gray");
  }
  if (png_get_bit_depth(png, info) < 8) png_set_packing(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_read_update_info(png, info);

  LabelMap lm;
  lm.height = static_cast<int>(png_get_image_height(png, info));
  lm.width = static_cast<int>(png_get_image_width(png, info));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(lm.width)) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported pixel layout in label map");
  }
  lm.v.resize(static_cast<std::size_t>(lm.height) * lm.width);
  std::vector<png_bytep> rows(static_cast<std::size_t>(lm.height));
  for (int y = 0; y < lm.height; ++y) {
    rows[static_cast<std::size_t>(y)] = lm.v.data() + static_cast<std::size_t>(y) * lm.width;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return lm;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open label map for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(path, "png allocation failed writing");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "png write failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(labels.width),
               static_cast<png_uint_32>(labels.height), 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  const auto pal = label_palette();
  std::array<png_color, 256> colors;
  for (int i = 0; i < 256; ++i) {
    colors[static_cast<std::size_t>(i)].red = pal[static_cast<std::size_t>(i) * 3];
    colors[static_cast<std::size_t>(i)].green = pal[static_cast<std::size_t>(i) * 3 + 1];
    colors[static_cast<std::size_t>(i)].blue = pal[static_cast<std::size_t>(i) * 3 + 2];
  }
  png_set_PLTE(png, info, colors.data(), 256);
  png_write_info(png, info);
  for (int y = 0; y < labels.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(labels.v.data() + static_cast<std::size_t>(y) * labels.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace {

// Align-corners source coordinate.
inline double src_coord(int i, int out_n, int in_n) {
  if (out_n == 1 || in_n == 1) return 0.0;
  return static_cast<double>(i) * (in_n - 1) / (out_n - 1);
}

}  // namespace

Image resize_image(const Image& img, int out_h, int out_w) {
  Image out;
  out.height = out_h;
  out.width = out_w;
  out.rgb.resize(static_cast<std::size_t>(out_h) * out_w * 3);
  for (int y = 0; y < out_h; ++y) {
    const double sy = src_coord(y, out_h, img.height);
    const int y0 = std::min(static_cast<int>(sy), img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double sx = src_coord(x, out_w, img.width);
      const int x0 = std::min(static_cast<int>(sx), img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - fy) * ((1 - fx) * img.px(y0, x0)[c] + fx * img.px(y0, x1)[c]) +
                         fy * ((1 - fx) * img.px(y1, x0)[c] + fx * img.px(y1, x1)[c]);
        out.px(y, x)[c] = static_cast<std::uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
      }
    }
  }
  return out;
}

Mask resize_mask(const Mask& mask, int out_h, int out_w) {
  Mask out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const double sy = src_coord(y, out_h, mask.height);
    const int y0 = std::min(static_cast<int>(sy), mask.height - 1);
    const int y1 = std::min(y0 + 1, mask.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double sx = src_coord(x, out_w, mask.width);
      const int x0 = std::min(static_cast<int>(sx), mask.width - 1);
      const int x1 = std::min(x0 + 1, mask.width - 1);
      const double fx = sx - x0;
      const double v = (1 - fy) * ((1 - fx) * mask.at(y0, x0) + fx * mask.at(y0, x1)) +
                       fy * ((1 - fx) * mask.at(y1, x0) + fx * mask.at(y1, x1));
      out.at(y, x) = v >= 0.5 ? 1 : 0;
    }
  }
  return out;
}

Image crop_image(const Image& img, int y0, int x0, int h, int w) {
  Image out;
  out.height = h;
  out.width = w;
  out.rgb.resize(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    std::memcpy(out.rgb.data() + static_cast<std::size_t>(y) * w * 3, img.px(y0 + y, x0),
                static_cast<std::size_t>(w) * 3);
  }
  return out;
}

Mask crop_mask(const Mask& mask, int y0, int x0, int h, int w) {
  Mask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(y, x) = mask.at(y0 + y, x0 + x);
  }
  return out;
}

Tensor image_to_tensor(const Image& img) {
  Tensor t({1, 3, img.height, img.width});
  const std::int64_t hw = static_cast<std::int64_t>(img.height) * img.width;
  for (std::int64_t i = 0; i < hw; ++i) {
    for (int c = 0; c < 3; ++c) {
      t.data()[c * hw + i] = static_cast<real>(img.rgb[static_cast<std::size_t>(i) * 3 + c] / 255.0);
    }
  }
  return t;
}

Mask threshold_map(const std::vector<float>& values, int height, int width, float thr) {
  Mask m(height, width);
  for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = values[i] > thr ? 1 : 0;
  return m;
}

}  // namespace modseg
