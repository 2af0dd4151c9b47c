#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "modseg/tensor.hpp"

namespace modseg {

// 8-bit interleaved RGB, row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // height*width*3

  std::uint8_t* px(int y, int x) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* px(int y, int x) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// Per-pixel object ids; 0 is background.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> v;

  std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
};

// Binary foreground mask (values 0/1).
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> v;

  Mask() = default;
  Mask(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w, 0) {}
  std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t area() const;
};

Image make_image(int height, int width, std::array<std::uint8_t, 3> fill = {0, 0, 0});
Mask mask_from_labels(const LabelMap& labels, int object_id);

// PNG round trips. Frames are 8-bit RGB; label maps are 8-bit single-channel
// indexed (palette) files, DAVIS-style. Readers throw IoError naming the file.
Image read_image_png(const std::filesystem::path& path);
void write_image_png(const std::filesystem::path& path, const Image& img);
LabelMap read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);

// The fixed palette used for indexed masks (VOC-style bit-interleaved map).
std::array<std::uint8_t, 256 * 3> label_palette();

// Align-corners bilinear resize; masks threshold the interpolant at 0.5.
Image resize_image(const Image& img, int out_h, int out_w);
Mask resize_mask(const Mask& mask, int out_h, int out_w);

Image crop_image(const Image& img, int y0, int x0, int h, int w);
Mask crop_mask(const Mask& mask, int y0, int x0, int h, int w);

// [1,3,H,W] tensor scaled to [0,1].
Tensor image_to_tensor(const Image& img);

// Probability/heatmap threshold back to a mask.
Mask threshold_map(const std::vector<float>& values, int height, int width, float thr);

}  // namespace modseg
