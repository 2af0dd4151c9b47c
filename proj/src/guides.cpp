#include "modseg/guides.hpp"

#include <algorithm>
#include <cmath>

#include "modseg/error.hpp"

namespace modseg {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Bbox {
  int x0, y0, x1, y1;  // inclusive
};

Bbox mask_bbox(const Mask& mask) {
  Bbox b{mask.width, mask.height, -1, -1};
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  if (b.x1 < 0) throw EmptyMaskError("mask has no foreground pixels");
  return b;
}

std::uint8_t round_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
}

// Bilinear sample of an RGB image; out-of-bounds reads the mean color.
void sample_rgb(const Image& img, double x, double y, std::uint8_t out[3]) {
  if (x < 0 || y < 0 || x > img.width - 1 || y > img.height - 1) {
    out[0] = kMeanColor[0];
    out[1] = kMeanColor[1];
    out[2] = kMeanColor[2];
    return;
  }
  const int x0 = std::min(static_cast<int>(x), img.width - 1);
  const int y0 = std::min(static_cast<int>(y), img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  for (int c = 0; c < 3; ++c) {
    const double v = (1 - fy) * ((1 - fx) * img.px(y0, x0)[c] + fx * img.px(y0, x1)[c]) +
                     fy * ((1 - fx) * img.px(y1, x0)[c] + fx * img.px(y1, x1)[c]);
    out[c] = round_u8(v);
  }
}

double sample_mask(const Mask& mask, double x, double y) {
  if (x < 0 || y < 0 || x > mask.width - 1 || y > mask.height - 1) return 0.0;
  const int x0 = std::min(static_cast<int>(x), mask.width - 1);
  const int y0 = std::min(static_cast<int>(y), mask.height - 1);
  const int x1 = std::min(x0 + 1, mask.width - 1);
  const int y1 = std::min(y0 + 1, mask.height - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * mask.at(y0, x0) + fx * mask.at(y0, x1)) +
         fy * ((1 - fx) * mask.at(y1, x0) + fx * mask.at(y1, x1));
}

}  // namespace

MaskStats mask_stats(const Mask& mask) {
  double sx = 0, sy = 0;
  std::int64_t n = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      sx += x;
      sy += y;
      ++n;
    }
  }
  if (n == 0) throw EmptyMaskError("mask_stats on an empty mask");
  MaskStats st;
  st.area = n;
  st.mu_x = sx / static_cast<double>(n);
  st.mu_y = sy / static_cast<double>(n);
  double vx = 0, vy = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      vx += (x - st.mu_x) * (x - st.mu_x);
      vy += (y - st.mu_y) * (y - st.mu_y);
    }
  }
  st.sigma_x = std::max(kSigmaFloor, std::sqrt(vx / static_cast<double>(n)));
  st.sigma_y = std::max(kSigmaFloor, std::sqrt(vy / static_cast<double>(n)));
  return st;
}

SpatialGuide gaussian_heatmap(const MaskStats& stats, int height, int width) {
  SpatialGuide g;
  g.height = height;
  g.width = width;
  g.m.resize(static_cast<std::size_t>(height) * width);
  const double ax = 1.0 / (2.0 * stats.sigma_x * stats.sigma_x);
  const double ay = 1.0 / (2.0 * stats.sigma_y * stats.sigma_y);
  float peak = 0.0f;
  for (int y = 0; y < height; ++y) {
    const double dy = (y - stats.mu_y) * (y - stats.mu_y) * ay;
    for (int x = 0; x < width; ++x) {
      const double dx = (x - stats.mu_x) * (x - stats.mu_x) * ax;
      const float v = static_cast<float>(std::exp(-(dx + dy)));
      g.m[static_cast<std::size_t>(y) * width + x] = v;
      peak = std::max(peak, v);
    }
  }
  // Peak-normalize so the pixel nearest the center reads exactly 1.
  if (peak > 0.0f && peak != 1.0f) {
    for (float& v : g.m) v /= peak;
  }
  return g;
}

Image replace_background(const Image& image, const Mask& mask) {
  if (image.height != mask.height || image.width != mask.width) {
    throw ShapeError("replace_background image/mask size mismatch");
  }
  Image out = image;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      if (!mask.at(y, x)) {
        std::uint8_t* p = out.px(y, x);
        p[0] = kMeanColor[0];
        p[1] = kMeanColor[1];
        p[2] = kMeanColor[2];
      }
    }
  }
  return out;
}

VisualGuide crop_guide(const Image& image, const Mask& mask, int resolution) {
  if (image.height != mask.height || image.width != mask.width) {
    throw ShapeError("crop_guide image/mask size mismatch");
  }
  const Bbox b = mask_bbox(mask);
  const int cw = b.x1 - b.x0 + 1;
  const int ch = b.y1 - b.y0 + 1;

  // Crop with the background already replaced; resizing then mixes only
  // object colors against the mean.
  Mask cmask(ch, cw);
  Image crop = make_image(ch, cw, kMeanColor);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      if (mask.at(b.y0 + y, b.x0 + x)) {
        const std::uint8_t* s = image.px(b.y0 + y, b.x0 + x);
        std::uint8_t* d = crop.px(y, x);
        d[0] = s[0];
        d[1] = s[1];
        d[2] = s[2];
        cmask.at(y, x) = 1;
      }
    }
  }

  // Aspect ratio is squashed, not letterboxed.
  VisualGuide out;
  out.image = make_image(resolution, resolution, kMeanColor);
  out.mask = Mask(resolution, resolution);
  for (int y = 0; y < resolution; ++y) {
    const double sy = resolution == 1 ? 0.0 : static_cast<double>(y) * (ch - 1) / (resolution - 1);
    for (int x = 0; x < resolution; ++x) {
      const double sx = resolution == 1 ? 0.0 : static_cast<double>(x) * (cw - 1) / (resolution - 1);
      out.mask.at(y, x) = sample_mask(cmask, sx, sy) >= 0.5 ? 1 : 0;
      if (out.mask.at(y, x)) {
        sample_rgb(crop, sx, sy, out.image.px(y, x));
      }
    }
  }
  return out;
}

Warped warp_about_center(const Image& image, const Mask& mask, double scale, double angle_deg) {
  const Bbox b = mask_bbox(mask);
  const double cx = 0.5 * (b.x0 + b.x1);
  const double cy = 0.5 * (b.y0 + b.y1);
  const double a = angle_deg * kPi / 180.0;
  const double ca = std::cos(a) / scale;
  const double sa = std::sin(a) / scale;

  Warped out;
  out.image = make_image(image.height, image.width, kMeanColor);
  out.mask = Mask(mask.height, mask.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      // inverse map: rotate by -angle and divide by scale
      const double dx = x - cx, dy = y - cy;
      const double sxp = cx + ca * dx + sa * dy;
      const double syp = cy - sa * dx + ca * dy;
      sample_rgb(image, sxp, syp, out.image.px(y, x));
      out.mask.at(y, x) = sample_mask(mask, sxp, syp) >= 0.5 ? 1 : 0;
    }
  }
  return out;
}

VisualAugmentParams sample_visual_augment(Rng& rng) {
  VisualAugmentParams p;
  p.scale = rng.uniform(0.9, 1.1);
  p.angle_deg = rng.uniform(-10.0, 10.0);
  return p;
}

VisualGuide augment_visual(const Image& image, const Mask& mask, int resolution,
                           const VisualAugmentParams& params) {
  if (params.scale == 1.0 && params.angle_deg == 0.0) {
    return crop_guide(image, mask, resolution);
  }
  Warped w = warp_about_center(image, mask, params.scale, params.angle_deg);
  if (w.mask.area() == 0) {
    // degenerate warp (object clipped away); fall back to the plain crop
    return crop_guide(image, mask, resolution);
  }
  return crop_guide(w.image, w.mask, resolution);
}

VisualGuide augment_visual(const Image& image, const Mask& mask, int resolution, Rng& rng) {
  return augment_visual(image, mask, resolution, sample_visual_augment(rng));
}

SpatialAugmentParams sample_spatial_augment(Rng& rng) {
  SpatialAugmentParams p;
  p.shift_x = rng.uniform(-0.2, 0.2);
  p.shift_y = rng.uniform(-0.2, 0.2);
  p.scale = rng.uniform(0.6, 1.4);
  return p;
}

MaskStats augment_spatial(const MaskStats& stats, const SpatialAugmentParams& params, int width,
                          int height) {
  MaskStats out = stats;
  // Shift is relative to the object extent (2*sigma per axis).
  out.mu_x = std::clamp(stats.mu_x + params.shift_x * 2.0 * stats.sigma_x, 0.0,
                        static_cast<double>(width - 1));
  out.mu_y = std::clamp(stats.mu_y + params.shift_y * 2.0 * stats.sigma_y, 0.0,
                        static_cast<double>(height - 1));
  out.sigma_x = std::max(kSigmaFloor, stats.sigma_x * params.scale);
  out.sigma_y = std::max(kSigmaFloor, stats.sigma_y * params.scale);
  return out;
}

MaskStats augment_spatial(const MaskStats& stats, Rng& rng, int width, int height) {
  return augment_spatial(stats, sample_spatial_augment(rng), width, height);
}

}  // namespace modseg
