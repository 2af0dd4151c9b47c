#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "modseg/image.hpp"
#include "modseg/rng.hpp"

namespace modseg {

// Sigma floor in pixels; keeps the Gaussian well-defined for tiny masks.
inline constexpr double kSigmaFloor = 1.0;

// Fill color for guide backgrounds and out-of-bounds resampling.
inline constexpr std::array<std::uint8_t, 3> kMeanColor{128, 128, 128};

// First and second moments of the foreground pixel coordinates
// (x = column, y = row). Population std, floored at kSigmaFloor.
struct MaskStats {
  double mu_x = 0;
  double mu_y = 0;
  double sigma_x = kSigmaFloor;
  double sigma_y = kSigmaFloor;
  std::int64_t area = 0;
};

MaskStats mask_stats(const Mask& mask);

// Gaussian location heatmap; values in (0,1], peak normalized to exactly 1
// at the pixel nearest (mu_x, mu_y).
struct SpatialGuide {
  int height = 0;
  int width = 0;
  std::vector<float> m;

  float at(int y, int x) const { return m[static_cast<std::size_t>(y) * width + x]; }
};

SpatialGuide gaussian_heatmap(const MaskStats& stats, int height, int width);

// Object crop at a fixed resolution with every pixel outside the (warped)
// object mask set to kMeanColor.
struct VisualGuide {
  Image image;
  Mask mask;
};

// Pixels where the mask is zero become kMeanColor; idempotent.
Image replace_background(const Image& image, const Mask& mask);

VisualGuide crop_guide(const Image& image, const Mask& mask, int resolution);

// Scale+rotation resampling about the mask bounding-box center, used by the
// visual-guide augmentation and exposed for its self-consistency tests.
struct Warped {
  Image image;
  Mask mask;
};
Warped warp_about_center(const Image& image, const Mask& mask, double scale, double angle_deg);

struct VisualAugmentParams {
  double scale = 1.0;      // in [0.9, 1.1]
  double angle_deg = 0.0;  // in [-10, 10]
};
VisualAugmentParams sample_visual_augment(Rng& rng);
VisualGuide augment_visual(const Image& image, const Mask& mask, int resolution,
                           const VisualAugmentParams& params);
VisualGuide augment_visual(const Image& image, const Mask& mask, int resolution, Rng& rng);

struct SpatialAugmentParams {
  double shift_x = 0.0;  // in [-0.2, 0.2], relative to the 2*sigma extent
  double shift_y = 0.0;
  double scale = 1.0;  // in [0.6, 1.4]
};
SpatialAugmentParams sample_spatial_augment(Rng& rng);
// Center clamped to image bounds; sigmas re-floored.
MaskStats augment_spatial(const MaskStats& stats, const SpatialAugmentParams& params, int width,
                          int height);
MaskStats augment_spatial(const MaskStats& stats, Rng& rng, int width, int height);

}  // namespace modseg
