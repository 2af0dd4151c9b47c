#include <doctest.h>

#include <cmath>

#include "modseg/guides.hpp"

using namespace modseg;

namespace {

Mask rect_mask(int h, int w, int y0, int x0, int rh, int rw) {
  Mask m(h, w);
  for (int y = y0; y < y0 + rh; ++y) {
    for (int x = x0; x < x0 + rw; ++x) m.at(y, x) = 1;
  }
  return m;
}

Mask disk_mask(int h, int w, double cy, double cx, double r) {
  Mask m(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.at(y, x) = 1;
    }
  }
  return m;
}

double mask_iou(const Mask& a, const Mask& b) {
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    inter += (a.v[i] && b.v[i]) ? 1 : 0;
    uni += (a.v[i] || b.v[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

TEST_SUITE_BEGIN("guides");

TEST_CASE("mask_stats: single pixel floors sigma") {
  Mask m(8, 8);
  m.at(5, 3) = 1;  // x=3, y=5
  const MaskStats st = mask_stats(m);
  CHECK(st.mu_x == doctest::Approx(3.0));
  CHECK(st.mu_y == doctest::Approx(5.0));
  CHECK(st.sigma_x == doctest::Approx(1.0));
  CHECK(st.sigma_y == doctest::Approx(1.0));
  CHECK(st.area == 1);
}

TEST_CASE("mask_stats: full-frame mask centers at ((W-1)/2,(H-1)/2)") {
  Mask m(6, 9);
  for (auto& v : m.v) v = 1;
  const MaskStats st = mask_stats(m);
  CHECK(st.mu_x == doctest::Approx((9 - 1) / 2.0));
  CHECK(st.mu_y == doctest::Approx((6 - 1) / 2.0));
}

TEST_CASE("mask_stats: 2x6 rectangle matches closed-form discrete-uniform std") {
  // population std of {0..n-1} is sqrt((n^2-1)/12); sigma_y hits the floor
  const Mask m = rect_mask(10, 12, 4, 3, 2, 6);
  const MaskStats st = mask_stats(m);
  const double sx = std::sqrt((36.0 - 1.0) / 12.0);
  CHECK(st.sigma_x == doctest::Approx(sx).epsilon(1e-12));
  CHECK(st.sigma_y == doctest::Approx(1.0));
  CHECK(st.sigma_x / st.sigma_y == doctest::Approx(sx));
}

TEST_CASE("mask_stats: empty mask throws; translation equivariance") {
  Mask empty(4, 4);
  CHECK_THROWS_AS(mask_stats(empty), EmptyMaskError);

  const Mask a = rect_mask(20, 20, 3, 4, 5, 3);
  const Mask b = rect_mask(20, 20, 9, 11, 5, 3);
  const MaskStats sa = mask_stats(a);
  const MaskStats sb = mask_stats(b);
  CHECK(sb.mu_x - sa.mu_x == doctest::Approx(7.0));
  CHECK(sb.mu_y - sa.mu_y == doctest::Approx(6.0));
  CHECK(sb.sigma_x == doctest::Approx(sa.sigma_x));
  CHECK(sb.sigma_y == doctest::Approx(sa.sigma_y));
}

TEST_CASE("gaussian_heatmap: peak, analytic point, separability, monotonicity") {
  MaskStats st;
  st.mu_x = 10;
  st.mu_y = 6;
  st.sigma_x = 3;
  st.sigma_y = 2;
  st.area = 10;
  const SpatialGuide g = gaussian_heatmap(st, 16, 24);
  CHECK(g.at(6, 10) == doctest::Approx(1.0));
  CHECK(g.at(6, 13) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));  // mu_x + sigma_x

  float peak = 0;
  for (float v : g.m) {
    CHECK(v > 0.0f);
    CHECK(v <= 1.0f);
    peak = std::max(peak, v);
  }
  CHECK(peak == 1.0f);

  // separable: m(x,y) = m(x,mu_y) * m(mu_x,y) for on-grid centers
  for (int y = 0; y < 16; y += 3) {
    for (int x = 0; x < 24; x += 5) {
      CHECK(g.at(y, x) == doctest::Approx(g.at(6, x) * g.at(y, 10)).epsilon(1e-5));
    }
  }
  // strictly decreasing away from the center along each axis
  for (int x = 10; x + 1 < 24; ++x) CHECK(g.at(6, x) > g.at(6, x + 1));
  for (int x = 10; x > 0; --x) CHECK(g.at(6, x) > g.at(6, x - 1));
  for (int y = 6; y + 1 < 16; ++y) CHECK(g.at(y, 10) > g.at(y + 1, 10));
}

TEST_CASE("gaussian_heatmap: translation equivariance of the argmax") {
  MaskStats st;
  st.mu_x = 5;
  st.mu_y = 5;
  st.sigma_x = 2;
  st.sigma_y = 2;
  st.area = 5;
  auto argmax = [](const SpatialGuide& g) {
    int best = 0;
    for (std::size_t i = 1; i < g.m.size(); ++i) {
      if (g.m[i] > g.m[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return std::pair{best % g.width, best / g.width};
  };
  const auto [x0, y0] = argmax(gaussian_heatmap(st, 20, 20));
  MaskStats shifted = st;
  shifted.mu_x += 4;
  shifted.mu_y += 3;
  const auto [x1, y1] = argmax(gaussian_heatmap(shifted, 20, 20));
  CHECK(x1 - x0 == 4);
  CHECK(y1 - y0 == 3);
}

TEST_CASE("crop_guide: full mask is a pure resize") {
  Image img = make_image(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      img.px(y, x)[0] = static_cast<std::uint8_t>(30 * y);
      img.px(y, x)[1] = static_cast<std::uint8_t>(30 * x);
      img.px(y, x)[2] = 77;
    }
  }
  Mask full(8, 8);
  for (auto& v : full.v) v = 1;
  const VisualGuide g = crop_guide(img, full, 8);
  CHECK(g.image.rgb == img.rgb);  // identity resize
  CHECK(g.mask.area() == 64);
}

TEST_CASE("crop_guide: 1-pixel mask gives a uniform crop of that color") {
  Image img = make_image(6, 6, {10, 20, 30});
  img.px(2, 4)[0] = 200;
  img.px(2, 4)[1] = 100;
  img.px(2, 4)[2] = 50;
  Mask m(6, 6);
  m.at(2, 4) = 1;
  const VisualGuide g = crop_guide(img, m, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      CHECK(g.image.px(y, x)[0] == 200);
      CHECK(g.image.px(y, x)[1] == 100);
      CHECK(g.image.px(y, x)[2] == 50);
    }
  }
}

TEST_CASE("crop_guide: background equals the mean color exactly; object preserved on aligned crops") {
  // checkerboard object colors on a known background
  Image img = make_image(12, 12, {1, 2, 3});
  Mask m(12, 12);
  for (int y = 4; y < 8; ++y) {
    for (int x = 2; x < 6; ++x) {
      m.at(y, x) = 1;
      const bool odd = (x + y) % 2 != 0;
      img.px(y, x)[0] = odd ? 250 : 20;
      img.px(y, x)[1] = odd ? 240 : 30;
      img.px(y, x)[2] = odd ? 230 : 40;
    }
  }
  // resolution equals the 4x4 bbox: integer-aligned, no interpolation
  const VisualGuide g = crop_guide(img, m, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      if (g.mask.at(y, x)) {
        const bool odd = ((x + 2) + (y + 4)) % 2 != 0;
        CHECK(g.image.px(y, x)[0] == (odd ? 250 : 20));
      } else {
        CHECK(g.image.px(y, x)[0] == kMeanColor[0]);
        CHECK(g.image.px(y, x)[1] == kMeanColor[1]);
        CHECK(g.image.px(y, x)[2] == kMeanColor[2]);
      }
    }
  }
  // all pixels outside the warped mask equal the mean color, any resolution
  const VisualGuide g2 = crop_guide(img, m, 9);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      if (!g2.mask.at(y, x)) {
        CHECK(g2.image.px(y, x)[0] == kMeanColor[0]);
        CHECK(g2.image.px(y, x)[1] == kMeanColor[1]);
        CHECK(g2.image.px(y, x)[2] == kMeanColor[2]);
      }
    }
  }
}

TEST_CASE("replace_background is idempotent") {
  Image img = make_image(7, 7, {9, 9, 9});
  img.px(3, 3)[0] = 222;
  Mask m(7, 7);
  m.at(3, 3) = 1;
  const Image once = replace_background(img, m);
  const Image twice = replace_background(once, m);
  CHECK(once.rgb == twice.rgb);
}

TEST_CASE("crop_guide: empty mask throws") {
  Image img = make_image(4, 4);
  Mask m(4, 4);
  CHECK_THROWS_AS(crop_guide(img, m, 4), EmptyMaskError);
}

TEST_CASE("augment_visual: identity parameters reproduce crop_guide") {
  Image img = make_image(16, 16, {40, 50, 60});
  const Mask m = disk_mask(16, 16, 8, 8, 4.5);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      if (m.at(y, x)) {
        img.px(y, x)[0] = static_cast<std::uint8_t>(100 + 5 * x);
        img.px(y, x)[1] = static_cast<std::uint8_t>(100 + 5 * y);
      }
    }
  }
  const VisualGuide a = crop_guide(img, m, 8);
  const VisualGuide b = augment_visual(img, m, 8, VisualAugmentParams{1.0, 0.0});
  CHECK(a.image.rgb == b.image.rgb);
  CHECK(a.mask.v == b.mask.v);
}

TEST_CASE("augment samplers stay within the declared ranges") {
  Rng rng(77);
  for (int i = 0; i < 10000; ++i) {
    const VisualAugmentParams v = sample_visual_augment(rng);
    CHECK(v.scale >= 0.9);
    CHECK(v.scale <= 1.1);
    CHECK(v.angle_deg >= -10.0);
    CHECK(v.angle_deg <= 10.0);
    const SpatialAugmentParams s = sample_spatial_augment(rng);
    CHECK(s.shift_x >= -0.2);
    CHECK(s.shift_x <= 0.2);
    CHECK(s.shift_y >= -0.2);
    CHECK(s.shift_y <= 0.2);
    CHECK(s.scale >= 0.6);
    CHECK(s.scale <= 1.4);
  }
}

TEST_CASE("rotation +10 then -10 of a disk keeps IoU within 2%") {
  Image img = make_image(48, 48, {10, 10, 10});
  const Mask m = disk_mask(48, 48, 24, 24, 14);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 48; ++x) {
      if (m.at(y, x)) img.px(y, x)[0] = 240;
    }
  }
  const Warped w1 = warp_about_center(img, m, 1.0, 10.0);
  const Warped w2 = warp_about_center(w1.image, w1.mask, 1.0, -10.0);
  CHECK(mask_iou(w2.mask, m) > 0.98);
}

TEST_CASE("augment_spatial: identity, clamping, uniform shift distribution") {
  MaskStats st;
  st.mu_x = 20;
  st.mu_y = 12;
  st.sigma_x = 4;
  st.sigma_y = 3;
  st.area = 100;

  const MaskStats same = augment_spatial(st, SpatialAugmentParams{0, 0, 1.0}, 64, 64);
  CHECK(same.mu_x == st.mu_x);
  CHECK(same.mu_y == st.mu_y);
  CHECK(same.sigma_x == st.sigma_x);
  CHECK(same.sigma_y == st.sigma_y);

  MaskStats border = st;
  border.mu_x = 0.5;
  const MaskStats clamped = augment_spatial(border, SpatialAugmentParams{-0.2, 0, 1.0}, 64, 64);
  CHECK(clamped.mu_x >= 0.0);
  CHECK(clamped.mu_x <= 63.0);

  // empirical shift histogram: uniform over +-20% of the 2*sigma extent
  Rng rng(123);
  const double extent = 0.2 * 2.0 * st.sigma_x;
  std::array<int, 8> bins{};
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const MaskStats out = augment_spatial(st, rng, 64, 64);
    const double dx = out.mu_x - st.mu_x;
    CHECK(std::abs(dx) <= extent + 1e-9);
    int b = static_cast<int>((dx + extent) / (2 * extent) * 8);
    b = std::clamp(b, 0, 7);
    ++bins[static_cast<std::size_t>(b)];
  }
  for (int count : bins) {
    CHECK(count > draws / 8 - 300);
    CHECK(count < draws / 8 + 300);
  }
}

TEST_SUITE_END();
