#include <doctest.h>

#include <cmath>
#include <set>

#include "modseg/model.hpp"
#include "modseg/rng.hpp"

using namespace modseg;

namespace {

ModConfig tiny_config() {
  ModConfig cfg;
  cfg.stage_channels = {4, 4, 6, 6};
  cfg.stage_sizes = {2, 2};
  cfg.skip_first = 1;
  cfg.guide_resolution = 8;
  cfg.fusion_channels = 4;
  cfg.input_sizes = {16};
  return cfg;
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<real>(rng.uniform(lo, hi));
  return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] != b.data()[i]) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("count_modulated_layers across configs") {
  ModConfig vgg;
  vgg.stage_channels = {64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512};
  vgg.stage_sizes = {2, 2, 3, 3, 3};
  vgg.skip_first = 4;
  vgg.guide_resolution = 224;
  vgg.input_sizes = {320, 400, 480};
  vgg.validate();
  CHECK(count_modulated_layers(vgg) == 9);

  ModConfig toy;  // defaults
  CHECK(count_modulated_layers(toy) == 4);
  CHECK(modulation_width(toy) == 32 + 32 + 64 + 64);  // D = 192

  ModConfig edge = toy;
  edge.skip_first = toy.conv_count() - 1;
  CHECK(count_modulated_layers(edge) == 1);
}

TEST_CASE("modulation partition covers [0, D) contiguously") {
  const ModConfig cfg;  // defaults
  const auto part = modulation_partition(cfg);
  int expect_offset = 0;
  for (const LayerSlice& s : part) {
    CHECK(s.offset == expect_offset);
    CHECK(s.channels > 0);
    expect_offset += s.channels;
  }
  CHECK(expect_offset == modulation_width(cfg));
}

TEST_CASE("config validation rejects bad configs") {
  ModConfig bad = tiny_config();
  bad.skip_first = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_config();
  bad.stage_sizes = {2, 3};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_config();
  bad.input_sizes = {15};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_config();
  bad.guide_resolution = 9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("init determinism and the all-ones gamma contract") {
  const ModConfig cfg = tiny_config();
  const ModelBundle a = init_model(cfg, 11);
  const ModelBundle b = init_model(cfg, 11);
  CHECK(a.checksum() == b.checksum());
  const ModelBundle c = init_model(cfg, 12);
  CHECK(a.checksum() != c.checksum());

  // visual_modulate returns exactly 1.0 everywhere for arbitrary guides
  Rng rng(5);
  Tape tape(false);
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor guide = random_tensor({1, 3, 8, 8}, rng);
    const ModulationParams p = visual_modulate(tape, a, guide);
    REQUIRE(p.gamma.dim(0) == modulation_width(cfg));
    for (std::int64_t i = 0; i < p.gamma.size(); ++i) CHECK(p.gamma.data()[i] == real(1));
  }

  // determinism of the modulator forward
  const Tensor g = random_tensor({1, 3, 8, 8}, rng);
  const ModulationParams p1 = visual_modulate(tape, c, g);
  const ModulationParams p2 = visual_modulate(tape, c, g);
  CHECK(bitwise_equal(p1.gamma, p2.gamma));

  Tensor wrong = random_tensor({1, 3, 9, 9}, rng);
  CHECK_THROWS_AS(visual_modulate(tape, a, wrong), ShapeError);
}

TEST_CASE("identity modulation reproduces the plain forward bitwise") {
  const ModConfig cfg = tiny_config();
  const ModelBundle model = init_model(cfg, 3);
  Rng rng(9);
  const Tensor image = random_tensor({1, 3, 16, 16}, rng);
  Tape tape(false);
  const Tensor plain = seg_forward_plain(tape, model, image);
  const Tensor modded =
      seg_forward(tape, model, image, identity_modulation(cfg), zero_priors(cfg, 16, 16));
  CHECK(bitwise_equal(plain, modded));
  CHECK(modded.shape() == std::vector<int>{1, 1, 16, 16});
}

TEST_CASE("seg_forward shape contract and divisibility error") {
  const ModConfig cfg = tiny_config();
  const ModelBundle model = init_model(cfg, 3);
  Rng rng(10);
  Tape tape(false);
  for (int s : {8, 16, 24}) {
    const Tensor img = random_tensor({1, 3, s, s}, rng);
    const Tensor out =
        seg_forward(tape, model, img, identity_modulation(cfg), zero_priors(cfg, s, s));
    CHECK(out.shape() == std::vector<int>{1, 1, s, s});
  }
  const Tensor bad = random_tensor({1, 3, 9, 16}, rng);
  CHECK_THROWS_AS(seg_forward_plain(tape, model, bad), ShapeError);
}

TEST_CASE("sigmoid probabilities of logits are finite and inside (0,1)") {
  const ModConfig cfg = tiny_config();
  const ModelBundle model = init_model(cfg, 8);
  Rng rng(14);
  Tape tape(false);
  const Tensor img = random_tensor({1, 3, 16, 16}, rng);
  const Tensor prob = sigmoid(tape, seg_forward_plain(tape, model, img));
  for (std::int64_t i = 0; i < prob.size(); ++i) {
    CHECK(std::isfinite(static_cast<double>(prob.data()[i])));
    CHECK(prob.data()[i] > real(0));
    CHECK(prob.data()[i] < real(1));
  }
}

TEST_CASE("spatial_modulate: zero and constant cases plus the formula oracle") {
  const ModConfig cfg = tiny_config();
  ModelBundle model = init_model(cfg, 4);
  const int s = 16;
  const auto sizes = layer_feature_sizes(cfg, s, s);
  REQUIRE(sizes.size() == static_cast<std::size_t>(count_modulated_layers(cfg)));
  CHECK(sizes[0] == std::pair{16, 16});  // layer 1 sits in stage 0
  CHECK(sizes[2] == std::pair{8, 8});

  Tape tape(false);
  Tensor heat({1, 1, s, s}, real(0.5));

  // gamma_tilde = 0, beta_tilde = 0 -> all-zero maps
  for (auto& w : model.sm_w) std::fill(w.vec().begin(), w.vec().end(), real(0));
  for (auto& b : model.sm_b) std::fill(b.vec().begin(), b.vec().end(), real(0));
  SpatialPriorMaps zero = spatial_modulate(tape, model, heat, sizes);
  for (const Tensor& m : zero.beta) {
    for (std::int64_t i = 0; i < m.size(); ++i) CHECK(m.data()[i] == real(0));
  }

  // gamma_tilde = 1, beta_tilde = 0 on a constant 0.5 heatmap -> constant 0.5
  for (auto& w : model.sm_w) std::fill(w.vec().begin(), w.vec().end(), real(1));
  SpatialPriorMaps half = spatial_modulate(tape, model, heat, sizes);
  for (const Tensor& m : half.beta) {
    for (std::int64_t i = 0; i < m.size(); ++i) CHECK(m.data()[i] == doctest::Approx(0.5));
  }

  // random parameters against the per-pixel formula
  Rng rng(31);
  for (auto& w : model.sm_w) {
    for (std::int64_t i = 0; i < w.size(); ++i) w.data()[i] = static_cast<real>(rng.uniform(-1, 1));
  }
  for (auto& b : model.sm_b) {
    for (std::int64_t i = 0; i < b.size(); ++i) b.data()[i] = static_cast<real>(rng.uniform(-1, 1));
  }
  Tensor rand_heat = random_tensor({1, 1, s, s}, rng);
  SpatialPriorMaps maps = spatial_modulate(tape, model, rand_heat, sizes);
  for (std::size_t j = 0; j < maps.beta.size(); ++j) {
    const auto [h, w] = sizes[j];
    const Tensor m = bilinear_resize(tape, rand_heat, h, w);
    const Tensor& beta = maps.beta[j];
    for (int c = 0; c < beta.dim(0); ++c) {
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; ++i) {
        const double expect = static_cast<double>(model.sm_w[j].data()[c]) * m.data()[i] +
                              model.sm_b[j].data()[c];
        CHECK(beta.data()[c * h * w + i] == doctest::Approx(expect).epsilon(1e-5));
      }
    }
  }

  // inconsistent layer sizes
  auto bad = sizes;
  bad[0] = {8, 8};
  CHECK_THROWS_AS(spatial_modulate(tape, model, heat, bad), ShapeError);
}

TEST_CASE("apply_modulation examples and oracle") {
  Tape tape(false);
  Rng rng(41);
  const Tensor x = random_tensor({1, 2, 3, 3}, rng, -1, 1);

  // identity
  Tensor ones({2}, real(1));
  Tensor zeros({2, 3, 3});
  CHECK(bitwise_equal(apply_modulation(tape, x, ones, zeros), x));

  // gamma = [2, 0]
  Tensor g2 = Tensor::from({2}, {2.0f, 0.0f});
  const Tensor y = apply_modulation(tape, x, g2, zeros);
  for (std::int64_t i = 0; i < 9; ++i) {
    CHECK(y.data()[i] == doctest::Approx(2.0 * x.data()[i]));
    CHECK(y.data()[9 + i] == real(0));
  }

  // random oracle
  const Tensor gr = random_tensor({2}, rng, -2, 2);
  const Tensor br = random_tensor({2, 3, 3}, rng, -1, 1);
  const Tensor z = apply_modulation(tape, x, gr, br);
  for (int c = 0; c < 2; ++c) {
    for (std::int64_t i = 0; i < 9; ++i) {
      const double expect = static_cast<double>(gr.data()[c]) * x.data()[c * 9 + i] + br.data()[c * 9 + i];
      CHECK(z.data()[c * 9 + i] == doctest::Approx(expect).epsilon(1e-6));
    }
  }

  Tensor bad_g({3}, real(1));
  CHECK_THROWS_AS(apply_modulation(tape, x, bad_g, zeros), ShapeError);
}

TEST_CASE("spatial prior shapes match every input size in the config set") {
  const ModConfig cfg;  // toy defaults with input_sizes {48,64,80}
  const ModelBundle model = init_model(cfg, 2);
  Tape tape(false);
  for (int s : cfg.input_sizes) {
    Tensor heat({1, 1, s, s}, real(0.3));
    const auto sizes = layer_feature_sizes(cfg, s, s);
    const SpatialPriorMaps maps = spatial_modulate(tape, model, heat, sizes);
    const auto part = modulation_partition(cfg);
    REQUIRE(maps.beta.size() == sizes.size());
    for (std::size_t j = 0; j < maps.beta.size(); ++j) {
      CHECK(maps.beta[j].shape() ==
            std::vector<int>{part[j].channels, sizes[j].first, sizes[j].second});
    }
  }
}

TEST_CASE("gamma channel locality: zeroing the consumer hides a gamma perturbation") {
  const ModConfig cfg = tiny_config();
  Rng rng(55);
  const Tensor image = random_tensor({1, 3, 16, 16}, rng);
  Tensor heat = random_tensor({1, 1, 16, 16}, rng, 0.1, 1.0);

  // modulated layer 0 is backbone conv 1 (skip_first = 1); its stage-0
  // output survives the pool and is consumed only by conv 2
  const int channel = 2;

  auto run = [&](bool perturb, bool zero_consumer) {
    ModelBundle model = init_model(cfg, 6);
    if (zero_consumer) {
      Tensor& w = model.bb_w[2];  // conv 2 reads stage-0 output channels
      const int cin = w.dim(1), kh = w.dim(2), kw = w.dim(3);
      for (int co = 0; co < w.dim(0); ++co) {
        for (int k = 0; k < kh * kw; ++k) {
          w.data()[(static_cast<std::int64_t>(co) * cin + channel) * kh * kw + k] = real(0);
        }
      }
    }
    ModulationParams gamma = identity_modulation(cfg);
    if (perturb) gamma.gamma.data()[channel] = real(1.7);
    Tape tape(false);
    const auto sizes = layer_feature_sizes(cfg, 16, 16);
    SpatialPriorMaps priors = spatial_modulate(tape, model, heat, sizes);
    return seg_forward(tape, model, image, gamma, priors);
  };

  // with a live consumer the perturbation must show
  CHECK_FALSE(bitwise_equal(run(false, false), run(true, false)));
  // with the consuming weights zeroed the outputs are identical
  CHECK(bitwise_equal(run(false, true), run(true, true)));
}

TEST_CASE("clone is independent and checksum detects changes") {
  const ModelBundle a = init_model(tiny_config(), 19);
  ModelBundle b = a.clone();
  CHECK(a.checksum() == b.checksum());
  b.bb_w[0].data()[0] += 1.0f;
  CHECK(a.checksum() != b.checksum());
}

TEST_CASE("parameter names are unique and hierarchical") {
  const ModelBundle m = init_model(tiny_config(), 1);
  std::set<std::string> names;
  for (const Parameter& p : m.parameters()) {
    CHECK(names.insert(p.name).second);
    CHECK(p.name.find('.') != std::string::npos);
  }
  CHECK(names.count("segnet.conv0.w") == 1);
  CHECK(names.count("vmod.fc.b") == 1);
  CHECK(names.count("smod.layer0.w") == 1);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("model");

TEST_CASE("post-activation modulation keeps the identity contract") {
  ModConfig cfg = tiny_config();
  cfg.modulate_pre_activation = false;
  const ModelBundle model = init_model(cfg, 23);
  Rng rng(3);
  const Tensor image = random_tensor({1, 3, 16, 16}, rng);
  Tape tape(false);
  const Tensor plain = seg_forward_plain(tape, model, image);
  const Tensor modded =
      seg_forward(tape, model, image, identity_modulation(cfg), zero_priors(cfg, 16, 16));
  CHECK(bitwise_equal(plain, modded));

  // positive scaling commutes with relu, so a bias map is what separates
  // the two placements
  ModulationParams gamma = identity_modulation(cfg);
  gamma.gamma.data()[0] = 1.5f;
  SpatialPriorMaps priors = zero_priors(cfg, 16, 16);
  for (Tensor& b : priors.beta) {
    for (std::int64_t i = 0; i < b.size(); ++i) b.data()[i] = -0.3f;
  }
  ModConfig pre = cfg;
  pre.modulate_pre_activation = true;
  ModelBundle pre_model = init_model(pre, 23);
  const Tensor post_out = seg_forward(tape, model, image, gamma, priors);
  const Tensor pre_out = seg_forward(tape, pre_model, image, gamma, priors);
  CHECK_FALSE(bitwise_equal(post_out, pre_out));
}

TEST_SUITE_END();
