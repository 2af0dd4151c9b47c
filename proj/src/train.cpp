#include "modseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "modseg/guides.hpp"

namespace modseg {

namespace {

// One fully prepared training example: network input, aligned target, and
// the two guides.
struct Example {
  Tensor image;    // [1,3,s,s]
  Mask target;     // s x s
  Tensor heatmap;  // [1,1,s,s]
  Tensor guide;    // [1,3,R,R]
};

Tensor heatmap_to_tensor(const SpatialGuide& g) {
  Tensor t({1, 1, g.height, g.width});
  for (std::size_t i = 0; i < g.m.size(); ++i) t.data()[i] = static_cast<real>(g.m[i]);
  return t;
}

// Square-resize to a size drawn from the config set, optionally random-crop
// (keeping the target centroid inside), then build both guides. The prior
// mask goes through the same geometry as the target so locations align.
Example prepare_example(const Image& image, const Mask& target, const Mask& prior,
                        const Image& guide_image, const Mask& guide_mask, const ModConfig& mc,
                        const TrainConfig& cfg, Rng& rng) {
  const int s = mc.input_sizes[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(mc.input_sizes.size()) - 1))];
  Image img = resize_image(image, s, s);
  Mask tgt = resize_mask(target, s, s);
  Mask pri = resize_mask(prior, s, s);

  if (cfg.random_crop) {
    const int div = mc.size_divisor();
    const int shrink = static_cast<int>(rng.uniform_int(0, 2));
    const int c = s - shrink * div;
    if (c < s && c >= 2 * div && tgt.area() > 0) {
      for (int attempt = 0; attempt < 5; ++attempt) {
        const int y0 = static_cast<int>(rng.uniform_int(0, s - c));
        const int x0 = static_cast<int>(rng.uniform_int(0, s - c));
        Mask tc = crop_mask(tgt, y0, x0, c, c);
        Mask pc = crop_mask(pri, y0, x0, c, c);
        if (tc.area() > 0 && pc.area() > 0) {
          img = crop_image(img, y0, x0, c, c);
          tgt = std::move(tc);
          pri = std::move(pc);
          break;
        }
      }
    }
  }

  Example ex;
  ex.image = image_to_tensor(img);
  MaskStats stats = mask_stats(pri);
  if (cfg.augment_spatial) stats = augment_spatial(stats, rng, pri.width, pri.height);
  ex.heatmap = heatmap_to_tensor(gaussian_heatmap(stats, pri.height, pri.width));
  VisualGuide vg = cfg.augment_visual
                       ? augment_visual(guide_image, guide_mask, mc.guide_resolution, rng)
                       : crop_guide(guide_image, guide_mask, mc.guide_resolution);
  ex.guide = image_to_tensor(vg.image);
  ex.target = std::move(tgt);
  return ex;
}

// Forward + loss honoring the configured ablation.
Tensor example_loss(Tape& tape, const ModelBundle& model, const Example& ex, LossReport* report) {
  const ModConfig& mc = model.config;
  ModulationParams gamma = mc.ablation == Ablation::NoVisual
                               ? identity_modulation(mc)
                               : visual_modulate(tape, model, ex.guide);
  SpatialPriorMaps priors;
  if (mc.ablation == Ablation::NoSpatial) {
    priors = zero_priors(mc, ex.image.dim(2), ex.image.dim(3));
  } else {
    priors = spatial_modulate(tape, model, ex.heatmap,
                              layer_feature_sizes(mc, ex.image.dim(2), ex.image.dim(3)));
  }
  Tensor logits = seg_forward(tape, model, ex.image, gamma, priors);
  return balanced_ce(tape, logits, ex.target, report);
}

struct StepLoop {
  ModelBundle& model;
  const TrainConfig& cfg;
  std::vector<Parameter> trained;
  AdamState adam;
  std::vector<LossPoint> curve;
  std::int64_t step = 0;

  StepLoop(ModelBundle& m, const TrainConfig& c, double lr)
      : model(m),
        cfg(c),
        trained(c.freeze_modulators ? m.segnet_parameters() : m.parameters()),
        adam(trained, lr) {
    model.set_requires_grad(true);
  }

  bool done() const { return cfg.max_steps > 0 && step >= cfg.max_steps; }

  // Runs one optimizer step over a batch of examples (gradient accumulation).
  void batch_step(const std::vector<Example>& batch) {
    for (Parameter& p : model.parameters()) p.value.zero_grad();
    double loss_acc = 0, beta_acc = 0;
    for (const Example& ex : batch) {
      Tape tape;
      LossReport report;
      Tensor loss = example_loss(tape, model, ex, &report);
      if (!std::isfinite(report.loss)) {
        throw NumericError("training diverged: non-finite loss at step " + std::to_string(step));
      }
      tape.backward(loss);
      loss_acc += report.loss;
      beta_acc += report.beta;
    }
    const real inv = static_cast<real>(1.0 / static_cast<double>(batch.size()));
    for (Parameter& p : trained) {
      real* g = p.value.ensure_grad();
      for (std::int64_t i = 0; i < p.value.size(); ++i) g[i] *= inv;
    }
    adam.step(trained);
    ++step;
    curve.push_back(LossPoint{step, loss_acc / static_cast<double>(batch.size()),
                              beta_acc / static_cast<double>(batch.size())});
  }
};

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  return idx;
}

}  // namespace

TrainResult train_static(ModelBundle& model, const std::vector<StaticSample>& samples,
                         const TrainConfig& cfg) {
  if (samples.empty()) throw ContractError("train_static needs a non-empty sample stream");
  Rng root(cfg.seed);
  StepLoop loop(model, cfg, cfg.static_lr1);

  const int total_epochs = cfg.static_epochs1 + cfg.static_epochs2;
  for (int epoch = 0; epoch < total_epochs && !loop.done(); ++epoch) {
    loop.adam.lr = epoch < cfg.static_epochs1 ? cfg.static_lr1 : cfg.static_lr2;
    Rng erng = root.split(static_cast<std::uint64_t>(epoch));
    const auto order = shuffled_indices(samples.size(), erng);
    std::vector<Example> batch;
    for (std::size_t k = 0; k < order.size() && !loop.done(); ++k) {
      const StaticSample& s = samples[order[k]];
      batch.push_back(prepare_example(s.image, s.mask, s.mask, s.image, s.mask, model.config, cfg,
                                      erng));
      if (static_cast<int>(batch.size()) == cfg.batch_size || k + 1 == order.size()) {
        loop.batch_step(batch);
        batch.clear();
      }
    }
  }
  return TrainResult{std::move(loop.curve)};
}

TrainResult train_video(ModelBundle& model, const std::vector<Sequence>& sequences,
                        const TrainConfig& cfg) {
  // enumerate (sequence, object, frame t>=1) with usable annotations
  struct VideoSample {
    const Sequence* seq;
    int object_id;
    int frame;
  };
  std::vector<VideoSample> samples;
  for (const Sequence& seq : sequences) {
    for (int id : seq.object_ids) {
      for (std::size_t t = 1; t < seq.frames.size(); ++t) {
        if (!seq.annotations[t].has_value() || !seq.annotations[t - 1].has_value()) continue;
        if (mask_from_labels(*seq.annotations[t], id).area() == 0) continue;
        if (mask_from_labels(*seq.annotations[t - 1], id).area() == 0) continue;
        samples.push_back(VideoSample{&seq, id, static_cast<int>(t)});
      }
    }
  }
  if (samples.empty()) throw ContractError("train_video found no usable (frame, object) pairs");

  Rng root(cfg.seed + 1);
  StepLoop loop(model, cfg, cfg.video_lr);
  for (int epoch = 0; epoch < cfg.video_epochs && !loop.done(); ++epoch) {
    Rng erng = root.split(static_cast<std::uint64_t>(epoch));
    const auto order = shuffled_indices(samples.size(), erng);
    std::vector<Example> batch;
    for (std::size_t k = 0; k < order.size() && !loop.done(); ++k) {
      const VideoSample& vs = samples[order[k]];
      const Sequence& seq = *vs.seq;

      // visual guide from a uniformly random frame where the object exists
      const int gframe = pick_guide_frame(seq, vs.object_id, erng);
      Mask gmask = mask_from_labels(*seq.annotations[static_cast<std::size_t>(gframe)], vs.object_id);

      Mask target = mask_from_labels(*seq.annotations[static_cast<std::size_t>(vs.frame)], vs.object_id);
      Mask prior = mask_from_labels(*seq.annotations[static_cast<std::size_t>(vs.frame - 1)], vs.object_id);
      batch.push_back(prepare_example(seq.frames[static_cast<std::size_t>(vs.frame)], target, prior,
                                      seq.frames[static_cast<std::size_t>(gframe)], gmask,
                                      model.config, cfg, erng));
      if (static_cast<int>(batch.size()) == cfg.batch_size || k + 1 == order.size()) {
        loop.batch_step(batch);
        batch.clear();
      }
    }
  }
  return TrainResult{std::move(loop.curve)};
}

int pick_guide_frame(const Sequence& seq, int object_id, Rng& rng) {
  std::vector<int> usable;
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    if (t >= seq.annotations.size() || !seq.annotations[t].has_value()) continue;
    if (mask_from_labels(*seq.annotations[t], object_id).area() > 0) {
      usable.push_back(static_cast<int>(t));
    }
  }
  if (usable.empty()) {
    throw EmptyMaskError("object " + std::to_string(object_id) + " never appears in " + seq.name);
  }
  return usable[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(usable.size()) - 1))];
}

ModelBundle finetune_oneshot(const ModelBundle& model, const Image& frame0, const Mask& mask0,
                             int iters, double lr, const TrainConfig& cfg) {
  if (mask0.area() == 0) throw EmptyMaskError("finetune_oneshot needs a non-empty first-frame mask");
  ModelBundle adapted = model.clone();
  if (iters <= 0) return adapted;

  TrainConfig fcfg = cfg;
  fcfg.max_steps = 0;
  Rng rng(cfg.seed + 2);
  StepLoop loop(adapted, fcfg, lr);
  for (int it = 0; it < iters; ++it) {
    std::vector<Example> batch;
    batch.push_back(
        prepare_example(frame0, mask0, mask0, frame0, mask0, adapted.config, fcfg, rng));
    loop.batch_step(batch);
  }
  return adapted;
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<LossPoint>& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss curve: " + path.string());
  out << "step,loss,beta\n";
  for (const LossPoint& p : curve) {
    out << p.step << "," << p.loss << "," << p.beta << "\n";
  }
}

}  // namespace modseg
