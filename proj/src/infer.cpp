#include "modseg/infer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace modseg {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Tensor heatmap_to_tensor(const SpatialGuide& g) {
  Tensor t({1, 1, g.height, g.width});
  for (std::size_t i = 0; i < g.m.size(); ++i) t.data()[i] = static_cast<real>(g.m[i]);
  return t;
}

int round_up(int v, int div) { return (v + div - 1) / div * div; }

}  // namespace

SequenceResult segment_sequence(const ModelBundle& model, const std::vector<Image>& frames,
                                const LabelMap& annotation0, int object_id,
                                const InferOptions& opts) {
  if (frames.empty()) throw ContractError("segment_sequence needs at least one frame");
  Mask mask0 = mask_from_labels(annotation0, object_id);
  if (mask0.area() == 0) {
    throw EmptyMaskError("object " + std::to_string(object_id) + " missing from frame 0");
  }
  const int height = frames[0].height, width = frames[0].width;
  const int div = model.config.size_divisor();
  // off-grid inputs run at the next divisible size; probabilities come back
  // at the native resolution
  const int fh = std::max(div, round_up(height, div));
  const int fw = std::max(div, round_up(width, div));

  SequenceResult res;
  res.object_id = object_id;

  const auto t_adapt = Clock::now();
  const ModelBundle* net = &model;
  ModelBundle adapted;
  if (opts.oneshot_iters > 0) {
    TrainConfig fcfg;
    fcfg.seed = opts.seed;
    adapted = finetune_oneshot(model, frames[0], mask0, opts.oneshot_iters, opts.oneshot_lr, fcfg);
    net = &adapted;
  }

  // the visual modulator runs once per (sequence, object)
  Tape no_grad(false);
  VisualGuide vguide = crop_guide(frames[0], mask0, net->config.guide_resolution);
  ModulationParams gamma = visual_modulate(no_grad, *net, image_to_tensor(vguide.image));
  res.visual_modulate_calls = 1;
  res.adapt_ms = ms_since(t_adapt);

  // frame 0 keeps the annotation by convention
  ProbMap p0;
  p0.height = height;
  p0.width = width;
  p0.v.resize(mask0.v.size());
  for (std::size_t i = 0; i < mask0.v.size(); ++i) p0.v[i] = mask0.v[i] ? 1.0f : 0.0f;
  res.probs.push_back(std::move(p0));
  res.masks.push_back(mask0);

  const auto sizes = layer_feature_sizes(net->config, fh, fw);
  MaskStats last_stats = mask_stats(mask0);
  const double sx = width == 1 ? 1.0 : static_cast<double>(fw - 1) / (width - 1);
  const double sy = height == 1 ? 1.0 : static_cast<double>(fh - 1) / (height - 1);

  for (std::size_t t = 1; t < frames.size(); ++t) {
    const auto t_frame = Clock::now();
    MaskStats stats = last_stats;
    if (fh != height || fw != width) {
      stats.mu_x *= sx;
      stats.mu_y *= sy;
      stats.sigma_x = std::max(kSigmaFloor, stats.sigma_x * sx);
      stats.sigma_y = std::max(kSigmaFloor, stats.sigma_y * sy);
    }
    res.priors_used.push_back(stats);

    Tape tape(false);
    Tensor input = image_to_tensor(fh != height || fw != width
                                       ? resize_image(frames[t], fh, fw)
                                       : frames[t]);
    Tensor heatmap = heatmap_to_tensor(gaussian_heatmap(stats, fh, fw));
    SpatialPriorMaps priors = model.config.ablation == Ablation::NoSpatial
                                  ? zero_priors(net->config, fh, fw)
                                  : spatial_modulate(tape, *net, heatmap, sizes);
    ModulationParams g = net->config.ablation == Ablation::NoVisual
                             ? identity_modulation(net->config)
                             : gamma;
    Tensor logits = seg_forward(tape, *net, input, g, priors);
    Tensor prob = sigmoid(tape, logits);
    if (fh != height || fw != width) {
      prob = bilinear_resize(tape, prob, height, width);
    }

    ProbMap pm;
    pm.height = height;
    pm.width = width;
    pm.v.resize(static_cast<std::size_t>(height) * width);
    for (std::size_t i = 0; i < pm.v.size(); ++i) pm.v[i] = static_cast<float>(prob.data()[i]);
    Mask m = threshold_map(pm.v, height, width, opts.threshold);
    if (m.area() > 0) {
      last_stats = mask_stats(m);  // empty predictions keep the last prior alive
    }
    res.probs.push_back(std::move(pm));
    res.masks.push_back(std::move(m));
    res.frame_ms.push_back(ms_since(t_frame));
  }
  return res;
}

LabelMap merge_objects(const std::vector<const ProbMap*>& maps, const std::vector<int>& ids,
                       float threshold) {
  if (maps.empty() || maps.size() != ids.size()) {
    throw ContractError("merge_objects needs one id per probability map");
  }
  const int h = maps[0]->height, w = maps[0]->width;
  for (const ProbMap* m : maps) {
    if (m->height != h || m->width != w) throw ShapeError("merge_objects maps must share one shape");
  }
  LabelMap out;
  out.height = h;
  out.width = w;
  out.v.assign(static_cast<std::size_t>(h) * w, 0);
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    float best = threshold;
    int best_id = 0;
    for (std::size_t k = 0; k < maps.size(); ++k) {
      const float p = maps[k]->v[i];
      if (p > best) {  // strict: ties keep the earlier (lower) id
        best = p;
        best_id = ids[k];
      }
    }
    out.v[i] = static_cast<std::uint8_t>(best_id);
  }
  return out;
}

SequenceOutput segment_all(const ModelBundle& model, const Sequence& seq, const InferOptions& opts) {
  if (seq.annotations.empty() || !seq.annotations[0].has_value()) {
    throw ContractError("sequence " + seq.name + " has no frame-0 annotation");
  }
  SequenceOutput out;
  out.name = seq.name;
  for (int id : seq.object_ids) {
    out.per_object.push_back(segment_sequence(model, seq.frames, *seq.annotations[0], id, opts));
  }
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    if (t == 0) {
      out.merged.push_back(*seq.annotations[0]);
      continue;
    }
    std::vector<const ProbMap*> maps;
    for (const SequenceResult& r : out.per_object) maps.push_back(&r.probs[t]);
    out.merged.push_back(merge_objects(maps, seq.object_ids, opts.threshold));
  }
  return out;
}

void write_sequence_masks(const std::filesystem::path& root, const SequenceOutput& out) {
  const auto dir = root / out.name / "masks";
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < out.merged.size(); ++t) {
    char name[16];
    std::snprintf(name, sizeof(name), "%05zu.png", t);
    write_label_png(dir / name, out.merged[t]);
  }
}

std::string timing_csv_header() { return "sequence,object,adapt_ms,mean_frame_ms"; }

std::string timing_csv_row(const std::string& sequence, const SequenceResult& r) {
  double mean = 0;
  for (double v : r.frame_ms) mean += v;
  if (!r.frame_ms.empty()) mean /= static_cast<double>(r.frame_ms.size());
  std::ostringstream os;
  os << sequence << "," << r.object_id << "," << r.adapt_ms << "," << mean;
  return os.str();
}

}  // namespace modseg
