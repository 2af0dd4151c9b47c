// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Training-dependent criteria share three trained models (full,
// no-visual, no-spatial) over the pinned synthetic benchmark.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "modseg/analysis.hpp"
#include "modseg/checkpoint.hpp"
#include "modseg/infer.hpp"
#include "modseg/metrics.hpp"
#include "modseg/opcheck.hpp"
#include "modseg/train.hpp"

using namespace modseg;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240117;

struct Criterion {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Criterion> g_results;

void report(int id, bool pass, const std::string& detail) {
  g_results.push_back({id, pass, detail});
  if (id > 0) {
    std::printf("[%2d] %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  } else {  // supplementary trained-model oracle, still gates the exit code
    std::printf("[--] %s  %s\n", pass ? "PASS" : "FAIL", detail.c_str());
  }
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- benchmark data ------------------------------------------------------

struct Benchmark {
  std::vector<Sequence> train;
  std::vector<Sequence> held;
  std::vector<StaticSample> samples;
};

Benchmark make_benchmark() {
  Benchmark b;
  SyntheticSpec spec;  // 64x64, 20 frames, 3 classes, look-alike pair
  for (int i = 0; i < 20; ++i) {
    b.train.push_back(gen_synthetic(spec, mix_seed(kSeed, static_cast<std::uint64_t>(i)),
                                    "tr" + std::to_string(i)));
  }
  for (int i = 0; i < 20; ++i) {
    b.held.push_back(gen_synthetic(spec, mix_seed(kSeed + 999, static_cast<std::uint64_t>(i)),
                                   "ho" + std::to_string(i)));
  }
  b.samples = static_samples(b.train, 0.03, kSeed);
  return b;
}

// Pinned desk-scale schedule (the CLI ships the same values in
// configs/toy.cfg).
TrainConfig toy_schedule() {
  TrainConfig tc;
  tc.static_epochs1 = 3;
  tc.static_lr1 = 1e-3;
  tc.static_epochs2 = 1;
  tc.static_lr2 = 3e-4;
  tc.video_epochs = 3;
  tc.video_lr = 3e-4;
  tc.batch_size = 4;
  tc.seed = kSeed;
  return tc;
}

ModelBundle train_variant(const Benchmark& bench, Ablation ablation, double* train_seconds,
                          double* stage1_j = nullptr,
                          const std::vector<Sequence>* held = nullptr) {
  ModConfig mc;
  mc.ablation = ablation;
  ModelBundle model = init_model(mc, kSeed);
  const TrainConfig tc = toy_schedule();
  const auto t0 = Clock::now();
  train_static(model, bench.samples, tc);
  double stage1_seconds = seconds_since(t0);
  if (stage1_j && held) {
    // held-out J of the stage-1 model, reported for the stage-2 comparison
    double jsum = 0;
    int cnt = 0;
    for (const Sequence& seq : *held) {
      const SequenceOutput out = segment_all(model, seq);
      for (const SequenceResult& r : out.per_object) {
        std::vector<double> js;
        for (std::size_t t = 1; t < seq.frames.size(); ++t) {
          js.push_back(region_j(r.masks[t], mask_from_labels(*seq.annotations[t], r.object_id)));
        }
        jsum += measure_stats(js).mean;
        ++cnt;
      }
    }
    *stage1_j = jsum / static_cast<double>(cnt);
  }
  const auto t1 = Clock::now();
  train_video(model, bench.train, tc);
  if (train_seconds) *train_seconds = stage1_seconds + seconds_since(t1);
  return model;
}

struct HeldOutEval {
  double j_mean = 0;
  // per (sequence, look-alike object): fraction of frames whose predicted
  // centroid lies closer to the annotated instance than to its distractor
  double disambig_ok = 0;
  std::int64_t disambig_frames = 0;
};

std::pair<double, double> mask_centroid(const Mask& m) {
  double sx = 0, sy = 0;
  std::int64_t n = 0;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (m.at(y, x)) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

HeldOutEval eval_model(const ModelBundle& model, const std::vector<Sequence>& held) {
  HeldOutEval ev;
  double jsum = 0;
  int object_count = 0;
  std::int64_t ok_frames = 0, all_frames = 0;
  for (const Sequence& seq : held) {
    const SequenceOutput out = segment_all(model, seq);
    for (const SequenceResult& r : out.per_object) {
      std::vector<double> js;
      for (std::size_t t = 1; t < seq.frames.size(); ++t) {
        js.push_back(region_j(r.masks[t], mask_from_labels(*seq.annotations[t], r.object_id)));
      }
      jsum += measure_stats(js).mean;
      ++object_count;

      // look-alike disambiguation bookkeeping
      const ObjectInfo* self = nullptr;
      for (const ObjectInfo& o : seq.objects) {
        if (o.id == r.object_id) self = &o;
      }
      if (!self || !self->lookalike) continue;
      const int other_id = r.object_id == 1 ? 2 : 1;
      for (std::size_t t = 1; t < seq.frames.size(); ++t) {
        const Mask gt_self = mask_from_labels(*seq.annotations[t], r.object_id);
        const Mask gt_other = mask_from_labels(*seq.annotations[t], other_id);
        if (gt_self.area() == 0 || gt_other.area() == 0) continue;
        ++all_frames;
        if (r.masks[t].area() == 0) continue;  // empty prediction fails the frame
        const auto [px, py] = mask_centroid(r.masks[t]);
        const auto [sx, sy] = mask_centroid(gt_self);
        const auto [ox, oy] = mask_centroid(gt_other);
        const double d_self = std::hypot(px - sx, py - sy);
        const double d_other = std::hypot(px - ox, py - oy);
        if (d_self < d_other) ++ok_frames;
      }
    }
  }
  ev.j_mean = jsum / static_cast<double>(object_count);
  ev.disambig_ok = all_frames > 0 ? static_cast<double>(ok_frames) / static_cast<double>(all_frames) : 0;
  ev.disambig_frames = all_frames;
  return ev;
}

// ---- metric oracles (criterion 8) ----------------------------------------

Mask rect(int h, int w, int y0, int x0, int rh, int rw) {
  Mask m(h, w);
  for (int y = y0; y < y0 + rh; ++y) {
    for (int x = x0; x < x0 + rw; ++x) m.at(y, x) = 1;
  }
  return m;
}

double contour_f_oracle(const Mask& pred, const Mask& gt, int tol) {
  auto boundary_pixels = [](const Mask& m) {
    std::vector<std::pair<int, int>> px;
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        if (!m.at(y, x)) continue;
        const bool edge = y == 0 || y == m.height - 1 || x == 0 || x == m.width - 1;
        if (edge || !m.at(y - 1, x) || !m.at(y + 1, x) || !m.at(y, x - 1) || !m.at(y, x + 1)) {
          px.push_back({y, x});
        }
      }
    }
    return px;
  };
  const auto pb = boundary_pixels(pred);
  const auto gb = boundary_pixels(gt);
  if (pb.empty() && gb.empty()) return 1.0;
  if (pb.empty() || gb.empty()) return 0.0;
  auto frac = [&](const auto& from, const auto& to) {
    int hits = 0;
    for (const auto& [y, x] : from) {
      int best = 1 << 20;
      for (const auto& [gy, gx] : to) {
        best = std::min(best, std::max(std::abs(y - gy), std::abs(x - gx)));
      }
      if (best <= tol) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(from.size());
  };
  const double p = frac(pb, gb), r = frac(gb, pb);
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

}  // namespace

int main() {
  const auto suite_start = Clock::now();

  // [1] scale disclaimer: paper-scale DAVIS results require pretrained VGG16
  // and MS-COCO training; criteria 2..10 are the desk-scale substitutes.
  report(1, true,
         "paper-scale DAVIS numbers are out of scope at desk scale; property-based criteria 2-10 substitute");

  // [2] gradient suite under 1e-3 within 2 minutes
  {
    const auto t0 = Clock::now();
    const auto checks = run_gradcheck_suite(42);
    const double secs = seconds_since(t0);
    double worst = 0;
    std::string worst_name;
    bool ok = !checks.empty();
    for (const OpCheck& c : checks) {
      if (c.err > worst) {
        worst = c.err;
        worst_name = c.name;
      }
      ok = ok && c.ok();
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%zu checks, worst %.2e (%s), %.1fs (budget 120s)",
                  checks.size(), worst, worst_name.c_str(), secs);
    report(2, ok && secs < 120.0, buf);
  }

  // [3] init and identity contracts
  {
    ModConfig mc;
    const ModelBundle model = init_model(mc, kSeed + 7);
    Rng rng(5);
    bool ones_ok = true;
    Tape tape(false);
    for (int trial = 0; trial < 4; ++trial) {
      Tensor guide({1, 3, mc.guide_resolution, mc.guide_resolution});
      for (std::int64_t i = 0; i < guide.size(); ++i) {
        guide.data()[i] = static_cast<real>(rng.uniform(0, 1));
      }
      const ModulationParams p = visual_modulate(tape, model, guide);
      for (std::int64_t i = 0; i < p.gamma.size(); ++i) {
        ones_ok = ones_ok && p.gamma.data()[i] == real(1);
      }
    }
    Tensor image({1, 3, 64, 64});
    for (std::int64_t i = 0; i < image.size(); ++i) {
      image.data()[i] = static_cast<real>(rng.uniform(0, 1));
    }
    const Tensor plain = seg_forward_plain(tape, model, image);
    const Tensor modded =
        seg_forward(tape, model, image, identity_modulation(mc), zero_priors(mc, 64, 64));
    bool bitwise = plain.shape() == modded.shape();
    for (std::int64_t i = 0; bitwise && i < plain.size(); ++i) {
      bitwise = plain.data()[i] == modded.data()[i];
    }
    report(3, ones_ok && bitwise,
           std::string("post-init gamma all-ones: ") + (ones_ok ? "yes" : "no") +
               "; identity modulation bitwise: " + (bitwise ? "yes" : "no"));
  }

  // shared benchmark + the three trained models
  Benchmark bench = make_benchmark();
  bool bench_ok = bench.samples.size() >= 200 && bench.held.size() == 20;
  for (const Sequence& seq : bench.held) {
    bool pair = false;
    for (const ObjectInfo& o : seq.objects) pair = pair || o.lookalike;
    bench_ok = bench_ok && pair && seq.frames.size() == 20;
  }

  double full_train_seconds = 0;
  double stage1_j = 0;
  const ModelBundle full =
      train_variant(bench, Ablation::None, &full_train_seconds, &stage1_j, &bench.held);
  const HeldOutEval full_eval = eval_model(full, bench.held);

  // [4] desk-scale training quality and budget; stage 2 must improve on the
  // stage-1 model
  {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%zu static samples, held-out J %.3f (>= 0.80, stage-1 alone %.3f), training %.0fs (< 1800s)",
                  bench.samples.size(), full_eval.j_mean, stage1_j, full_train_seconds);
    report(4, bench_ok && full_eval.j_mean >= 0.80 && full_eval.j_mean > stage1_j &&
                  full_train_seconds < 1800.0,
           buf);
  }

  // [5] ablation directions, same seeds and schedule
  const ModelBundle no_visual = train_variant(bench, Ablation::NoVisual, nullptr);
  const ModelBundle no_spatial = train_variant(bench, Ablation::NoSpatial, nullptr);
  const HeldOutEval nv_eval = eval_model(no_visual, bench.held);
  const HeldOutEval ns_eval = eval_model(no_spatial, bench.held);
  {
    const double dv = full_eval.j_mean - nv_eval.j_mean;
    const double ds = full_eval.j_mean - ns_eval.j_mean;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "J full %.3f, no-visual %.3f (drop %.3f), no-spatial %.3f (drop %.3f); both drops >= 0.05",
                  full_eval.j_mean, nv_eval.j_mean, dv, ns_eval.j_mean, ds);
    report(5, dv >= 0.05 && ds >= 0.05, buf);
  }

  // [6] look-alike disambiguation via the spatial prior
  {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "centroid nearest the annotated instance: full %.1f%% (>= 90%%) over %lld frames; "
                  "no-spatial %.1f%% (must fail the bar)",
                  100.0 * full_eval.disambig_ok, static_cast<long long>(full_eval.disambig_frames),
                  100.0 * ns_eval.disambig_ok);
    report(6, full_eval.disambig_ok >= 0.90 && ns_eval.disambig_ok < 0.90, buf);
  }

  // [7] adaptation speed: one modulator pass vs 100-step fine-tuning, and
  // adaptation cost independent of sequence length
  {
    const Sequence& probe = bench.held[0];
    const Mask mask0 = mask_from_labels(*probe.annotations[0], 1);

    Tape no_grad(false);
    const VisualGuide guide = crop_guide(probe.frames[0], mask0, full.config.guide_resolution);
    const Tensor guide_tensor = image_to_tensor(guide.image);
    double adapt_best = 1e18;
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = Clock::now();
      visual_modulate(no_grad, full, guide_tensor);
      adapt_best = std::min(adapt_best, seconds_since(t0));
    }

    TrainConfig ft = toy_schedule();
    const auto t1 = Clock::now();
    finetune_oneshot(full, probe.frames[0], mask0, 100, 1e-6, ft);
    const double finetune_secs = seconds_since(t1);
    const double ratio = finetune_secs / adapt_best;

    // adaptation time vs sequence length: slope of adapt_ms over T
    std::vector<double> xs, ys;
    for (int rep = 0; rep < 3; ++rep) {
      for (int tlen : {5, 10, 20}) {
        std::vector<Image> frames(probe.frames.begin(), probe.frames.begin() + tlen);
        const SequenceResult r = segment_sequence(full, frames, *probe.annotations[0], 1);
        xs.push_back(static_cast<double>(tlen));
        ys.push_back(r.adapt_ms);
      }
    }
    const std::size_t n = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double resid = ys[i] - my - slope * (xs[i] - mx);
      sse += resid * resid;
    }
    const double se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    const double tstat = se > 0 ? slope / se : 0.0;

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "finetune(100)/visual_modulate = %.0fx (>= 20x); adapt-vs-T slope %.4f ms/frame (t = %.2f, |t| < 3)",
                  ratio, slope, tstat);
    report(7, ratio >= 20.0 && std::abs(tstat) < 3.0, buf);
  }

  // trained-model oracles from the operation examples (reported with the
  // criteria because they need the benchmark-trained model)
  {
    // a sequence of identical frames: frame-1 IoU against the annotation
    SyntheticSpec disk_spec;
    disk_spec.instances = 1;
    disk_spec.lookalike_pair = false;
    disk_spec.min_radius = 10.0;
    disk_spec.max_radius = 10.5;
    disk_spec.speed = 0;
    disk_spec.jitter = 0;
    std::uint64_t disk_seed = kSeed + 50;
    Sequence still;
    for (;; ++disk_seed) {  // deterministic scan to a disk-class draw
      still = gen_synthetic(disk_spec, disk_seed, "still");
      if (still.objects[0].cls == "disk") break;
    }
    const SequenceResult rs = segment_sequence(full, still.frames, *still.annotations[0], 1);
    const double still_iou = region_j(rs.masks[1], mask_from_labels(*still.annotations[0], 1));

    // constant-velocity disk: centroid track error under one radius
    SyntheticSpec mv_spec = disk_spec;
    mv_spec.speed = 1.4;
    std::uint64_t mv_seed = kSeed + 150;
    Sequence moving;
    for (;; ++mv_seed) {
      moving = gen_synthetic(mv_spec, mv_seed, "mv");
      if (moving.objects[0].cls == "disk") break;
    }
    const SequenceResult rm = segment_sequence(full, moving.frames, *moving.annotations[0], 1);
    double cerr = 0;
    int cn = 0;
    bool nonempty = true;
    for (std::size_t t = 1; t < moving.frames.size(); ++t) {
      if (rm.masks[t].area() == 0) {
        nonempty = false;
        continue;
      }
      const auto [px, py] = mask_centroid(rm.masks[t]);
      const auto [gx, gy] = mask_centroid(mask_from_labels(*moving.annotations[t], 1));
      cerr += std::hypot(px - gx, py - gy);
      ++cn;
    }
    cerr /= std::max(1, cn);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "still-frame IoU %.3f (>= 0.9); moving-disk centroid error %.2fpx (< radius %.1f)",
                  still_iou, cerr, moving.objects[0].radius);
    report(0, still_iou >= 0.9 && nonempty && cerr < moving.objects[0].radius, buf);
  }

  // [8] metric oracles
  {
    bool ok = true;
    // region_j analytic cases to 1e-9
    const Mask a = rect(30, 30, 5, 5, 10, 10);
    const Mask b = rect(30, 30, 5, 10, 10, 10);
    ok = ok && std::abs(region_j(a, a) - 1.0) < 1e-9;
    ok = ok && std::abs(region_j(a, b) - 1.0 / 3.0) < 1e-9;
    const Mask empty(30, 30);
    ok = ok && region_j(empty, empty) == 1.0 && region_j(a, empty) == 0.0;

    // contour_f against the brute-force oracle to 1e-6
    Rng rng(77);
    for (int trial = 0; trial < 3 && ok; ++trial) {
      Mask p(12, 12), g(12, 12);
      for (auto& v : p.v) v = rng.uniform01() < 0.35 ? 1 : 0;
      for (auto& v : g.v) v = rng.uniform01() < 0.35 ? 1 : 0;
      for (int tol : {0, 1, 2}) {
        ok = ok && std::abs(contour_f(p, g, tol) - contour_f_oracle(p, g, tol)) < 1e-6;
      }
    }
    const Mask square = rect(20, 20, 4, 4, 9, 9);
    const Mask eroded = rect(20, 20, 5, 5, 7, 7);
    ok = ok && std::abs(contour_f(square, eroded, 1) - 1.0) < 1e-6;

    // measure_stats to 1e-9
    std::vector<double> lin(8);
    for (int i = 0; i < 8; ++i) lin[static_cast<std::size_t>(i)] = 1.0 - i / 7.0;
    const MeasureStats st = measure_stats(lin);
    const double expect = (1.0 + 6.0 / 7.0) / 2.0 - (1.0 / 7.0) / 2.0;
    ok = ok && st.decay.has_value() && std::abs(*st.decay - expect) < 1e-9;
    const MeasureStats flat = measure_stats(std::vector<double>(10, 0.8));
    ok = ok && std::abs(flat.mean - 0.8) < 1e-9 && flat.recall == 1.0 && std::abs(*flat.decay) < 1e-9;

    // over_time_curve against direct binning to 1e-9
    std::vector<double> v(13);
    for (int i = 0; i < 13; ++i) v[static_cast<std::size_t>(i)] = i < 6 ? 1.0 : 0.25;
    const OverTimeCurve c = over_time_curve(v, 5);
    std::vector<double> sums(5, 0);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 13; ++i) {
      sums[static_cast<std::size_t>(5 * i / 13)] += v[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(5 * i / 13)];
    }
    for (int bin = 0; bin < 5; ++bin) {
      ok = ok && std::abs(c.bin_means[static_cast<std::size_t>(bin)] -
                          sums[static_cast<std::size_t>(bin)] / counts[static_cast<std::size_t>(bin)]) < 1e-9;
    }
    report(8, ok, "region_j/measure_stats/over_time_curve to 1e-9, contour_f vs brute force to 1e-6");
  }

  // [9] gamma embedding structure on the trained model + MDS recovery
  {
    std::vector<VisualGuide> guides;
    std::vector<std::string> tags;
    for (const Sequence& seq : bench.held) {
      for (int id : seq.object_ids) {
        const Mask m = mask_from_labels(*seq.annotations[0], id);
        if (m.area() == 0) continue;
        guides.push_back(crop_guide(seq.frames[0], m, full.config.guide_resolution));
        std::string tag = "unknown";
        for (const ObjectInfo& o : seq.objects) {
          if (o.id == id) tag = o.cls;
        }
        tags.push_back(tag);
      }
    }
    const GammaMatrix gammas = collect_gammas(full, guides, tags);
    const auto dist = euclidean_distances(gammas);
    double intra = 0, inter = 0;
    std::int64_t n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < gammas.rows.size(); ++i) {
      for (std::size_t j = i + 1; j < gammas.rows.size(); ++j) {
        if (tags[i] == tags[j]) {
          intra += dist[i][j];
          ++n_intra;
        } else {
          inter += dist[i][j];
          ++n_inter;
        }
      }
    }
    intra /= static_cast<double>(n_intra);
    inter /= static_cast<double>(n_inter);

    Rng rng(kSeed + 5);
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3)});
    std::vector<std::vector<double>> pd(pts.size(), std::vector<double>(pts.size(), 0));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = 0; j < pts.size(); ++j) {
        pd[i][j] = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
      }
    }
    const Embedding2D emb = classical_mds(pd);
    double worst_rel = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double rec = std::hypot(emb.points[i][0] - emb.points[j][0],
                                      emb.points[i][1] - emb.points[j][1]);
        worst_rel = std::max(worst_rel, std::abs(rec - pd[i][j]) / pd[i][j]);
      }
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gamma distances: intra %.4f < inter %.4f; MDS planar recovery %.1e (< 1e-5)",
                  intra, inter, worst_rel);
    report(9, intra < inter && worst_rel < 1e-5, buf);
  }

  // [10] persistence: bitwise checkpoint round trip, byte-reproducible datasets
  {
    const fs::path dir = fs::temp_directory_path() / "modseg_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    save_checkpoint(dir / "m1.ckpt", full);
    const ModelBundle back = load_checkpoint(dir / "m1.ckpt");
    save_checkpoint(dir / "m2.ckpt", back);
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    const bool ckpt_ok =
        back.checksum() == full.checksum() && slurp(dir / "m1.ckpt") == slurp(dir / "m2.ckpt");

    SyntheticSpec spec;
    bool tree_ok = true;
    for (int rep = 0; rep < 2; ++rep) {
      write_sequence(dir / ("d" + std::to_string(rep)), gen_synthetic(spec, kSeed + 3, "s0"));
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir / "d0")) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), dir / "d0");
      tree_ok = tree_ok && slurp(entry.path()) == slurp(dir / "d1" / rel);
    }
    fs::remove_all(dir);
    report(10, ckpt_ok && tree_ok,
           std::string("checkpoint round trip bitwise: ") + (ckpt_ok ? "yes" : "no") +
               "; synthetic dataset byte-reproducible: " + (tree_ok ? "yes" : "no"));
  }

  int failures = 0;
  for (const Criterion& c : g_results) failures += c.pass ? 0 : 1;
  std::printf("acceptance: %zu criteria, %d failed, %.0fs total\n", g_results.size(), failures,
              seconds_since(suite_start));
  return failures == 0 ? 0 : 1;
}
