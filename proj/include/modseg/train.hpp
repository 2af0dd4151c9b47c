#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "modseg/adam.hpp"
#include "modseg/dataio.hpp"
#include "modseg/loss.hpp"
#include "modseg/model.hpp"

namespace modseg {

struct TrainConfig {
  // Stage 1 on static samples runs two phases with dropped learning rate.
  int static_epochs1 = 10;
  double static_lr1 = 1e-5;
  int static_epochs2 = 5;
  double static_lr2 = 1e-6;
  // Stage 2 on video sequences.
  int video_epochs = 20;
  double video_lr = 1e-6;
  // Optional per-sequence one-shot fine-tuning add-on.
  int oneshot_iters = 100;
  double oneshot_lr = 1e-6;

  // Realized as gradient accumulation over single-image forwards.
  int batch_size = 4;
  std::uint64_t seed = 1234;
  double min_area_fraction = 0.03;

  // Data-augmentation switches (ablation handles).
  bool augment_visual = true;
  bool augment_spatial = true;
  bool random_crop = true;

  // Exclude both modulators from optimizer updates.
  bool freeze_modulators = false;

  // Stop after this many optimizer steps when > 0 (testing hook).
  int max_steps = 0;
};

struct LossPoint {
  std::int64_t step = 0;
  double loss = 0;
  double beta = 0;
};

struct TrainResult {
  std::vector<LossPoint> curve;
};

// Stage 1: every sample provides its own visual guide (augmented) and a
// spatial guide from its own (augmented) mask stats. Throws NumericError on
// a non-finite loss.
TrainResult train_static(ModelBundle& model, const std::vector<StaticSample>& samples,
                         const TrainConfig& cfg);

// Stage 2: visual guide from a random frame of the same object, spatial
// guide from the ground truth at t-1, target at t.
TrainResult train_video(ModelBundle& model, const std::vector<Sequence>& sequences,
                        const TrainConfig& cfg);

// Clones the model and adapts the copy on the annotated first frame; the
// source model is never mutated.
ModelBundle finetune_oneshot(const ModelBundle& model, const Image& frame0, const Mask& mask0,
                             int iters, double lr, const TrainConfig& cfg);

// Uniform draw over frames where the object exists; used by train_video to
// pick the visual-guide frame.
int pick_guide_frame(const Sequence& seq, int object_id, Rng& rng);

// CSV: step,loss,beta
void write_loss_curve(const std::filesystem::path& path, const std::vector<LossPoint>& curve);

}  // namespace modseg
