#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "modseg/ops.hpp"
#include "modseg/tensor.hpp"

namespace modseg {

// Model variants for the ablation study: the full model, the one without
// channel-wise visual modulation (gamma forced to 1), and the one without
// the spatial prior (bias maps forced to 0).
enum class Ablation { None, NoVisual, NoSpatial };

struct ModConfig {
  // Output channels per backbone conv layer, grouped into stages; 2x2 max
  // pooling runs between stages.
  std::vector<int> stage_channels = {16, 16, 32, 32, 64, 64};
  std::vector<int> stage_sizes = {2, 2, 2};  // conv layers per stage
  // Leading conv layers without modulation; early features are too
  // scale-sensitive to modulate.
  int skip_first = 2;
  int guide_resolution = 64;  // visual-guide side length
  int fusion_channels = 16;   // hypercolumn side-output width
  std::vector<int> input_sizes = {48, 56, 64};
  // Modulation sits between the conv and its relu by default; the flag
  // flips it to post-activation.
  bool modulate_pre_activation = true;
  Ablation ablation = Ablation::None;

  int conv_count() const { return static_cast<int>(stage_channels.size()); }
  int num_stages() const { return static_cast<int>(stage_sizes.size()); }
  int pool_count() const { return num_stages() - 1; }
  int size_divisor() const { return 1 << pool_count(); }
  int stage_of_layer(int layer) const;
  void validate() const;
};

int count_modulated_layers(const ModConfig& config);

// Offsets of each modulated layer's channel block inside the flat gamma
// vector; slices are contiguous, disjoint, and cover [0, D).
struct LayerSlice {
  int offset = 0;
  int channels = 0;
};
std::vector<LayerSlice> modulation_partition(const ModConfig& config);
int modulation_width(const ModConfig& config);  // D

// Channel-wise scale parameters for all modulation layers.
struct ModulationParams {
  Tensor gamma;  // [D]
  std::vector<LayerSlice> partition;
};

// Element-wise bias maps, one [C_l, h_l, w_l] tensor per modulated layer.
struct SpatialPriorMaps {
  std::vector<Tensor> beta;
};

struct ModelBundle {
  ModConfig config;
  // segmentation backbone + hypercolumn head
  std::vector<Tensor> bb_w, bb_b;
  std::vector<Tensor> side_w, side_b;  // 1x1 side convs, stages 1..S-1
  Tensor fuse_w, fuse_b;               // 1x1 fusion to one logit channel
  // visual modulator: conv trunk + global average pool + fc of width D
  std::vector<Tensor> vm_w, vm_b;
  Tensor vm_fc_w, vm_fc_b;
  // spatial modulator: per modulated layer a 1-in C_l-out 1x1 conv
  std::vector<Tensor> sm_w, sm_b;

  std::vector<Parameter> parameters() const;
  std::vector<Parameter> segnet_parameters() const;
  std::vector<Parameter> visual_parameters() const;
  std::vector<Parameter> spatial_parameters() const;

  ModelBundle clone() const;
  void set_requires_grad(bool v);
  std::uint64_t checksum() const;
};

// Fan-in-scaled uniform init everywhere except the visual modulator's final
// layer (weights 0, biases 1, so gamma starts at exactly 1) and the spatial
// modulator (small uniform).
ModelBundle init_model(const ModConfig& config, std::uint64_t seed);

// guide: [1,3,R,R] with R = config.guide_resolution.
ModulationParams visual_modulate(Tape& tape, const ModelBundle& model, const Tensor& guide);

// Feature-map (h,w) of every modulated layer for an input of size HxW.
std::vector<std::pair<int, int>> layer_feature_sizes(const ModConfig& config, int height, int width);

// heatmap: [1,1,H,W]; resized per layer, then beta = gamma_tilde*m + beta_tilde
// via the layer's 1x1 conv.
SpatialPriorMaps spatial_modulate(Tape& tape, const ModelBundle& model, const Tensor& heatmap,
                                  const std::vector<std::pair<int, int>>& layer_sizes);

// y[n,c,:,:] = gamma[c] * x[n,c,:,:] + beta[c,:,:]
Tensor apply_modulation(Tape& tape, const Tensor& x, const Tensor& gamma_l, const Tensor& beta_l);

// Modulated forward pass to a [1,1,H,W] logit map.
Tensor seg_forward(Tape& tape, const ModelBundle& model, const Tensor& image,
                   const ModulationParams& gamma, const SpatialPriorMaps& priors);

// The unmodulated backbone, used by identity tests and the NoVisual+NoSpatial
// degenerate case.
Tensor seg_forward_plain(Tape& tape, const ModelBundle& model, const Tensor& image);

// Constant gamma == 1 (not on any tape).
ModulationParams identity_modulation(const ModConfig& config);
// All-zero bias maps for an input of size HxW.
SpatialPriorMaps zero_priors(const ModConfig& config, int height, int width);

}  // namespace modseg
