#include "modseg/model.hpp"

#include <cmath>
#include <numeric>

#include "modseg/rng.hpp"

namespace modseg {

int ModConfig::stage_of_layer(int layer) const {
  int l = layer;
  for (int s = 0; s < num_stages(); ++s) {
    if (l < stage_sizes[static_cast<std::size_t>(s)]) return s;
    l -= stage_sizes[static_cast<std::size_t>(s)];
  }
  throw ShapeError("layer index " + std::to_string(layer) + " out of range");
}

void ModConfig::validate() const {
  if (stage_channels.empty()) throw ConfigError("stage_channels must not be empty");
  for (int c : stage_channels) {
    if (c < 1) throw ConfigError("stage_channels entries must be >= 1");
  }
  if (stage_sizes.empty()) throw ConfigError("stage_sizes must not be empty");
  const int total = std::accumulate(stage_sizes.begin(), stage_sizes.end(), 0);
  if (total != conv_count()) {
    throw ConfigError("stage_sizes sum (" + std::to_string(total) +
                      ") must equal the conv layer count (" + std::to_string(conv_count()) + ")");
  }
  if (skip_first < 0 || skip_first >= conv_count()) {
    throw ConfigError("skip_first must lie in [0, conv count)");
  }
  if (fusion_channels < 1) throw ConfigError("fusion_channels must be >= 1");
  if (num_stages() < 2) throw ConfigError("need at least two stages for the hypercolumn head");
  const int div = size_divisor();
  if (guide_resolution < div || guide_resolution % div != 0) {
    throw ConfigError("guide_resolution must be a positive multiple of " + std::to_string(div));
  }
  if (input_sizes.empty()) throw ConfigError("input_sizes must not be empty");
  for (int s : input_sizes) {
    if (s < div || s % div != 0) {
      throw ConfigError("input size " + std::to_string(s) + " is not a multiple of " +
                        std::to_string(div));
    }
  }
}

int count_modulated_layers(const ModConfig& config) {
  return config.conv_count() - config.skip_first;
}

std::vector<LayerSlice> modulation_partition(const ModConfig& config) {
  std::vector<LayerSlice> out;
  int offset = 0;
  for (int l = config.skip_first; l < config.conv_count(); ++l) {
    const int c = config.stage_channels[static_cast<std::size_t>(l)];
    out.push_back(LayerSlice{offset, c});
    offset += c;
  }
  return out;
}

int modulation_width(const ModConfig& config) {
  int d = 0;
  for (int l = config.skip_first; l < config.conv_count(); ++l) {
    d += config.stage_channels[static_cast<std::size_t>(l)];
  }
  return d;
}

namespace {

Tensor uniform_tensor(std::vector<int> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) {
    t.data()[i] = static_cast<real>(rng.uniform(-bound, bound));
  }
  return t;
}

Tensor he_conv(int cout, int cin, int k, Rng& rng) {
  return uniform_tensor({cout, cin, k, k}, std::sqrt(6.0 / (cin * k * k)), rng);
}

void collect(std::vector<Parameter>& out, const std::string& name, const Tensor& t) {
  out.push_back(Parameter{name, t});
}

}  // namespace

ModelBundle init_model(const ModConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelBundle m;
  m.config = config;

  int cin = 3;
  for (int l = 0; l < config.conv_count(); ++l) {
    const int cout = config.stage_channels[static_cast<std::size_t>(l)];
    m.bb_w.push_back(he_conv(cout, cin, 3, rng));
    m.bb_b.push_back(Tensor({cout}));
    cin = cout;
  }
  // side outputs tap the last conv of every stage after the first
  for (int s = 1; s < config.num_stages(); ++s) {
    int last = -1, l = 0;
    for (int ss = 0; ss <= s; ++ss) {
      l += config.stage_sizes[static_cast<std::size_t>(ss)];
    }
    last = l - 1;
    const int c = config.stage_channels[static_cast<std::size_t>(last)];
    m.side_w.push_back(he_conv(config.fusion_channels, c, 1, rng));
    m.side_b.push_back(Tensor({config.fusion_channels}));
  }
  const int fused = config.fusion_channels * (config.num_stages() - 1);
  m.fuse_w = he_conv(1, fused, 1, rng);
  m.fuse_b = Tensor({1});

  // visual modulator trunk mirrors the backbone staging
  cin = 3;
  for (int l = 0; l < config.conv_count(); ++l) {
    const int cout = config.stage_channels[static_cast<std::size_t>(l)];
    m.vm_w.push_back(he_conv(cout, cin, 3, rng));
    m.vm_b.push_back(Tensor({cout}));
    cin = cout;
  }
  const int d = modulation_width(config);
  // zero weights + unit biases make gamma exactly 1 at init
  m.vm_fc_w = Tensor({config.stage_channels.back(), d});
  m.vm_fc_b = Tensor({d}, real(1));

  for (int l = config.skip_first; l < config.conv_count(); ++l) {
    const int c = config.stage_channels[static_cast<std::size_t>(l)];
    m.sm_w.push_back(uniform_tensor({c, 1, 1, 1}, 0.1, rng));
    m.sm_b.push_back(uniform_tensor({c}, 0.1, rng));
  }
  return m;
}

std::vector<Parameter> ModelBundle::segnet_parameters() const {
  std::vector<Parameter> out;
  for (std::size_t l = 0; l < bb_w.size(); ++l) {
    collect(out, "segnet.conv" + std::to_string(l) + ".w", bb_w[l]);
    collect(out, "segnet.conv" + std::to_string(l) + ".b", bb_b[l]);
  }
  for (std::size_t s = 0; s < side_w.size(); ++s) {
    collect(out, "segnet.side" + std::to_string(s + 1) + ".w", side_w[s]);
    collect(out, "segnet.side" + std::to_string(s + 1) + ".b", side_b[s]);
  }
  collect(out, "segnet.fuse.w", fuse_w);
  collect(out, "segnet.fuse.b", fuse_b);
  return out;
}

std::vector<Parameter> ModelBundle::visual_parameters() const {
  std::vector<Parameter> out;
  for (std::size_t l = 0; l < vm_w.size(); ++l) {
    collect(out, "vmod.conv" + std::to_string(l) + ".w", vm_w[l]);
    collect(out, "vmod.conv" + std::to_string(l) + ".b", vm_b[l]);
  }
  collect(out, "vmod.fc.w", vm_fc_w);
  collect(out, "vmod.fc.b", vm_fc_b);
  return out;
}

std::vector<Parameter> ModelBundle::spatial_parameters() const {
  std::vector<Parameter> out;
  for (std::size_t l = 0; l < sm_w.size(); ++l) {
    collect(out, "smod.layer" + std::to_string(l) + ".w", sm_w[l]);
    collect(out, "smod.layer" + std::to_string(l) + ".b", sm_b[l]);
  }
  return out;
}

std::vector<Parameter> ModelBundle::parameters() const {
  std::vector<Parameter> out = segnet_parameters();
  for (auto& p : visual_parameters()) out.push_back(p);
  for (auto& p : spatial_parameters()) out.push_back(p);
  return out;
}

ModelBundle ModelBundle::clone() const {
  ModelBundle m;
  m.config = config;
  for (const Tensor& t : bb_w) m.bb_w.push_back(t.clone());
  for (const Tensor& t : bb_b) m.bb_b.push_back(t.clone());
  for (const Tensor& t : side_w) m.side_w.push_back(t.clone());
  for (const Tensor& t : side_b) m.side_b.push_back(t.clone());
  m.fuse_w = fuse_w.clone();
  m.fuse_b = fuse_b.clone();
  for (const Tensor& t : vm_w) m.vm_w.push_back(t.clone());
  for (const Tensor& t : vm_b) m.vm_b.push_back(t.clone());
  m.vm_fc_w = vm_fc_w.clone();
  m.vm_fc_b = vm_fc_b.clone();
  for (const Tensor& t : sm_w) m.sm_w.push_back(t.clone());
  for (const Tensor& t : sm_b) m.sm_b.push_back(t.clone());
  return m;
}

void ModelBundle::set_requires_grad(bool v) {
  for (Parameter& p : parameters()) p.value.set_requires_grad(v);
}

std::uint64_t ModelBundle::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const Tensor& t) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    const std::size_t n = static_cast<std::size_t>(t.size()) * sizeof(real);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const Parameter& p : parameters()) mix(p.value);
  return h;
}

ModulationParams visual_modulate(Tape& tape, const ModelBundle& model, const Tensor& guide) {
  const ModConfig& cfg = model.config;
  if (guide.ndim() != 4 || guide.dim(0) != 1 || guide.dim(1) != 3 ||
      guide.dim(2) != cfg.guide_resolution || guide.dim(3) != cfg.guide_resolution) {
    throw ShapeError("visual guide must be [1,3," + std::to_string(cfg.guide_resolution) + "," +
                     std::to_string(cfg.guide_resolution) + "], got " + shape_str(guide.shape()));
  }
  Tensor x = guide;
  int l = 0;
  for (int s = 0; s < cfg.num_stages(); ++s) {
    for (int k = 0; k < cfg.stage_sizes[static_cast<std::size_t>(s)]; ++k, ++l) {
      x = relu(tape, conv2d(tape, x, model.vm_w[static_cast<std::size_t>(l)],
                            model.vm_b[static_cast<std::size_t>(l)], Padding::Same));
    }
    if (s + 1 < cfg.num_stages()) x = maxpool2(tape, x);
  }
  Tensor pooled = global_avg_pool(tape, x);
  Tensor g = linear(tape, pooled, model.vm_fc_w, model.vm_fc_b);
  ModulationParams out;
  out.gamma = reshape(tape, g, {modulation_width(cfg)});
  out.partition = modulation_partition(cfg);
  return out;
}

std::vector<std::pair<int, int>> layer_feature_sizes(const ModConfig& config, int height, int width) {
  std::vector<std::pair<int, int>> out;
  for (int l = config.skip_first; l < config.conv_count(); ++l) {
    const int s = config.stage_of_layer(l);
    out.emplace_back(height >> s, width >> s);
  }
  return out;
}

SpatialPriorMaps spatial_modulate(Tape& tape, const ModelBundle& model, const Tensor& heatmap,
                                  const std::vector<std::pair<int, int>>& layer_sizes) {
  const ModConfig& cfg = model.config;
  if (heatmap.ndim() != 4 || heatmap.dim(0) != 1 || heatmap.dim(1) != 1) {
    throw ShapeError("spatial guide must be [1,1,H,W], got " + shape_str(heatmap.shape()));
  }
  const auto expected = layer_feature_sizes(cfg, heatmap.dim(2), heatmap.dim(3));
  if (layer_sizes != expected) {
    throw ShapeError("layer_sizes inconsistent with config for a " +
                     std::to_string(heatmap.dim(2)) + "x" + std::to_string(heatmap.dim(3)) +
                     " guide");
  }
  SpatialPriorMaps maps;
  for (std::size_t j = 0; j < layer_sizes.size(); ++j) {
    const auto [h, w] = layer_sizes[j];
    Tensor m = bilinear_resize(tape, heatmap, h, w);
    Tensor beta = conv2d(tape, m, model.sm_w[j], model.sm_b[j], Padding::Same);
    maps.beta.push_back(reshape(tape, beta, {model.sm_w[j].dim(0), h, w}));
  }
  return maps;
}

Tensor apply_modulation(Tape& tape, const Tensor& x, const Tensor& gamma_l, const Tensor& beta_l) {
  if (x.ndim() != 4) throw ShapeError("apply_modulation expects x as [N,C,H,W]");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (gamma_l.ndim() != 1 || gamma_l.dim(0) != c) {
    throw ShapeError("gamma slice must be [" + std::to_string(c) + "], got " +
                     shape_str(gamma_l.shape()));
  }
  if (beta_l.ndim() != 3 || beta_l.dim(0) != c || beta_l.dim(1) != h || beta_l.dim(2) != w) {
    throw ShapeError("bias map must be [" + std::to_string(c) + "," + std::to_string(h) + "," +
                     std::to_string(w) + "], got " + shape_str(beta_l.shape()));
  }
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  Tensor y(x.shape());
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      const real g = gamma_l.data()[ci];
      const real* xp = x.data() + (static_cast<std::int64_t>(ni) * c + ci) * hw;
      const real* bp = beta_l.data() + static_cast<std::int64_t>(ci) * hw;
      real* yp = y.data() + (static_cast<std::int64_t>(ni) * c + ci) * hw;
      for (std::int64_t i = 0; i < hw; ++i) yp[i] = g * xp[i] + bp[i];
    }
  }
  if (track(tape, x, gamma_l, beta_l)) {
    y.set_requires_grad(true);
    Tensor xin = x, gin = gamma_l, bin = beta_l, yout = y;
    tape.record(y, [xin, gin, bin, yout, n, c, hw]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gg = gin.requires_grad() ? gin.ensure_grad() : nullptr;
      real* gb = bin.requires_grad() ? bin.ensure_grad() : nullptr;
      real* gx = xin.requires_grad() ? xin.ensure_grad() : nullptr;
      for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
          const std::int64_t ofs = (static_cast<std::int64_t>(ni) * c + ci) * hw;
          const real* gyp = gy + ofs;
          const real* xp = xin.data() + ofs;
          if (gg) {
            double acc = 0;
            for (std::int64_t i = 0; i < hw; ++i) acc += static_cast<double>(gyp[i]) * xp[i];
            gg[ci] += static_cast<real>(acc);
          }
          if (gb) {
            real* gbp = gb + static_cast<std::int64_t>(ci) * hw;
            for (std::int64_t i = 0; i < hw; ++i) gbp[i] += gyp[i];
          }
          if (gx) {
            const real g = gin.data()[ci];
            real* gxp = gx + ofs;
            for (std::int64_t i = 0; i < hw; ++i) gxp[i] += g * gyp[i];
          }
        }
      }
    });
  }
  return y;
}

namespace {

Tensor forward_impl(Tape& tape, const ModelBundle& model, const Tensor& image,
                    const ModulationParams* gamma, const SpatialPriorMaps* priors) {
  const ModConfig& cfg = model.config;
  if (image.ndim() != 4 || image.dim(0) != 1 || image.dim(1) != 3) {
    throw ShapeError("seg_forward expects an image [1,3,H,W], got " + shape_str(image.shape()));
  }
  const int height = image.dim(2), width = image.dim(3);
  const int div = cfg.size_divisor();
  if (height % div != 0 || width % div != 0) {
    throw ShapeError("input " + std::to_string(height) + "x" + std::to_string(width) +
                     " is not divisible by " + std::to_string(div));
  }
  if (gamma) {
    if (gamma->gamma.dim(0) != modulation_width(cfg)) {
      throw ShapeError("gamma width mismatch: expected " + std::to_string(modulation_width(cfg)));
    }
    if (!priors || priors->beta.size() != static_cast<std::size_t>(count_modulated_layers(cfg))) {
      throw ShapeError("spatial prior maps must cover every modulated layer");
    }
  }

  Tensor x = image;
  std::vector<Tensor> sides;
  int l = 0;
  int side_idx = 0;
  for (int s = 0; s < cfg.num_stages(); ++s) {
    for (int k = 0; k < cfg.stage_sizes[static_cast<std::size_t>(s)]; ++k, ++l) {
      x = conv2d(tape, x, model.bb_w[static_cast<std::size_t>(l)],
                 model.bb_b[static_cast<std::size_t>(l)], Padding::Same);
      const bool modulated = gamma && l >= cfg.skip_first;
      if (modulated && cfg.modulate_pre_activation) {
        const LayerSlice slc = gamma->partition[static_cast<std::size_t>(l - cfg.skip_first)];
        Tensor gl = slice_vec(tape, gamma->gamma, slc.offset, slc.channels);
        x = apply_modulation(tape, x, gl, priors->beta[static_cast<std::size_t>(l - cfg.skip_first)]);
      }
      x = relu(tape, x);
      if (modulated && !cfg.modulate_pre_activation) {
        const LayerSlice slc = gamma->partition[static_cast<std::size_t>(l - cfg.skip_first)];
        Tensor gl = slice_vec(tape, gamma->gamma, slc.offset, slc.channels);
        x = apply_modulation(tape, x, gl, priors->beta[static_cast<std::size_t>(l - cfg.skip_first)]);
      }
    }
    if (s >= 1) {
      Tensor side = conv2d(tape, x, model.side_w[static_cast<std::size_t>(side_idx)],
                           model.side_b[static_cast<std::size_t>(side_idx)], Padding::Same);
      sides.push_back(bilinear_resize(tape, side, height, width));
      ++side_idx;
    }
    if (s + 1 < cfg.num_stages()) x = maxpool2(tape, x);
  }
  Tensor fused = concat_channels(tape, sides);
  return conv2d(tape, fused, model.fuse_w, model.fuse_b, Padding::Same);
}

}  // namespace

Tensor seg_forward(Tape& tape, const ModelBundle& model, const Tensor& image,
                   const ModulationParams& gamma, const SpatialPriorMaps& priors) {
  return forward_impl(tape, model, image, &gamma, &priors);
}

Tensor seg_forward_plain(Tape& tape, const ModelBundle& model, const Tensor& image) {
  return forward_impl(tape, model, image, nullptr, nullptr);
}

ModulationParams identity_modulation(const ModConfig& config) {
  ModulationParams p;
  p.gamma = Tensor({modulation_width(config)}, real(1));
  p.partition = modulation_partition(config);
  return p;
}

SpatialPriorMaps zero_priors(const ModConfig& config, int height, int width) {
  SpatialPriorMaps maps;
  const auto sizes = layer_feature_sizes(config, height, width);
  const auto part = modulation_partition(config);
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    maps.beta.push_back(Tensor({part[j].channels, sizes[j].first, sizes[j].second}));
  }
  return maps;
}

}  // namespace modseg
