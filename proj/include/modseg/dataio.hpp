#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "modseg/image.hpp"
#include "modseg/rng.hpp"

namespace modseg {

// Per-object metadata carried by the synthetic generator (meta.txt).
struct ObjectInfo {
  int id = 0;
  std::string cls;  // "disk" | "square" | "triangle"
  std::array<std::uint8_t, 3> color{0, 0, 0};
  double radius = 0;
  bool lookalike = false;  // member of the identical-instance pair
};

struct Sequence {
  std::string name;
  std::vector<Image> frames;
  // One entry per frame; absent where no mask file exists.
  std::vector<std::optional<LabelMap>> annotations;
  std::vector<int> object_ids;  // ids present in frame 0
  std::vector<ObjectInfo> objects;
};

// Moving-shapes scene description. Objects never overlap and never leave
// the frame; with lookalike_pair set, two identical same-class instances
// approach each other mid-sequence.
struct SyntheticSpec {
  int width = 64;
  int height = 64;
  int frames = 20;
  int instances = 3;
  bool lookalike_pair = true;
  double min_radius = 7.5;
  double max_radius = 10.0;
  double speed = 1.2;   // base velocity, px/frame
  double jitter = 0.2;  // per-frame velocity perturbation
  double noise = 5.0;   // image noise amplitude, u8 levels
};

Sequence gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                       const std::string& name = "seq");

// Directory layout (bit-exact):
//   <root>/<sequence>/frames/00000.png ...  8-bit RGB
//   <root>/<sequence>/masks/00000.png ...   8-bit indexed, 0 = background
// plus an optional meta.txt with object classes.
Sequence load_sequence(const std::filesystem::path& dir);
std::vector<Sequence> load_dataset(const std::filesystem::path& root);
void write_sequence(const std::filesystem::path& root, const Sequence& seq);

struct StaticSample {
  Image image;
  Mask mask;
  std::string cls;
  std::string sequence;
  int frame = 0;
  int object_id = 0;
};

// One sample per (frame, object) pair whose mask area is at least
// min_area_fraction of the image; order is a seeded shuffle.
std::vector<StaticSample> static_samples(const std::vector<Sequence>& seqs,
                                         double min_area_fraction = 0.03,
                                         std::uint64_t shuffle_seed = 0);

}  // namespace modseg
