#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "modseg/dataio.hpp"
#include "modseg/guides.hpp"
#include "modseg/model.hpp"
#include "modseg/train.hpp"

namespace modseg {

struct InferOptions {
  float threshold = 0.5f;
  // > 0 enables the one-shot fine-tuning add-on before the sequence runs.
  int oneshot_iters = 0;
  double oneshot_lr = 1e-6;
  std::uint64_t seed = 1234;
};

struct ProbMap {
  int height = 0;
  int width = 0;
  std::vector<float> v;
};

// Single-object trajectory through one sequence. Frame 0 carries the given
// annotation; the visual modulator runs exactly once.
struct SequenceResult {
  int object_id = 0;
  std::vector<ProbMap> probs;
  std::vector<Mask> masks;
  std::vector<MaskStats> priors_used;  // stats fed to the spatial guide, t >= 1
  double adapt_ms = 0;
  std::vector<double> frame_ms;  // per frame, t >= 1
  int visual_modulate_calls = 0;
};

SequenceResult segment_sequence(const ModelBundle& model, const std::vector<Image>& frames,
                                const LabelMap& annotation0, int object_id,
                                const InferOptions& opts = {});

// Pixel-wise argmax over objects where the winning probability clears the
// threshold; ties go to the lowest id, everything else is background.
LabelMap merge_objects(const std::vector<const ProbMap*>& maps, const std::vector<int>& ids,
                       float threshold);

struct SequenceOutput {
  std::string name;
  std::vector<SequenceResult> per_object;
  std::vector<LabelMap> merged;  // per frame
};

SequenceOutput segment_all(const ModelBundle& model, const Sequence& seq,
                           const InferOptions& opts = {});

// Writes <root>/<sequence>/masks/%05d.png for the merged label maps.
void write_sequence_masks(const std::filesystem::path& root, const SequenceOutput& out);

// One timing line per object: sequence,object,adapt_ms,mean_frame_ms
std::string timing_csv_header();
std::string timing_csv_row(const std::string& sequence, const SequenceResult& r);

}  // namespace modseg
