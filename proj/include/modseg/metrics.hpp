#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "modseg/image.hpp"

namespace modseg {

// Intersection over union; 1 when both masks are empty, 0 when exactly one is.
double region_j(const Mask& pred, const Mask& gt);

// Boundary F-measure under a Chebyshev pixel tolerance (dilation-based
// matching). Boundary pixels are foreground pixels 4-adjacent to background
// or touching the image border.
double contour_f(const Mask& pred, const Mask& gt, int tol_px);

// DAVIS convention: 0.8% of the image diagonal, rounded up.
int default_contour_tolerance(int height, int width);

struct MeasureStats {
  double mean = 0;
  double recall = 0;                 // fraction of frames with v > 0.5
  std::optional<double> decay;       // absent when fewer than 4 frames
};

// decay = mean(first quartile) - mean(last quartile), quartiles taken as
// four contiguous bins over the frame index.
MeasureStats measure_stats(const std::vector<double>& values);

struct OverTimeCurve {
  std::vector<double> bin_means;
  bool truncated = false;  // fewer frames than requested bins
};

OverTimeCurve over_time_curve(const std::vector<double>& values, int bins = 10);

struct EvalRow {
  std::string sequence;
  int object_id = 0;
  std::vector<double> j_frames;  // frames 1..T-1 (frame 0 excluded)
  std::vector<double> f_frames;
  MeasureStats j;
  MeasureStats f;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double j_mean_overall = 0;
  double f_mean_overall = 0;
};

// Predictions in the mask layout under pred_root are scored against the
// ground-truth dataset at gt_root.
EvalReport evaluate_directories(const std::filesystem::path& pred_root,
                                const std::filesystem::path& gt_root);

// CSV with header sequence,object,J_mean,J_recall,J_decay,F_mean,F_recall,F_decay
void write_eval_report(const std::filesystem::path& path, const EvalReport& report);
// Per row and metric: "# <sequence> <object> <J|F>" then bin,mean lines.
void write_over_time_curves(const std::filesystem::path& path, const EvalReport& report,
                            int bins = 10);

}  // namespace modseg
