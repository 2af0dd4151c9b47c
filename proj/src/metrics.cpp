#include "modseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "modseg/dataio.hpp"
#include "modseg/error.hpp"

namespace modseg {

namespace {

void require_same_shape(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError("mask shape mismatch: " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width));
  }
}

// Foreground pixels 4-adjacent to background; the outside of the image
// counts as background.
Mask boundary(const Mask& m) {
  Mask b(m.height, m.width);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(y, x)) continue;
      const bool edge = y == 0 || y == m.height - 1 || x == 0 || x == m.width - 1;
      if (edge || !m.at(y - 1, x) || !m.at(y + 1, x) || !m.at(y, x - 1) || !m.at(y, x + 1)) {
        b.at(y, x) = 1;
      }
    }
  }
  return b;
}

// Chebyshev dilation by tol (box of side 2*tol+1) via a prefix-sum count.
Mask dilate_box(const Mask& m, int tol) {
  if (tol <= 0) return m;
  const int h = m.height, w = m.width;
  std::vector<std::int64_t> ps(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      ps[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
          ps[static_cast<std::size_t>(y) * (w + 1) + x + 1] +
          ps[static_cast<std::size_t>(y + 1) * (w + 1) + x] -
          ps[static_cast<std::size_t>(y) * (w + 1) + x] + (m.at(y, x) ? 1 : 0);
    }
  }
  auto box_sum = [&](int y0, int x0, int y1, int x1) {  // inclusive, clamped
    y0 = std::max(y0, 0);
    x0 = std::max(x0, 0);
    y1 = std::min(y1, h - 1);
    x1 = std::min(x1, w - 1);
    return ps[static_cast<std::size_t>(y1 + 1) * (w + 1) + x1 + 1] -
           ps[static_cast<std::size_t>(y0) * (w + 1) + x1 + 1] -
           ps[static_cast<std::size_t>(y1 + 1) * (w + 1) + x0] +
           ps[static_cast<std::size_t>(y0) * (w + 1) + x0];
  };
  Mask out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(y, x) = box_sum(y - tol, x - tol, y + tol, x + tol) > 0 ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

double region_j(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt);
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    const bool p = pred.v[i] != 0, g = gt.v[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  if (uni == 0) return 1.0;  // both empty: the object has legitimately left
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double contour_f(const Mask& pred, const Mask& gt, int tol_px) {
  require_same_shape(pred, gt);
  const Mask pb = boundary(pred);
  const Mask gb = boundary(gt);
  const std::int64_t np = pb.area(), ng = gb.area();
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const Mask gd = dilate_box(gb, tol_px);
  const Mask pd = dilate_box(pb, tol_px);
  std::int64_t p_hit = 0, g_hit = 0;
  for (std::size_t i = 0; i < pb.v.size(); ++i) {
    if (pb.v[i] && gd.v[i]) ++p_hit;
    if (gb.v[i] && pd.v[i]) ++g_hit;
  }
  const double precision = static_cast<double>(p_hit) / static_cast<double>(np);
  const double recall = static_cast<double>(g_hit) / static_cast<double>(ng);
  if (precision + recall == 0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

int default_contour_tolerance(int height, int width) {
  const double diag = std::sqrt(static_cast<double>(height) * height +
                                static_cast<double>(width) * width);
  return static_cast<int>(std::ceil(0.008 * diag));
}

MeasureStats measure_stats(const std::vector<double>& values) {
  if (values.empty()) throw ContractError("measure_stats needs at least one value");
  MeasureStats st;
  const std::size_t t = values.size();
  double acc = 0;
  std::size_t over = 0;
  for (double v : values) {
    acc += v;
    if (v > 0.5) ++over;
  }
  st.mean = acc / static_cast<double>(t);
  st.recall = static_cast<double>(over) / static_cast<double>(t);
  if (t >= 4) {
    // contiguous index quartiles: frame i (0-based) belongs to bin 4i/T
    double qsum[4] = {0, 0, 0, 0};
    std::size_t qcnt[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < t; ++i) {
      const std::size_t q = 4 * i / t;
      qsum[q] += values[i];
      ++qcnt[q];
    }
    st.decay = qsum[0] / static_cast<double>(qcnt[0]) - qsum[3] / static_cast<double>(qcnt[3]);
  }
  return st;
}

OverTimeCurve over_time_curve(const std::vector<double>& values, int bins) {
  if (values.empty() || bins < 1) throw ContractError("over_time_curve needs values and bins >= 1");
  OverTimeCurve out;
  const std::size_t t = values.size();
  if (static_cast<std::size_t>(bins) > t) {
    bins = static_cast<int>(t);
    out.truncated = true;
  }
  std::vector<double> sums(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t b = static_cast<std::size_t>(bins) * i / t;
    sums[b] += values[i];
    ++counts[b];
  }
  for (int b = 0; b < bins; ++b) {
    out.bin_means.push_back(sums[static_cast<std::size_t>(b)] /
                            static_cast<double>(counts[static_cast<std::size_t>(b)]));
  }
  return out;
}

EvalReport evaluate_directories(const std::filesystem::path& pred_root,
                                const std::filesystem::path& gt_root) {
  const std::vector<Sequence> gt = load_dataset(gt_root);
  EvalReport report;
  double jsum = 0, fsum = 0;
  std::int64_t cnt = 0;
  for (const Sequence& seq : gt) {
    if (seq.object_ids.empty()) continue;
    const auto pred_dir = pred_root / seq.name / "masks";
    std::vector<LabelMap> pred;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      char name[16];
      std::snprintf(name, sizeof(name), "%05zu.png", t);
      const auto p = pred_dir / name;
      if (!std::filesystem::exists(p)) {
        throw IoError("missing prediction: " + p.string());
      }
      pred.push_back(read_label_png(p));
    }
    const int tol = default_contour_tolerance(seq.frames[0].height, seq.frames[0].width);
    for (int id : seq.object_ids) {
      EvalRow row;
      row.sequence = seq.name;
      row.object_id = id;
      // frame 0 is the annotated frame and never scored
      for (std::size_t t = 1; t < seq.frames.size(); ++t) {
        if (!seq.annotations[t].has_value()) continue;
        const Mask g = mask_from_labels(*seq.annotations[t], id);
        const Mask p = mask_from_labels(pred[t], id);
        row.j_frames.push_back(region_j(p, g));
        row.f_frames.push_back(contour_f(p, g, tol));
      }
      if (row.j_frames.empty()) continue;
      row.j = measure_stats(row.j_frames);
      row.f = measure_stats(row.f_frames);
      jsum += row.j.mean;
      fsum += row.f.mean;
      ++cnt;
      report.rows.push_back(std::move(row));
    }
  }
  if (cnt > 0) {
    report.j_mean_overall = jsum / static_cast<double>(cnt);
    report.f_mean_overall = fsum / static_cast<double>(cnt);
  }
  return report;
}

void write_eval_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << "sequence,object,J_mean,J_recall,J_decay,F_mean,F_recall,F_decay\n";
  auto decay_str = [](const MeasureStats& st) {
    if (!st.decay.has_value()) return std::string();
    std::ostringstream os;
    os << *st.decay;
    return os.str();
  };
  for (const EvalRow& r : report.rows) {
    out << r.sequence << "," << r.object_id << "," << r.j.mean << "," << r.j.recall << ","
        << decay_str(r.j) << "," << r.f.mean << "," << r.f.recall << "," << decay_str(r.f) << "\n";
  }
}

void write_over_time_curves(const std::filesystem::path& path, const EvalReport& report, int bins) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write curves: " + path.string());
  for (const EvalRow& r : report.rows) {
    for (const char* metric : {"J", "F"}) {
      const auto& frames = metric[0] == 'J' ? r.j_frames : r.f_frames;
      const OverTimeCurve c = over_time_curve(frames, bins);
      out << "# " << r.sequence << " " << r.object_id << " " << metric
          << (c.truncated ? " truncated" : "") << "\n";
      for (std::size_t b = 0; b < c.bin_means.size(); ++b) {
        out << b << "," << c.bin_means[b] << "\n";
      }
    }
  }
}

}  // namespace modseg
