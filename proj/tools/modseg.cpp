#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "modseg/analysis.hpp"
#include "modseg/checkpoint.hpp"
#include "modseg/dataio.hpp"
#include "modseg/infer.hpp"
#include "modseg/metrics.hpp"
#include "modseg/opcheck.hpp"
#include "modseg/parallel.hpp"
#include "modseg/runconfig.hpp"
#include "modseg/train.hpp"

namespace fs = std::filesystem;
using namespace modseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;

void echo_config(const fs::path& path, const RunConfig& cfg) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config echo: " + path.string());
  out << serialize_config(cfg);
}

char frame_name_buf[16];
const char* frame_name(std::size_t t) {
  std::snprintf(frame_name_buf, sizeof(frame_name_buf), "%05zu.png", t);
  return frame_name_buf;
}

std::string seq_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "seq%03d", i);
  return buf;
}

int cmd_make_synthetic(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  echo_config(out_dir / "run_config.txt", cfg);
  if (cfg.synth_sequences == 0) {
    std::cerr << "warning: synth.sequences = 0, writing an empty dataset root\n";
  }
  for (int i = 0; i < cfg.synth_sequences; ++i) {
    const Sequence seq = gen_synthetic(cfg.synth, mix_seed(cfg.seed, static_cast<std::uint64_t>(i)),
                                       seq_name(i));
    write_sequence(out_dir, seq);
  }
  std::cout << "wrote " << cfg.synth_sequences << " sequences to " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_train(RunConfig cfg, const std::string& stage, const fs::path& data_dir,
              const fs::path& out_ckpt, const fs::path& init_ckpt) {
  const std::vector<Sequence> data = load_dataset(data_dir);

  ModelBundle model = init_ckpt.empty() ? init_model(cfg.model, cfg.seed)
                                        : load_checkpoint(init_ckpt);
  cfg.model = model.config;  // the checkpoint's architecture wins on resume
  cfg.train.seed = cfg.seed;

  TrainResult result;
  if (stage == "static") {
    const auto samples = static_samples(data, cfg.train.min_area_fraction, cfg.seed);
    result = train_static(model, samples, cfg.train);
  } else {
    result = train_video(model, data, cfg.train);
  }

  if (!out_ckpt.parent_path().empty()) fs::create_directories(out_ckpt.parent_path());
  save_checkpoint(out_ckpt, model);
  write_loss_curve(fs::path(out_ckpt.string() + ".loss.csv"), result.curve);
  echo_config(fs::path(out_ckpt.string() + ".config.txt"), cfg);
  if (!result.curve.empty()) {
    std::cout << "trained " << result.curve.size() << " steps; final loss "
              << result.curve.back().loss << "\n";
  } else {
    std::cout << "no training steps requested; checkpoint re-emitted\n";
  }
  std::cout << "checkpoint: " << out_ckpt.string() << "\n";
  return kExitOk;
}

int cmd_infer(const RunConfig& cfg, const fs::path& ckpt, const fs::path& data_dir,
              const fs::path& out_dir) {
  const ModelBundle model = load_checkpoint(ckpt);
  const std::vector<Sequence> data = load_dataset(data_dir);
  fs::create_directories(out_dir);
  echo_config(out_dir / "run_config.txt", cfg);

  std::vector<SequenceOutput> outputs(data.size());
  parallel_for(static_cast<int>(data.size()), [&](int i) {
    outputs[static_cast<std::size_t>(i)] =
        segment_all(model, data[static_cast<std::size_t>(i)], cfg.infer);
  });

  std::ofstream timing(out_dir / "timing.csv");
  timing << timing_csv_header() << "\n";
  for (const SequenceOutput& out : outputs) {
    write_sequence_masks(out_dir, out);
    for (const SequenceResult& r : out.per_object) {
      timing << timing_csv_row(out.name, r) << "\n";
    }
  }
  std::cout << "segmented " << outputs.size() << " sequences into " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const fs::path& pred, const fs::path& gt,
             const fs::path& report_path) {
  const EvalReport report = evaluate_directories(pred, gt);
  if (!report_path.parent_path().empty()) fs::create_directories(report_path.parent_path());
  write_eval_report(report_path, report);
  write_over_time_curves(fs::path(report_path.string() + ".curves.csv"), report, cfg.eval_bins);
  echo_config(fs::path(report_path.string() + ".config.txt"), cfg);
  std::printf("J_mean %.4f  F_mean %.4f over %zu (sequence, object) pairs\n",
              report.j_mean_overall, report.f_mean_overall, report.rows.size());
  return kExitOk;
}

int cmd_analyze(const RunConfig& cfg, const fs::path& ckpt, const fs::path& guides_dir,
                const std::string& mode, const fs::path& out_path, double zero_eps) {
  const ModelBundle model = load_checkpoint(ckpt);
  if (!out_path.parent_path().empty()) fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write analysis output: " + out_path.string());
  echo_config(fs::path(out_path.string() + ".config.txt"), cfg);

  if (mode == "spatialstats") {
    for (const SpatialScaleReport& rep : spatial_scale_stats(model, zero_eps)) {
      out << "# layer " << rep.layer << " zero_fraction " << rep.zero_fraction << " zero_eps "
          << zero_eps << "\n";
      const double width = (rep.hist.hi - rep.hist.lo) / static_cast<double>(rep.hist.counts.size());
      for (std::size_t b = 0; b < rep.hist.counts.size(); ++b) {
        out << rep.hist.lo + width * static_cast<double>(b) << ","
            << rep.hist.lo + width * static_cast<double>(b + 1) << "," << rep.hist.counts[b] << "\n";
      }
    }
    return kExitOk;
  }

  // guide collection from first-frame objects
  std::vector<VisualGuide> guides;
  std::vector<std::string> tags;
  for (const Sequence& seq : load_dataset(guides_dir)) {
    if (seq.annotations.empty() || !seq.annotations[0].has_value()) continue;
    for (int id : seq.object_ids) {
      const Mask m = mask_from_labels(*seq.annotations[0], id);
      if (m.area() == 0) continue;
      guides.push_back(crop_guide(seq.frames[0], m, model.config.guide_resolution));
      std::string tag = "unknown";
      for (const ObjectInfo& o : seq.objects) {
        if (o.id == id) tag = o.cls;
      }
      tags.push_back(tag);
    }
  }
  if (guides.empty()) throw IoError("no usable guides under " + guides_dir.string());
  const GammaMatrix gammas = collect_gammas(model, guides, tags);

  if (mode == "embedding") {
    const Embedding2D emb = classical_mds(euclidean_distances(gammas));
    out << "tag,x,y\n";
    for (std::size_t i = 0; i < emb.points.size(); ++i) {
      out << gammas.tags[i] << "," << emb.points[i][0] << "," << emb.points[i][1] << "\n";
    }
    std::printf("embedded %zu guides, stress %.6f\n", emb.points.size(), emb.stress);
  } else if (mode == "layerstd") {
    for (const LayerStdReport& rep : layer_std_profile(gammas)) {
      out << "# layer " << rep.layer << " mean_std " << rep.mean_std << "\n";
      const double width = (rep.hist.hi - rep.hist.lo) / static_cast<double>(rep.hist.counts.size());
      for (std::size_t b = 0; b < rep.hist.counts.size(); ++b) {
        out << rep.hist.lo + width * static_cast<double>(b) << ","
            << rep.hist.lo + width * static_cast<double>(b + 1) << "," << rep.hist.counts[b] << "\n";
      }
    }
  } else {
    throw ConfigError("unknown analyze mode '" + mode + "'");
  }
  return kExitOk;
}

int cmd_gradcheck() {
  const auto checks = run_gradcheck_suite(42);
  bool ok = true;
  for (const OpCheck& c : checks) {
    std::printf("%-32s %.3e %s\n", c.name.c_str(), c.err, c.ok() ? "ok" : "FAIL");
    ok = ok && c.ok();
  }
  std::printf("%zu checks, %s\n", checks.size(), ok ? "all under 1e-3" : "FAILURES above 1e-3");
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-shot video object segmentation via network modulation"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value configuration file");
    cmd->add_option("--seed", seed_flag, "seed override")->each([&](const std::string&) {
      seed_given = true;
    });
  };

  // make-synthetic
  auto* mk = app.add_subcommand("make-synthetic", "generate a synthetic moving-shapes dataset");
  std::string mk_spec, mk_out;
  mk->add_option("--spec", mk_spec, "synthetic spec file (key = value)");
  mk->add_option("--out", mk_out, "output dataset root")->required();
  add_common(mk);

  // train
  auto* tr = app.add_subcommand("train", "train a model stage");
  std::string tr_stage, tr_data, tr_out, tr_init;
  int tr_epochs = -1;
  tr->add_option("--stage", tr_stage, "static|video")->required()->check(CLI::IsMember({"static", "video"}));
  tr->add_option("--data", tr_data, "dataset root")->required();
  tr->add_option("--out", tr_out, "output checkpoint path")->required();
  tr->add_option("--init", tr_init, "checkpoint to resume from");
  tr->add_option("--epochs", tr_epochs, "override epoch count for the stage (0 = re-emit)");
  add_common(tr);

  // infer
  auto* in = app.add_subcommand("infer", "segment sequences with a trained model");
  std::string in_ckpt, in_data, in_out;
  int in_oneshot = -1;
  double in_threshold = -1, in_oneshot_lr = -1;
  in->add_option("--ckpt", in_ckpt, "checkpoint")->required();
  in->add_option("--data", in_data, "dataset root")->required();
  in->add_option("--out", in_out, "output root")->required();
  in->add_option("--oneshot-iters", in_oneshot, "one-shot fine-tuning iterations (default 0)");
  in->add_option("--oneshot-lr", in_oneshot_lr, "one-shot fine-tuning learning rate");
  in->add_option("--threshold", in_threshold, "binarization threshold (default 0.5)");
  add_common(in);

  // eval
  auto* ev = app.add_subcommand("eval", "score predictions against ground truth");
  std::string ev_pred, ev_gt, ev_report;
  int ev_bins = -1;
  ev->add_option("--pred", ev_pred, "prediction root")->required();
  ev->add_option("--gt", ev_gt, "ground-truth dataset root")->required();
  ev->add_option("--report", ev_report, "report CSV path")->required();
  ev->add_option("--bins", ev_bins, "over-time curve bins (default 10)");
  add_common(ev);

  // analyze
  auto* an = app.add_subcommand("analyze", "modulation-parameter analyses");
  std::string an_ckpt, an_guides, an_mode, an_out = "analysis.csv";
  double an_zero_eps = 1e-3;
  an->add_option("--ckpt", an_ckpt, "checkpoint")->required();
  an->add_option("--guides", an_guides, "dataset root providing first-frame guides");
  an->add_option("--mode", an_mode, "embedding|layerstd|spatialstats")
      ->required()
      ->check(CLI::IsMember({"embedding", "layerstd", "spatialstats"}));
  an->add_option("--out", an_out, "output file");
  an->add_option("--zero-eps", an_zero_eps, "zero threshold for spatial scale stats");
  add_common(an);

  auto* gc = app.add_subcommand("gradcheck", "verify every op and the end-to-end loss gradients");
  (void)gc;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!config_file.empty()) load_config_file(cfg, config_file);
    if (seed_given) cfg.seed = seed_flag;

    if (mk->parsed()) {
      if (!mk_spec.empty()) load_config_file(cfg, mk_spec);
      if (seed_given) cfg.seed = seed_flag;
      return cmd_make_synthetic(cfg, mk_out);
    }
    if (tr->parsed()) {
      if (tr_epochs >= 0) {
        cfg.train.static_epochs1 = tr_epochs;
        cfg.train.static_epochs2 = 0;
        cfg.train.video_epochs = tr_epochs;
      }
      return cmd_train(cfg, tr_stage, tr_data, tr_out, tr_init);
    }
    if (in->parsed()) {
      if (in_oneshot >= 0) cfg.infer.oneshot_iters = in_oneshot;
      if (in_oneshot_lr >= 0) cfg.infer.oneshot_lr = in_oneshot_lr;
      if (in_threshold >= 0) cfg.infer.threshold = static_cast<float>(in_threshold);
      cfg.infer.seed = cfg.seed;
      return cmd_infer(cfg, in_ckpt, in_data, in_out);
    }
    if (ev->parsed()) {
      if (ev_bins > 0) cfg.eval_bins = ev_bins;
      return cmd_eval(cfg, ev_pred, ev_gt, ev_report);
    }
    if (an->parsed()) {
      return cmd_analyze(cfg, an_ckpt, an_guides, an_mode, an_out, an_zero_eps);
    }
    return cmd_gradcheck();
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
