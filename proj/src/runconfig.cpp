#include "modseg/runconfig.hpp"

#include <fstream>
#include <sstream>

namespace modseg {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::string cur;
  for (char c : v + ",") {
    if (c == ',') {
      const std::string t = trim(cur);
      if (!t.empty()) out.push_back(std::stoi(t));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

std::string int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::NoVisual:
      return "no_visual";
    case Ablation::NoSpatial:
      return "no_spatial";
    default:
      return "none";
  }
}

Ablation parse_ablation(const std::string& name) {
  if (name == "none") return Ablation::None;
  if (name == "no_visual") return Ablation::NoVisual;
  if (name == "no_spatial") return Ablation::NoSpatial;
  throw ConfigError("unknown ablation '" + name + "' (none|no_visual|no_spatial)");
}

void apply_config_kv(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  try {
    if (key == "model.stage_channels") cfg.model.stage_channels = parse_int_list(value);
    else if (key == "model.stage_sizes") cfg.model.stage_sizes = parse_int_list(value);
    else if (key == "model.skip_first") cfg.model.skip_first = std::stoi(value);
    else if (key == "model.guide_resolution") cfg.model.guide_resolution = std::stoi(value);
    else if (key == "model.fusion_channels") cfg.model.fusion_channels = std::stoi(value);
    else if (key == "model.input_sizes") cfg.model.input_sizes = parse_int_list(value);
    else if (key == "model.modulate_pre_activation") cfg.model.modulate_pre_activation = parse_bool(value);
    else if (key == "model.ablation") cfg.model.ablation = parse_ablation(value);
    else if (key == "train.static_epochs1") cfg.train.static_epochs1 = std::stoi(value);
    else if (key == "train.static_lr1") cfg.train.static_lr1 = std::stod(value);
    else if (key == "train.static_epochs2") cfg.train.static_epochs2 = std::stoi(value);
    else if (key == "train.static_lr2") cfg.train.static_lr2 = std::stod(value);
    else if (key == "train.video_epochs") cfg.train.video_epochs = std::stoi(value);
    else if (key == "train.video_lr") cfg.train.video_lr = std::stod(value);
    else if (key == "train.oneshot_iters") cfg.train.oneshot_iters = std::stoi(value);
    else if (key == "train.oneshot_lr") cfg.train.oneshot_lr = std::stod(value);
    else if (key == "train.batch_size") cfg.train.batch_size = std::stoi(value);
    else if (key == "train.min_area_fraction") cfg.train.min_area_fraction = std::stod(value);
    else if (key == "train.augment_visual") cfg.train.augment_visual = parse_bool(value);
    else if (key == "train.augment_spatial") cfg.train.augment_spatial = parse_bool(value);
    else if (key == "train.random_crop") cfg.train.random_crop = parse_bool(value);
    else if (key == "train.freeze_modulators") cfg.train.freeze_modulators = parse_bool(value);
    else if (key == "train.max_steps") cfg.train.max_steps = std::stoi(value);
    else if (key == "synth.width") cfg.synth.width = std::stoi(value);
    else if (key == "synth.height") cfg.synth.height = std::stoi(value);
    else if (key == "synth.frames") cfg.synth.frames = std::stoi(value);
    else if (key == "synth.sequences") cfg.synth_sequences = std::stoi(value);
    else if (key == "synth.instances") cfg.synth.instances = std::stoi(value);
    else if (key == "synth.lookalike_pair") cfg.synth.lookalike_pair = parse_bool(value);
    else if (key == "synth.min_radius") cfg.synth.min_radius = std::stod(value);
    else if (key == "synth.max_radius") cfg.synth.max_radius = std::stod(value);
    else if (key == "synth.speed") cfg.synth.speed = std::stod(value);
    else if (key == "synth.jitter") cfg.synth.jitter = std::stod(value);
    else if (key == "synth.noise") cfg.synth.noise = std::stod(value);
    else if (key == "infer.threshold") cfg.infer.threshold = std::stof(value);
    else if (key == "infer.oneshot_iters") cfg.infer.oneshot_iters = std::stoi(value);
    else if (key == "infer.oneshot_lr") cfg.infer.oneshot_lr = std::stod(value);
    else if (key == "eval.bins") cfg.eval_bins = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else throw ConfigError("unknown config key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value '" + value + "' for key '" + key + "'");
  }
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value at " + path.string() + ":" + std::to_string(lineno));
    }
    apply_config_kv(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

std::string serialize_mod_config(const ModConfig& m) {
  std::ostringstream os;
  os << "model.stage_channels = " << int_list(m.stage_channels) << "\n";
  os << "model.stage_sizes = " << int_list(m.stage_sizes) << "\n";
  os << "model.skip_first = " << m.skip_first << "\n";
  os << "model.guide_resolution = " << m.guide_resolution << "\n";
  os << "model.fusion_channels = " << m.fusion_channels << "\n";
  os << "model.input_sizes = " << int_list(m.input_sizes) << "\n";
  os << "model.modulate_pre_activation = " << (m.modulate_pre_activation ? "true" : "false") << "\n";
  os << "model.ablation = " << ablation_name(m.ablation) << "\n";
  return os.str();
}

ModConfig parse_mod_config(const std::string& text) {
  RunConfig tmp;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("bad model config line: " + line);
    apply_config_kv(tmp, line.substr(0, eq), line.substr(eq + 1));
  }
  return tmp.model;
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << serialize_mod_config(cfg.model);
  os << "train.static_epochs1 = " << cfg.train.static_epochs1 << "\n";
  os << "train.static_lr1 = " << fmt(cfg.train.static_lr1) << "\n";
  os << "train.static_epochs2 = " << cfg.train.static_epochs2 << "\n";
  os << "train.static_lr2 = " << fmt(cfg.train.static_lr2) << "\n";
  os << "train.video_epochs = " << cfg.train.video_epochs << "\n";
  os << "train.video_lr = " << fmt(cfg.train.video_lr) << "\n";
  os << "train.oneshot_iters = " << cfg.train.oneshot_iters << "\n";
  os << "train.oneshot_lr = " << fmt(cfg.train.oneshot_lr) << "\n";
  os << "train.batch_size = " << cfg.train.batch_size << "\n";
  os << "train.min_area_fraction = " << fmt(cfg.train.min_area_fraction) << "\n";
  os << "train.augment_visual = " << (cfg.train.augment_visual ? "true" : "false") << "\n";
  os << "train.augment_spatial = " << (cfg.train.augment_spatial ? "true" : "false") << "\n";
  os << "train.random_crop = " << (cfg.train.random_crop ? "true" : "false") << "\n";
  os << "train.freeze_modulators = " << (cfg.train.freeze_modulators ? "true" : "false") << "\n";
  os << "train.max_steps = " << cfg.train.max_steps << "\n";
  os << "synth.width = " << cfg.synth.width << "\n";
  os << "synth.height = " << cfg.synth.height << "\n";
  os << "synth.frames = " << cfg.synth.frames << "\n";
  os << "synth.sequences = " << cfg.synth_sequences << "\n";
  os << "synth.instances = " << cfg.synth.instances << "\n";
  os << "synth.lookalike_pair = " << (cfg.synth.lookalike_pair ? "true" : "false") << "\n";
  os << "synth.min_radius = " << fmt(cfg.synth.min_radius) << "\n";
  os << "synth.max_radius = " << fmt(cfg.synth.max_radius) << "\n";
  os << "synth.speed = " << fmt(cfg.synth.speed) << "\n";
  os << "synth.jitter = " << fmt(cfg.synth.jitter) << "\n";
  os << "synth.noise = " << fmt(cfg.synth.noise) << "\n";
  os << "infer.threshold = " << fmt(cfg.infer.threshold) << "\n";
  os << "infer.oneshot_iters = " << cfg.infer.oneshot_iters << "\n";
  os << "infer.oneshot_lr = " << fmt(cfg.infer.oneshot_lr) << "\n";
  os << "eval.bins = " << cfg.eval_bins << "\n";
  os << "seed = " << cfg.seed << "\n";
  return os.str();
}

}  // namespace modseg
