#include "modseg/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "modseg/error.hpp"

namespace modseg {

namespace fs = std::filesystem;

namespace {

struct Palette {
  const char* cls;
  std::array<std::uint8_t, 3> colors[3];
};

// Disjoint hue families so class identity is recoverable from appearance.
const Palette kPalettes[3] = {
    {"disk", {{{210, 60, 50}}, {{230, 90, 40}}, {{195, 40, 90}}}},
    {"square", {{{50, 90, 210}}, {{40, 140, 230}}, {{90, 60, 195}}}},
    {"triangle", {{{60, 180, 70}}, {{40, 160, 120}}, {{120, 190, 40}}}},
};

struct Body {
  int cls = 0;  // palette index
  std::array<std::uint8_t, 3> color{};
  double radius = 0;
  double x = 0, y = 0;
  double vx = 0, vy = 0;
  bool lookalike = false;
};

bool inside_shape(const Body& b, double px, double py) {
  const double dx = px - b.x, dy = py - b.y;
  switch (b.cls) {
    case 0:  // disk
      return dx * dx + dy * dy <= b.radius * b.radius;
    case 1: {  // square, area-matched to the disk
      const double h = b.radius * 0.886;
      return std::abs(dx) <= h && std::abs(dy) <= h;
    }
    default: {  // point-up triangle
      const double r = b.radius * 1.35;
      const double x0 = 0, y0 = -r;
      const double x1 = -r * 0.8660254, y1 = r * 0.5;
      const double x2 = r * 0.8660254, y2 = r * 0.5;
      auto side = [&](double ax, double ay, double bx, double by) {
        return (bx - ax) * (dy - ay) - (by - ay) * (dx - ax);
      };
      const double s0 = side(x0, y0, x1, y1);
      const double s1 = side(x1, y1, x2, y2);
      const double s2 = side(x2, y2, x0, y0);
      return (s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0);
    }
  }
}

// Conservative circumradius for wall clearance and separation checks.
double hull_radius(const Body& b) {
  switch (b.cls) {
    case 0:
      return b.radius;
    case 1:
      return b.radius * 0.886 * 1.4143;
    default:
      return b.radius * 1.35;
  }
}

void bounce_walls(Body& b, const SyntheticSpec& spec) {
  const double m = hull_radius(b) + 1.0;
  if (b.x < m) {
    b.x = 2 * m - b.x;
    b.vx = std::abs(b.vx);
  }
  if (b.x > spec.width - 1 - m) {
    b.x = 2 * (spec.width - 1 - m) - b.x;
    b.vx = -std::abs(b.vx);
  }
  if (b.y < m) {
    b.y = 2 * m - b.y;
    b.vy = std::abs(b.vy);
  }
  if (b.y > spec.height - 1 - m) {
    b.y = 2 * (spec.height - 1 - m) - b.y;
    b.vy = -std::abs(b.vy);
  }
}

double min_separation(const Body& a, const Body& b) {
  return hull_radius(a) + hull_radius(b) + 3.0;
}

// Push overlapping bodies apart to exactly their minimum separation and
// kill the approach component of the relative velocity.
void enforce_separation(std::vector<Body>& bodies) {
  for (int pass = 0; pass < 4; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      for (std::size_t j = i + 1; j < bodies.size(); ++j) {
        Body& a = bodies[i];
        Body& b = bodies[j];
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double d = std::sqrt(dx * dx + dy * dy);
        const double need = min_separation(a, b);
        if (d >= need || d < 1e-9) continue;
        const double ux = dx / d, uy = dy / d;
        const double push = 0.5 * (need - d);
        a.x -= ux * push;
        a.y -= uy * push;
        b.x += ux * push;
        b.y += uy * push;
        const double rel = (b.vx - a.vx) * ux + (b.vy - a.vy) * uy;
        if (rel < 0) {
          a.vx += 0.5 * rel * ux;
          a.vy += 0.5 * rel * uy;
          b.vx -= 0.5 * rel * ux;
          b.vy -= 0.5 * rel * uy;
        }
        moved = true;
      }
    }
    if (!moved) break;
  }
}

int frame_index(const fs::path& p) {
  const std::string stem = p.stem().string();
  if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return std::isdigit(c); })) {
    return -1;
  }
  return std::stoi(stem);
}

std::string frame_name(int idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d.png", idx);
  return buf;
}

}  // namespace

Sequence gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed, const std::string& name) {
  if (spec.width < 16 || spec.height < 16 || spec.frames < 1 || spec.instances < 1) {
    throw ConfigError("synthetic spec needs width/height >= 16, frames >= 1, instances >= 1");
  }
  if (spec.lookalike_pair && spec.instances < 2) {
    throw ConfigError("a look-alike pair needs at least 2 instances");
  }
  Rng rng(seed);

  // Assign classes: the pair shares class 0..2 and an exact color.
  std::vector<Body> bodies(static_cast<std::size_t>(spec.instances));
  const int pair_cls = static_cast<int>(rng.uniform_int(0, 2));
  const int pair_color = static_cast<int>(rng.uniform_int(0, 2));
  const double pair_radius = rng.uniform(spec.min_radius, spec.max_radius);
  for (int i = 0; i < spec.instances; ++i) {
    Body& b = bodies[static_cast<std::size_t>(i)];
    if (spec.lookalike_pair && i < 2) {
      b.cls = pair_cls;
      b.color = kPalettes[pair_cls].colors[pair_color];
      b.radius = pair_radius;
      b.lookalike = true;
    } else {
      // distinct class from the pair where possible
      int cls = static_cast<int>(rng.uniform_int(0, 2));
      if (spec.lookalike_pair && cls == pair_cls) cls = (cls + 1) % 3;
      b.cls = cls;
      b.color = kPalettes[cls].colors[rng.uniform_int(0, 2)];
      b.radius = 0.85 * rng.uniform(spec.min_radius, spec.max_radius);
    }
  }

  // Placement. Dense canvases need structure, not luck: up to four bodies
  // anchor to jittered quadrants (look-alikes in horizontally opposite
  // ones); larger casts fall back to rejection sampling.
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const double m = hull_radius(bodies[i]) + 1.0;
    if (2 * m >= spec.width - 2 || 2 * m >= spec.height - 2) {
      throw ConfigError("infeasible synthetic spec: object radius exceeds canvas");
    }
  }
  bool placed = false;
  for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
    if (spec.instances <= 4) {
      const double qx[4] = {0.28 * spec.width, 0.72 * spec.width, 0.28 * spec.width,
                            0.72 * spec.width};
      const double qy[4] = {0.28 * spec.height, 0.28 * spec.height, 0.72 * spec.height,
                            0.72 * spec.height};
      int order[4] = {0, 1, 2, 3};
      for (int i = 3; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
      if (spec.lookalike_pair) {
        // keep the pair in opposite halves; rows may differ
        const int left = rng.uniform_int(0, 1) ? 0 : 2;
        const int right = rng.uniform_int(0, 1) ? 1 : 3;
        order[0] = left;
        order[1] = right;
        int rest = 2;
        for (int q = 0; q < 4; ++q) {
          if (q != left && q != right && rest < 4) order[rest++] = q;
        }
      }
      for (std::size_t i = 0; i < bodies.size(); ++i) {
        const double m = hull_radius(bodies[i]) + 1.0;
        const int q = order[i];
        bodies[i].x = std::clamp(qx[q] + rng.uniform(-3.0, 3.0), m, spec.width - 1.0 - m);
        bodies[i].y = std::clamp(qy[q] + rng.uniform(-3.0, 3.0), m, spec.height - 1.0 - m);
      }
    } else {
      for (std::size_t i = 0; i < bodies.size(); ++i) {
        const double m = hull_radius(bodies[i]) + 1.0;
        bodies[i].x = rng.uniform(m, spec.width - 1 - m);
        bodies[i].y = rng.uniform(m, spec.height - 1 - m);
      }
    }
    placed = true;
    for (std::size_t i = 0; placed && i < bodies.size(); ++i) {
      for (std::size_t j = i + 1; placed && j < bodies.size(); ++j) {
        const double dx = bodies[j].x - bodies[i].x, dy = bodies[j].y - bodies[i].y;
        placed = std::sqrt(dx * dx + dy * dy) >= min_separation(bodies[i], bodies[j]);
      }
    }
  }
  if (!placed) {
    throw ConfigError("infeasible synthetic spec: cannot place " +
                      std::to_string(spec.instances) + " instances on a " +
                      std::to_string(spec.width) + "x" + std::to_string(spec.height) + " canvas");
  }

  // Velocities: the pair heads toward a common midpoint; everyone else
  // gets a random direction at the base speed.
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    bodies[i].vx = spec.speed * std::cos(ang);
    bodies[i].vy = spec.speed * std::sin(ang);
  }
  if (spec.lookalike_pair && spec.instances >= 2 && spec.frames > 1) {
    const double mx = 0.5 * (bodies[0].x + bodies[1].x);
    const double my = 0.5 * (bodies[0].y + bodies[1].y);
    const double t_meet = std::max(1.0, spec.frames / 2.0);
    for (int i = 0; i < 2; ++i) {
      bodies[static_cast<std::size_t>(i)].vx = (mx - bodies[static_cast<std::size_t>(i)].x) / t_meet;
      bodies[static_cast<std::size_t>(i)].vy = (my - bodies[static_cast<std::size_t>(i)].y) / t_meet;
    }
    // remaining objects converge on the same crossing, so identities can
    // only be kept apart by appearance while the cluster lasts
    for (int i = 2; i < spec.instances; ++i) {
      Body& b = bodies[static_cast<std::size_t>(i)];
      const double tx = mx + rng.uniform(-3.0, 3.0);
      const double ty = my + rng.uniform(-3.0, 3.0);
      b.vx = (tx - b.x) / t_meet;
      b.vy = (ty - b.y) / t_meet;
      const double v = std::sqrt(b.vx * b.vx + b.vy * b.vy);
      const double cap = std::max(0.5, 1.8 * spec.speed);
      if (v > cap) {
        b.vx *= cap / v;
        b.vy *= cap / v;
      }
    }
  }

  Sequence seq;
  seq.name = name;
  seq.frames.reserve(static_cast<std::size_t>(spec.frames));
  seq.annotations.reserve(static_cast<std::size_t>(spec.frames));
  const std::array<std::uint8_t, 3> bg{
      static_cast<std::uint8_t>(rng.uniform_int(150, 200)),
      static_cast<std::uint8_t>(rng.uniform_int(150, 200)),
      static_cast<std::uint8_t>(rng.uniform_int(150, 200))};

  for (int i = 0; i < spec.instances; ++i) {
    ObjectInfo info;
    info.id = i + 1;
    info.cls = kPalettes[bodies[static_cast<std::size_t>(i)].cls].cls;
    info.color = bodies[static_cast<std::size_t>(i)].color;
    info.radius = bodies[static_cast<std::size_t>(i)].radius;
    info.lookalike = bodies[static_cast<std::size_t>(i)].lookalike;
    seq.objects.push_back(info);
    seq.object_ids.push_back(info.id);
  }

  for (int t = 0; t < spec.frames; ++t) {
    if (t > 0) {
      for (Body& b : bodies) {
        b.vx += rng.uniform(-spec.jitter, spec.jitter);
        b.vy += rng.uniform(-spec.jitter, spec.jitter);
        // cap drift at twice the base speed
        const double v = std::sqrt(b.vx * b.vx + b.vy * b.vy);
        const double cap = std::max(0.5, 2.0 * spec.speed);
        if (v > cap) {
          b.vx *= cap / v;
          b.vy *= cap / v;
        }
        b.x += b.vx;
        b.y += b.vy;
        bounce_walls(b, spec);
      }
      enforce_separation(bodies);
      for (Body& b : bodies) bounce_walls(b, spec);
    }

    Image img = make_image(spec.height, spec.width, bg);
    LabelMap lm;
    lm.height = spec.height;
    lm.width = spec.width;
    lm.v.assign(static_cast<std::size_t>(spec.height) * spec.width, 0);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        for (int i = 0; i < spec.instances; ++i) {
          const Body& b = bodies[static_cast<std::size_t>(i)];
          if (!inside_shape(b, x, y)) continue;
          lm.at(y, x) = static_cast<std::uint8_t>(i + 1);
          std::uint8_t* p = img.px(y, x);
          p[0] = b.color[0];
          p[1] = b.color[1];
          p[2] = b.color[2];
          break;
        }
      }
    }
    if (spec.noise > 0) {
      for (std::uint8_t& v : img.rgb) {
        const int nv = static_cast<int>(v) +
                       static_cast<int>(rng.uniform_int(-static_cast<std::int64_t>(spec.noise),
                                                        static_cast<std::int64_t>(spec.noise)));
        v = static_cast<std::uint8_t>(std::clamp(nv, 0, 255));
      }
    }
    seq.frames.push_back(std::move(img));
    seq.annotations.emplace_back(std::move(lm));
  }
  return seq;
}

Sequence load_sequence(const fs::path& dir) {
  const fs::path fdir = dir / "frames";
  const fs::path mdir = dir / "masks";
  if (!fs::is_directory(fdir)) throw IoError("missing frames directory: " + fdir.string());

  std::vector<int> indices;
  for (const auto& e : fs::directory_iterator(fdir)) {
    if (e.path().extension() != ".png") continue;
    const int idx = frame_index(e.path());
    if (idx >= 0) indices.push_back(idx);
  }
  if (indices.empty()) throw IoError("no frames found in " + fdir.string());
  std::sort(indices.begin(), indices.end());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] != static_cast<int>(i)) {
      throw IoError("missing frame file: " + (fdir / frame_name(static_cast<int>(i))).string());
    }
  }

  Sequence seq;
  seq.name = dir.filename().string();
  for (int idx : indices) {
    Image img = read_image_png(fdir / frame_name(idx));
    if (!seq.frames.empty() &&
        (img.height != seq.frames[0].height || img.width != seq.frames[0].width)) {
      throw IoError("frame size mismatch at " + (fdir / frame_name(idx)).string());
    }
    seq.frames.push_back(std::move(img));

    const fs::path mpath = mdir / frame_name(idx);
    if (fs::exists(mpath)) {
      LabelMap lm = read_label_png(mpath);
      if (lm.height != seq.frames[0].height || lm.width != seq.frames[0].width) {
        throw IoError("mask size mismatch at " + mpath.string());
      }
      seq.annotations.emplace_back(std::move(lm));
    } else {
      seq.annotations.emplace_back(std::nullopt);
    }
  }

  if (seq.annotations[0].has_value()) {
    std::array<bool, 256> present{};
    for (std::uint8_t v : seq.annotations[0]->v) present[v] = true;
    for (int k = 1; k < 256; ++k) {
      if (present[k]) seq.object_ids.push_back(k);
    }
  }

  const fs::path meta = dir / "meta.txt";
  if (fs::exists(meta)) {
    std::ifstream in(meta);
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string kw;
      ObjectInfo info;
      int r, g, b, look;
      if (ls >> kw >> info.id >> info.cls >> r >> g >> b >> info.radius >> look && kw == "object") {
        info.color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                      static_cast<std::uint8_t>(b)};
        info.lookalike = look != 0;
        seq.objects.push_back(info);
      }
    }
  }
  return seq;
}

std::vector<Sequence> load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("missing dataset directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Sequence> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(load_sequence(d));
  return out;
}

void write_sequence(const fs::path& root, const Sequence& seq) {
  const fs::path dir = root / seq.name;
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "masks");
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    write_image_png(dir / "frames" / frame_name(static_cast<int>(t)), seq.frames[t]);
    if (t < seq.annotations.size() && seq.annotations[t].has_value()) {
      write_label_png(dir / "masks" / frame_name(static_cast<int>(t)), *seq.annotations[t]);
    }
  }
  if (!seq.objects.empty()) {
    std::ofstream out(dir / "meta.txt");
    for (const ObjectInfo& o : seq.objects) {
      out << "object " << o.id << " " << o.cls << " " << int(o.color[0]) << " " << int(o.color[1])
          << " " << int(o.color[2]) << " " << o.radius << " " << (o.lookalike ? 1 : 0) << "\n";
    }
  }
}

std::vector<StaticSample> static_samples(const std::vector<Sequence>& seqs,
                                         double min_area_fraction, std::uint64_t shuffle_seed) {
  std::vector<StaticSample> out;
  for (const Sequence& seq : seqs) {
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      if (t >= seq.annotations.size() || !seq.annotations[t].has_value()) continue;
      const LabelMap& lm = *seq.annotations[t];
      const double total = static_cast<double>(lm.height) * lm.width;
      for (int id : seq.object_ids) {
        Mask m = mask_from_labels(lm, id);
        const auto area = m.area();
        if (area == 0 || static_cast<double>(area) < min_area_fraction * total) continue;
        StaticSample s;
        s.image = seq.frames[t];
        s.mask = std::move(m);
        s.sequence = seq.name;
        s.frame = static_cast<int>(t);
        s.object_id = id;
        for (const ObjectInfo& o : seq.objects) {
          if (o.id == id) s.cls = o.cls;
        }
        out.push_back(std::move(s));
      }
    }
  }
  Rng rng(shuffle_seed);
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  return out;
}

}  // namespace modseg
