#include "modseg/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "modseg/runconfig.hpp"

namespace modseg {

namespace {

constexpr const char* kMagic = "modseg-checkpoint 1";

std::uint64_t fnv1a(const std::vector<unsigned char>& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

void put_u64_le(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f32_le(std::vector<unsigned char>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::string shape_token(const std::vector<int>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<int> parse_shape_token(const std::string& tok) {
  std::vector<int> shape;
  std::string cur;
  for (char c : tok + "x") {
    if (c == 'x') {
      shape.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return shape;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model) {
  const auto params = model.parameters();

  std::vector<unsigned char> payload;
  std::ostringstream table;
  std::uint64_t offset = 0;
  for (const Parameter& p : params) {
    table << p.name << " " << shape_token(p.value.shape()) << " " << offset << "\n";
    for (std::int64_t i = 0; i < p.value.size(); ++i) {
      put_f32_le(payload, static_cast<float>(p.value.data()[i]));
    }
    offset += static_cast<std::uint64_t>(p.value.size()) * 4;
  }
  put_u64_le(payload, fnv1a(std::vector<unsigned char>(payload.begin(), payload.end())));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << kMagic << "\n";
  out << "[config]\n" << serialize_mod_config(model.config);
  out << "[params] count=" << params.size() << " payload_bytes=" << offset << "\n";
  out << table.str();
  out << "[data]\n";
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw IoError("not a checkpoint file: " + path.string());
  }
  if (!std::getline(in, line) || line != "[config]") {
    throw IoError("checkpoint missing config section: " + path.string());
  }
  std::string config_text;
  while (std::getline(in, line) && line.rfind("[params]", 0) != 0) {
    config_text += line + "\n";
  }
  std::size_t count = 0;
  std::uint64_t payload_bytes = 0;
  {
    std::istringstream hs(line);
    std::string tag, kv;
    hs >> tag;
    while (hs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "count") count = static_cast<std::size_t>(std::stoull(v));
      if (k == "payload_bytes") payload_bytes = std::stoull(v);
    }
  }

  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw IoError("truncated parameter table: " + path.string());
    std::istringstream ls(line);
    Entry e;
    std::string shape_tok;
    if (!(ls >> e.name >> shape_tok >> e.offset)) {
      throw IoError("bad parameter table line: " + path.string());
    }
    e.shape = parse_shape_token(shape_tok);
    entries.push_back(std::move(e));
  }
  if (!std::getline(in, line) || line != "[data]") {
    throw IoError("checkpoint missing data section: " + path.string());
  }

  std::vector<unsigned char> payload(static_cast<std::size_t>(payload_bytes));
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  unsigned char sumbuf[8];
  in.read(reinterpret_cast<char*>(sumbuf), 8);
  if (!in) throw IoError("truncated checkpoint payload: " + path.string());
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(sumbuf[i]) << (8 * i);
  if (stored != fnv1a(payload)) {
    throw IoError("checkpoint checksum mismatch: " + path.string());
  }

  const ModConfig config = parse_mod_config(config_text);
  ModelBundle model = init_model(config, 0);
  auto params = model.parameters();
  if (params.size() != entries.size()) {
    throw IoError("checkpoint parameter count mismatch: " + path.string());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Entry& e = entries[i];
    if (params[i].name != e.name || params[i].value.shape() != e.shape) {
      throw IoError("checkpoint parameter " + e.name + " does not match the config: " +
                    path.string());
    }
    const std::uint64_t need = e.offset + static_cast<std::uint64_t>(params[i].value.size()) * 4;
    if (need > payload_bytes) throw IoError("parameter offsets exceed payload: " + path.string());
    for (std::int64_t k = 0; k < params[i].value.size(); ++k) {
      params[i].value.data()[k] =
          static_cast<real>(get_f32_le(payload.data() + e.offset + static_cast<std::uint64_t>(k) * 4));
    }
  }
  return model;
}

}  // namespace modseg
