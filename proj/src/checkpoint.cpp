#include "grasper/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "grasper/error.hpp"

namespace grasper {

namespace {

constexpr char kMagic[8] = {'G', 'R', 'S', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw input_error("checkpoint: truncated file");
  return value;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ParamStore*>>& sections,
                     const nlohmann::json& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  uint32_t count = 0;
  for (const auto& [name, store] : sections) count += static_cast<uint32_t>(store->size());
  write_pod(out, count);
  for (const auto& [section, store] : sections) {
    for (const auto& e : store->entries()) {
      const std::string full = section + "/" + e.name;
      write_pod(out, static_cast<uint32_t>(full.size()));
      out.write(full.data(), static_cast<std::streamsize>(full.size()));
      write_pod(out, static_cast<uint32_t>(e.value.shape.size()));
      for (int64_t d : e.value.shape) write_pod(out, d);
      out.write(reinterpret_cast<const char*>(e.value.data.data()),
                static_cast<std::streamsize>(e.value.data.size() * sizeof(double)));
    }
  }
  if (!out) throw input_error("checkpoint: write failed for " + path);
  out.close();

  std::ofstream meta(path + ".json");
  if (!meta) throw input_error("checkpoint: cannot open " + path + ".json for writing");
  meta << metadata.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw input_error("checkpoint: bad magic in " + path);
  const uint32_t version = read_pod<uint32_t>(in);
  if (version != kVersion)
    throw input_error("checkpoint: unsupported version " + std::to_string(version));
  const uint32_t count = read_pod<uint32_t>(in);

  Checkpoint ckpt;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_pod<uint32_t>(in);
    std::string full(name_len, '\0');
    in.read(full.data(), name_len);
    if (!in) throw input_error("checkpoint: truncated name");
    const auto slash = full.find('/');
    if (slash == std::string::npos) throw input_error("checkpoint: entry without section: " + full);
    const std::string section = full.substr(0, slash);
    const std::string name = full.substr(slash + 1);
    const uint32_t rank = read_pod<uint32_t>(in);
    std::vector<int64_t> shape(rank);
    int64_t numel = 1;
    for (auto& d : shape) {
      d = read_pod<int64_t>(in);
      numel *= d;
    }
    Tensor value;
    value.shape = std::move(shape);
    value.data.resize(static_cast<size_t>(numel));
    in.read(reinterpret_cast<char*>(value.data.data()),
            static_cast<std::streamsize>(value.data.size() * sizeof(double)));
    if (!in) throw input_error("checkpoint: truncated values for " + full);
    ckpt.sections[section].add(name, std::move(value));
  }

  std::ifstream meta(path + ".json");
  if (meta) {
    try {
      meta >> ckpt.metadata;
    } catch (const nlohmann::json::exception& e) {
      throw input_error("checkpoint: bad metadata sidecar: " + std::string(e.what()));
    }
  }
  return ckpt;
}

}  // namespace grasper
