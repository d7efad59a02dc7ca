#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pushgraph/optimizer.hpp"

namespace pushgraph {

inline constexpr int kCheckpointVersion = 1;

// FNV-1a over the raw bytes of the named tensors, in name order. Used to pair
// a belief checkpoint with the physics checkpoint it shares weights with.
inline std::uint64_t params_hash(const ParamStore& params,
                                 const std::string& name_prefix = "") {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x00000100000001b3ull;
    }
  };
  for (const auto& [name, t] : params.items()) {
    if (name.rfind(name_prefix, 0) != 0) continue;
    mix(name.data(), name.size());
    mix(t.vals().data(), t.vals().size() * sizeof(double));
  }
  return h;
}

inline void save_checkpoint(const std::string& path, const ParamStore& params,
                            const std::map<std::string, std::string>& meta = {}) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["meta"] = meta;
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [name, t] : params.items()) {
    nlohmann::json tj;
    tj["shape"] = {t.rows(), t.cols()};
    tj["values"] = t.vals();
    tensors[name] = std::move(tj);
  }
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << j.dump();
  if (!out) throw std::runtime_error("save_checkpoint: write failed at " + path);
}

struct Checkpoint {
  ParamStore params;
  std::map<std::string, std::string> meta;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("format_version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: unsupported format_version in " + path);
  Checkpoint ck;
  if (j.contains("meta"))
    ck.meta = j["meta"].get<std::map<std::string, std::string>>();
  for (const auto& [name, tj] : j.at("tensors").items()) {
    const auto shape = tj.at("shape").get<std::vector<int>>();
    if (shape.size() != 2) throw std::runtime_error("load_checkpoint: bad shape for " + name);
    Tensor t(shape[0], shape[1]);
    t.vals() = tj.at("values").get<std::vector<double>>();
    if (static_cast<int>(t.vals().size()) != shape[0] * shape[1])
      throw std::runtime_error("load_checkpoint: value count mismatch for " + name);
    ck.params.add(name, std::move(t));
  }
  return ck;
}

}  // namespace pushgraph
