#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "grasper/param_store.hpp"

namespace grasper {

// Container file: 8-byte magic, u32 version, u32 entry count, then per entry
// (u32 name length, name bytes, u32 rank, i64 dims..., little-endian f64
// values). Entry names are "section/param". A sidecar JSON metadata record
// lives at <path>.json next to the container.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ParamStore*>>& sections,
                     const nlohmann::json& metadata);

struct Checkpoint {
  std::map<std::string, ParamStore> sections;
  nlohmann::json metadata;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace grasper
