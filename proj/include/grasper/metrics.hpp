#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grasper/error.hpp"

namespace grasper {

// FNV-1a over the canonical (sorted-key) JSON dump; recorded into artifacts
// for provenance.
std::string config_hash(const nlohmann::json& config);

// Append-only CSV writer with a fixed header.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& values);
  static std::string num(double v);

 private:
  std::ofstream out_;
  size_t n_columns_;
};

}  // namespace grasper
