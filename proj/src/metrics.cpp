#include "grasper/metrics.hpp"

#include <cmath>
#include <sstream>

namespace grasper {

std::string config_hash(const nlohmann::json& config) {
  const std::string dump = config.dump();  // nlohmann objects keep sorted keys
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : out_(path), n_columns_(columns.size()) {
  if (!out_) throw input_error("CsvWriter: cannot open " + path);
  for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& values) {
  if (values.size() != n_columns_) throw input_error("CsvWriter: column count mismatch");
  for (size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
  out_ << "\n";
  out_.flush();
}

std::string CsvWriter::num(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

}  // namespace grasper
