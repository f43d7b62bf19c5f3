#pragma once

#include <fstream>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "moralmt/simulator.hpp"

// Trace export as JSONL: a header record, one record per WorldState, and a
// closing outcome record. Doubles are written with round-trip precision.
namespace moralmt {

nlohmann::json trace_header(const Trace& tr);
nlohmann::json state_record(const Trace& tr, std::size_t i);
nlohmann::json outcome_record(const Trace& tr);

void write_trace(std::ostream& os, const Trace& tr);
void write_trace_file(const std::string& path, const Trace& tr);

// Throws Error on malformed input or a missing outcome record.
Trace read_trace(std::istream& is);
Trace read_trace_file(const std::string& path);

nlohmann::json to_json(const SimParams& p);
SimParams sim_params_from_json(const nlohmann::json& j);

}  // namespace moralmt

namespace moralmt {

// Line-at-a-time JSONL appender. Each record is written with a single
// write followed by a flush, so a killed process leaves whole records plus
// at most one torn final line.
class JsonlWriter {
 public:
  JsonlWriter() = default;
  // Truncates unless `append` is set.
  explicit JsonlWriter(const std::string& path, bool append = false);
  void write(const nlohmann::json& record);
  bool is_open() const;

 private:
  std::string path_;
  std::shared_ptr<std::ofstream> os_;
};

// Reads all records. A final line that is empty or fails to parse because
// it was cut short is ignored; any other malformed line throws Error
// naming the line. A missing file yields no records.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

}  // namespace moralmt
