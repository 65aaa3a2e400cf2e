#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace slowsep {

// Deterministic textual form of a double: round-trippable and identical
// across runs of the same binary.
std::string format_double(double v);

// RFC-4180 writer: CRLF row endings, quoting only where required.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void write_row(const std::vector<std::string>& fields);

  // Convenience for mixed rows already converted to strings.
  static std::string field(const std::string& s) { return s; }
  static std::string field(const char* s) { return s; }
  static std::string field(double v) { return format_double(v); }
  static std::string field(int v) { return std::to_string(v); }
  static std::string field(long long v) { return std::to_string(v); }

 private:
  std::ofstream out_;
};

// FNV-1a 64-bit content hash, hex-encoded; used to fingerprint the
// effective configuration inside manifests.
std::string content_hash(const std::string& payload);

}  // namespace slowsep
