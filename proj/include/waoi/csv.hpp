#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "waoi/config.hpp"

namespace waoi {

// CSV with a header row, '.' decimal, round-trip number formatting.
class CsvWriter {
 public:
  CsvWriter(std::string path, const std::vector<std::string>& header) : path_(std::move(path)) {
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw ConfigError("cannot open output file '" + path_ + "'");
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  void begin_row() { first_ = true; }
  CsvWriter& field(double v) { return raw(format_number(v)); }
  CsvWriter& field(int v) { return raw(std::to_string(v)); }
  CsvWriter& field(long v) { return raw(std::to_string(v)); }
  CsvWriter& field(const std::string& v) { return raw(v); }
  void end_row() { out_ << '\n'; }

  const std::string& path() const { return path_; }
  void close() { out_.close(); }

 private:
  CsvWriter& raw(const std::string& s) {
    if (!first_) out_ << ',';
    first_ = false;
    out_ << s;
    return *this;
  }

  std::string path_;
  std::ofstream out_;
  bool first_ = true;
};

}  // namespace waoi
