// SPDX-License-Identifier: Apache-2.0
//
// Output formatting: CSV with fixed 17-significant-digit decimal floats,
// infinities as "inf"/"-inf". NaN is never emitted silently; formatting one
// throws.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace brwire {

std::string format_number(double v);
std::string format_number(std::uint64_t v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& cells);

  // Cell helpers for mixed numeric rows.
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(std::uint64_t v) { return format_number(v); }
  static std::string cell(const std::string& s) { return s; }

 private:
  std::ofstream out_;
};

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace brwire
