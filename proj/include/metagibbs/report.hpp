// SPDX-License-Identifier: Apache-2.0
#pragma once

// Report and table emission. Outputs are byte-deterministic for a fixed
// config and seed: keys are sorted, floats use shortest round-trip
// formatting, and no timestamps or environment state are embedded.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "metagibbs/errors.hpp"

namespace metagibbs {

using json = nlohmann::json;

/// FNV-1a 64-bit over the canonical (sorted-key) serialization.
inline std::string config_hash(const json& config) {
  const std::string canon = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x00000100000001b3ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

/// Shortest round-trip decimal form, locale-independent ('.' separator).
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// RFC-4180 CSV with a header row. All cells here are numeric or empty,
/// so no quoting is ever required.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<std::optional<double>>& cells) {
    if (cells.size() != header_.size()) throw Error("CSV row width does not match the header");
    std::string row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) row += ',';
      if (cells[i]) row += format_double(*cells[i]);
    }
    rows_.push_back(std::move(row));
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (i) out += ',';
      out += header_[i];
    }
    out += "\r\n";
    for (const auto& r : rows_) {
      out += r;
      out += "\r\n";
    }
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw Error("failed writing '" + path + "'");
}

}  // namespace metagibbs
