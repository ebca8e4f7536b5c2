#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "carl/errors.hpp"

namespace carl {

// Deterministic CSV output: every float is rendered with %.17g so files are
// bit-identical across runs and round-trip exactly.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (f_ == nullptr) throw ConfigError("cannot open for writing: " + path);
  }

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  ~CsvWriter() { close(); }

  void comment(const std::string& line) { std::fprintf(f_, "# %s\n", line.c_str()); }

  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      std::fprintf(f_, "%s%s", i == 0 ? "" : ",", cols[i].c_str());
    std::fputc('\n', f_);
  }

  void row(const std::vector<double>& values) {
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
      std::fprintf(f_, "%s%s", i == 0 ? "" : ",", buf);
    }
    std::fputc('\n', f_);
  }

  // mixed row for tables with a text column (e.g. scan status)
  void row_raw(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      std::fprintf(f_, "%s%s", i == 0 ? "" : ",", cells[i].c_str());
    std::fputc('\n', f_);
  }

  void close() {
    if (f_ != nullptr) {
      std::fclose(f_);
      f_ = nullptr;
    }
  }

  const std::string& path() const { return path_; }

  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

 private:
  std::string path_;
  std::FILE* f_ = nullptr;
};

}  // namespace carl
