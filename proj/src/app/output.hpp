#pragma once

// Deterministic text outputs: 17-significant-digit numbers, RFC 4180 CSV,
// and all-or-nothing writing of a command's files.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ejc::app {

/// printf("%.17g"); "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  const std::string& str() const { return text_; }

  static std::string quote(const std::string& cell);

 private:
  std::size_t columns_;
  std::string text_;
};

/// Files produced by one command, keyed by name relative to the output
/// directory, plus the text printed to stdout.
struct OutputBundle {
  std::map<std::string, std::string> files;
  std::string console;
};

/// Writes every file through a temporary and a rename.
void write_bundle(const std::filesystem::path& dir, const OutputBundle& bundle);

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ejc::app
