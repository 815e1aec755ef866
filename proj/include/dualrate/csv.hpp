#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dualrate {

/// %.17g; NaN becomes an empty field.
std::string format_number(double value);

/// Comma-separated, '.' decimal, header row, LF endings. The whole table is
/// buffered and written by close(); failures raise Error{io}.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, std::vector<std::string> header);

  CsvWriter& cell(double value);
  CsvWriter& cell(long value);
  CsvWriter& cell(const std::string& value);
  void end_row();

  void close();

 private:
  void separator();

  std::filesystem::path path_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string buffer_;
};

/// Writes `text` to `path`, raising Error{io} on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

/// create_directories with failures mapped to Error{io}.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace dualrate
