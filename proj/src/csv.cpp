#include "dualrate/csv.hpp"

#include "dualrate/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace dualrate {

std::string format_number(double value) {
  if (std::isnan(value)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(std::filesystem::path path, std::vector<std::string> header)
    : path_(std::move(path)), columns_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
}

void CsvWriter::separator() {
  if (in_row_ > 0) buffer_ += ',';
  ++in_row_;
}

CsvWriter& CsvWriter::cell(double value) {
  separator();
  buffer_ += format_number(value);
  return *this;
}

CsvWriter& CsvWriter::cell(long value) {
  separator();
  buffer_ += std::to_string(value);
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& value) {
  separator();
  buffer_ += value;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) {
    throw Error(ErrorCategory::validation, "csv row has " + std::to_string(in_row_) +
                                               " fields, header has " + std::to_string(columns_));
  }
  buffer_ += '\n';
  in_row_ = 0;
}

void CsvWriter::close() { write_text(path_, buffer_); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(ErrorCategory::io, "write failed for " + path.string());
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCategory::io, "cannot create directory " + dir.string() +
                                       (ec ? ": " + ec.message() : std::string()));
  }
}

}  // namespace dualrate
