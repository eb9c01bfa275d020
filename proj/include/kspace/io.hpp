#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace kspace::io {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames over `path`, so readers never
/// observe a truncated file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Fixed "%.10g" rendering used by every CSV and report emitter.
std::string format_number(double v);

/// Minimal RFC 4180 CSV builder with a fixed header.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& cell(std::string_view s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  /// Terminates the current row; throws if the cell count differs from the header.
  void end_row();

  const std::string& str() const { return out_; }
  std::size_t rows() const { return rows_; }

private:
  void sep();

  std::size_t columns_;
  std::size_t current_ = 0;
  std::size_t rows_ = 0;
  std::string out_;
};

}  // namespace kspace::io
