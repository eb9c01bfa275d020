#include "kspace/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "kspace/error.hpp"

namespace kspace::io {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
  rows_ = 0;
}

void CsvWriter::sep() {
  if (current_++ > 0) out_ += ',';
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  sep();
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    out_ += s;
  } else {
    out_ += '"';
    for (char c : s) {
      if (c == '"') out_ += '"';
      out_ += c;
    }
    out_ += '"';
  }
  return *this;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  out_ += format_number(v);
  return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
  sep();
  out_ += std::to_string(v);
  return *this;
}

void CsvWriter::end_row() {
  if (current_ != columns_) {
    throw Error("csv row has " + std::to_string(current_) + " cells, expected " + std::to_string(columns_));
  }
  out_ += '\n';
  current_ = 0;
  ++rows_;
}

}  // namespace kspace::io
