#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sesmap::csv {

// Streaming RFC 4180 reader: quoted fields, doubled quotes, embedded
// newlines, CRLF line endings and a leading UTF-8 BOM.
class Reader {
 public:
  Reader(const std::filesystem::path& path, char delimiter = ',');

  // Reads the next record into `fields`. Returns false at end of file.
  // Blank lines are skipped. Throws Error(MalformedRow) on an unterminated
  // quote.
  bool next(std::vector<std::string>& fields);

  // Physical line (1-based) on which the last returned record started.
  std::size_t record_line() const noexcept { return record_line_; }

  // Reads the header row; throws Error(MalformedRow) if the file is empty.
  std::vector<std::string> read_header();

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  char delimiter_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
  std::string buffer_;
};

class Writer {
 public:
  Writer(const std::filesystem::path& path, char delimiter = ',');

  // Columns listed in `always_quote` are quoted even when not required.
  void set_always_quote(std::vector<bool> always_quote) { always_quote_ = std::move(always_quote); }

  void write_row(std::span<const std::string> fields);
  void write_row(std::initializer_list<std::string_view> fields);

  void close();

 private:
  void write_field(std::string_view field, bool force_quote);

  std::filesystem::path path_;
  std::ofstream out_;
  char delimiter_;
  std::vector<bool> always_quote_;
};

// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);

// Strict numeric parsers: whole string must be consumed, no whitespace.
bool parse_int64(std::string_view text, long long& out);
bool parse_uint64(std::string_view text, unsigned long long& out);
bool parse_double(std::string_view text, double& out);

std::string_view trim(std::string_view text);

}  // namespace sesmap::csv
