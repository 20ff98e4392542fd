#include "sesmap/csv.hpp"

#include <array>
#include <charconv>

#include "sesmap/error.hpp"

namespace sesmap {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "Io";
    case ErrorKind::Config: return "Config";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::DuplicateBrandId: return "DuplicateBrandId";
    case ErrorKind::DuplicateUserId: return "DuplicateUserId";
    case ErrorKind::UnknownDomain: return "UnknownDomain";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyResult: return "EmptyResult";
    case ErrorKind::ZeroMarginal: return "ZeroMarginal";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::EmptySupport: return "EmptySupport";
    case ErrorKind::UnknownAnchor: return "UnknownAnchor";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewObservations: return "TooFewObservations";
    case ErrorKind::TooFewGroups: return "TooFewGroups";
    case ErrorKind::UnknownEntity: return "UnknownEntity";
    case ErrorKind::DegenerateParams: return "DegenerateParams";
    case ErrorKind::InsufficientCoverage: return "InsufficientCoverage";
  }
  return "Unknown";
}

namespace csv {

Reader::Reader(const std::filesystem::path& path, char delimiter)
    : path_(path), in_(path, std::ios::binary), delimiter_(delimiter) {
  if (!in_) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
}

bool Reader::next(std::vector<std::string>& fields) {
  fields.clear();
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (line_ == 1 && buffer_.starts_with("\xEF\xBB\xBF")) {
      buffer_.erase(0, 3);
    }
    if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
    if (buffer_.empty()) continue;

    record_line_ = line_;
    std::string field;
    bool quoted = false;
    std::size_t pos = 0;
    for (;;) {
      if (pos >= buffer_.size()) {
        if (!quoted) break;
        // Quoted field spans a physical newline.
        if (!std::getline(in_, buffer_)) {
          throw Error(ErrorKind::MalformedRow,
                      path_.string() + ":" + std::to_string(record_line_) + ": unterminated quoted field",
                      record_line_);
        }
        ++line_;
        if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
        field.push_back('\n');
        pos = 0;
        continue;
      }
      const char ch = buffer_[pos];
      if (quoted) {
        if (ch == '"') {
          if (pos + 1 < buffer_.size() && buffer_[pos + 1] == '"') {
            field.push_back('"');
            pos += 2;
          } else {
            quoted = false;
            ++pos;
          }
        } else {
          field.push_back(ch);
          ++pos;
        }
      } else if (ch == '"' && field.empty()) {
        quoted = true;
        ++pos;
      } else if (ch == delimiter_) {
        fields.push_back(std::move(field));
        field.clear();
        ++pos;
      } else {
        field.push_back(ch);
        ++pos;
      }
    }
    fields.push_back(std::move(field));
    return true;
  }
  return false;
}

std::vector<std::string> Reader::read_header() {
  std::vector<std::string> header;
  if (!next(header)) {
    throw Error(ErrorKind::MalformedRow, path_.string() + ": missing header row", 1);
  }
  for (auto& name : header) name = std::string(trim(name));
  return header;
}

Writer::Writer(const std::filesystem::path& path, char delimiter)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), delimiter_(delimiter) {
  if (!out_) {
    throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
}

void Writer::write_field(std::string_view field, bool force_quote) {
  const bool needs_quote =
      force_quote || field.find_first_of(std::array{delimiter_, '"', '\n', '\r'}.data(), 0, 4) !=
                         std::string_view::npos;
  if (!needs_quote) {
    out_ << field;
    return;
  }
  out_ << '"';
  for (char ch : field) {
    if (ch == '"') out_ << '"';
    out_ << ch;
  }
  out_ << '"';
}

void Writer::write_row(std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << delimiter_;
    write_field(fields[i], i < always_quote_.size() && always_quote_[i]);
  }
  out_ << '\n';
}

void Writer::write_row(std::initializer_list<std::string_view> fields) {
  std::size_t i = 0;
  for (auto field : fields) {
    if (i) out_ << delimiter_;
    write_field(field, i < always_quote_.size() && always_quote_[i]);
    ++i;
  }
  out_ << '\n';
}

void Writer::close() {
  out_.close();
  if (!out_) throw Error(ErrorKind::Io, "failed writing " + path_.string());
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

bool parse_int64(std::string_view text, long long& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_uint64(std::string_view text, unsigned long long& out) {
  if (text.empty() || text.front() == '-') return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view ws = " \t\r\n";
  const auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

}  // namespace csv
}  // namespace sesmap
