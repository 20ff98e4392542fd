#include "sesmap/scores.hpp"

#include <cmath>

#include "sesmap/csv.hpp"
#include "sesmap/error.hpp"

namespace sesmap {

ScoreTable standardize(EntityKind kind, std::vector<std::string> ids, std::span<const double> raw,
                       std::string population, const std::vector<bool>& population_mask) {
  if (ids.size() != raw.size()) {
    throw Error(ErrorKind::LengthMismatch, "standardize: ids and scores differ in length");
  }
  if (!population_mask.empty() && population_mask.size() != raw.size()) {
    throw Error(ErrorKind::LengthMismatch, "standardize: population mask differs in length");
  }
  auto in_population = [&](std::size_t i) { return population_mask.empty() || population_mask[i]; };

  std::size_t n = 0;
  double sum = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (in_population(i)) {
      sum += raw[i];
      ++n;
    }
  }
  if (n < 2) throw Error(ErrorKind::ZeroVariance, "standardize: population has fewer than two entries");
  const double mean = sum / static_cast<double>(n);
  double m2 = 0, m3 = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!in_population(i)) continue;
    const double d = raw[i] - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  const double sd = std::sqrt(m2);
  if (!(sd > 0)) throw Error(ErrorKind::ZeroVariance, "standardize: scores are constant");

  ScoreTable table;
  table.kind = kind;
  table.meta = {mean, sd, m3 / (sd * sd * sd), n, std::move(population)};
  table.entries.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    table.entries.push_back({std::move(ids[i]), raw[i], (raw[i] - mean) / sd});
  }
  return table;
}

void save_score_table(const std::filesystem::path& path, const ScoreTable& table) {
  csv::Writer writer(path);
  writer.write_row({"entity_id", "raw_dim1", "ses"});
  for (const auto& e : table.entries) {
    writer.write_row({e.entity_id, csv::format_double(e.raw_dim1), csv::format_double(e.ses)});
  }
  writer.close();
}

ScoreTable load_score_table(const std::filesystem::path& path, EntityKind kind) {
  csv::Reader reader(path);
  const auto header = reader.read_header();
  if (header.size() < 3 || header[0] != "entity_id" || header[1] != "raw_dim1" || header[2] != "ses") {
    throw Error(ErrorKind::MalformedRow, path.string() + ": expected header entity_id,raw_dim1,ses", 1);
  }
  ScoreTable table;
  table.kind = kind;
  std::vector<std::string> row;
  while (reader.next(row)) {
    ScoreEntry e;
    if (row.size() < 3 || !csv::parse_double(row[1], e.raw_dim1) || !csv::parse_double(row[2], e.ses)) {
      throw Error(ErrorKind::MalformedRow, path.string() + ":" + std::to_string(reader.record_line()) + ": bad score row",
                  reader.record_line());
    }
    e.entity_id = row[0];
    table.entries.push_back(std::move(e));
  }
  return table;
}

}  // namespace sesmap
