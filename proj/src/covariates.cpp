#include "sesmap/covariates.hpp"

#include <map>
#include <unordered_map>

#include "sesmap/csv.hpp"
#include "sesmap/error.hpp"

namespace sesmap {

CovariateReport covariate_analysis(const ScoreTable& scores, const std::filesystem::path& path,
                                   const BootstrapOptions& bootstrap, char delimiter) {
  csv::Reader reader(path, delimiter);
  const auto header = reader.read_header();
  if (header.size() < 2 || header[0] != "entity_id") {
    throw Error(ErrorKind::MalformedRow, path.string() + ": expected header entity_id,<covariate>,...", 1);
  }
  std::unordered_map<std::string_view, double> ses;
  for (const auto& e : scores.entries) ses.emplace(e.entity_id, e.ses);

  const std::size_t n_cols = header.size() - 1;
  std::vector<std::vector<std::pair<std::string, std::string>>> values(n_cols);  // (entity, raw value)
  CovariateReport report;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::MalformedRow,
                  path.string() + ":" + std::to_string(reader.record_line()) + ": expected " +
                      std::to_string(header.size()) + " fields",
                  reader.record_line());
    }
    ++report.rows;
    const auto id = std::string(csv::trim(fields[0]));
    if (!ses.contains(id)) {
      ++report.unmatched;
      continue;
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      const auto v = csv::trim(fields[c + 1]);
      if (!v.empty()) values[c].emplace_back(id, std::string(v));
    }
  }

  for (std::size_t c = 0; c < n_cols; ++c) {
    CovariateResult res;
    res.column = header[c + 1];
    res.n = values[c].size();
    std::vector<double> x, y;
    res.numeric = true;
    for (const auto& [id, raw] : values[c]) {
      double v = 0;
      if (!csv::parse_double(raw, v)) {
        res.numeric = false;
        break;
      }
      x.push_back(ses.at(id));
      y.push_back(v);
    }
    try {
      if (res.numeric) {
        res.correlation = spearman(x, y);
      } else {
        std::map<std::string, std::string> assignment(values[c].begin(), values[c].end());
        res.groups = group_median_se(scores, assignment, bootstrap);
        std::map<std::string, std::vector<double>> members;
        for (const auto& [id, label] : values[c]) members[label].push_back(ses.at(id));
        std::vector<std::vector<double>> groups;
        for (auto& [label, v] : members) groups.push_back(std::move(v));
        if (groups.size() == 2) {
          res.welch = welch_t(groups[0], groups[1]);
        } else {
          res.anova = one_way_anova(groups);
        }
      }
    } catch (const Error& e) {
      res.note = std::string(to_string(e.kind())) + ": " + e.what();
    }
    report.columns.push_back(std::move(res));
  }
  return report;
}

}  // namespace sesmap
