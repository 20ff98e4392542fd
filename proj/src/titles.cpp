#include "sesmap/titles.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "sesmap/csv.hpp"
#include "sesmap/error.hpp"

namespace sesmap {

namespace {

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_word(char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = lower(c);
  return out;
}

std::vector<std::string> split_patterns(std::string_view text) {
  std::vector<std::string> out;
  while (!text.empty()) {
    const auto pos = text.find(';');
    const auto piece = csv::trim(text.substr(0, pos));
    if (!piece.empty()) out.emplace_back(piece);
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

bool find_word_lower(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return false;
  std::size_t pos = 0;
  while ((pos = text.find(phrase, pos)) != std::string_view::npos) {
    const bool left = pos == 0 || !is_word(text[pos - 1]);
    const auto end = pos + phrase.size();
    const bool right = end == text.size() || !is_word(text[end]);
    if (left && right) return true;
    ++pos;
  }
  return false;
}

}  // namespace

bool contains_word(std::string_view text, std::string_view phrase) {
  return find_word_lower(to_lower(text), to_lower(phrase));
}

bool contains_ci(std::string_view text, std::string_view needle) {
  return to_lower(text).find(to_lower(needle)) != std::string::npos;
}

TitleLexicon load_lexicon(const std::filesystem::path& path) {
  csv::Reader reader(path);
  const auto header = reader.read_header();
  const std::vector<std::string> expected{"title", "class", "mean_salary_usd", "exclusion_patterns"};
  if (header.size() < 3 || !std::equal(header.begin(), header.begin() + 3, expected.begin())) {
    throw Error(ErrorKind::MalformedRow, path.string() + ": expected header title,class,mean_salary_usd[,exclusion_patterns]",
                1);
  }
  TitleLexicon lexicon;
  std::set<std::string> seen;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const auto line = reader.record_line();
    auto bad = [&](const std::string& what) {
      return Error(ErrorKind::MalformedRow, path.string() + ":" + std::to_string(line) + ": " + what, line);
    };
    if (fields.size() < 3 || fields.size() > 4) throw bad("expected 3 or 4 fields");
    TitleEntry entry;
    entry.title = std::string(csv::trim(fields[0]));
    if (entry.title.empty()) throw bad("empty title");
    long long cls = 0;
    if (!csv::parse_int64(csv::trim(fields[1]), cls) || cls < 1 || cls > 9) {
      throw bad("class must be an integer in 1..9");
    }
    entry.occupational_class = static_cast<int>(cls);
    if (!csv::parse_double(csv::trim(fields[2]), entry.mean_salary) || !(entry.mean_salary > 0)) {
      throw bad("mean_salary_usd must be positive");
    }
    if (fields.size() == 4) entry.exclusion_patterns = split_patterns(fields[3]);
    if (!seen.insert(to_lower(entry.title)).second) {
      throw Error(ErrorKind::InvalidArgument, path.string() + ":" + std::to_string(line) + ": duplicate title '" +
                                                  entry.title + "'");
    }
    lexicon.push_back(std::move(entry));
  }
  return lexicon;
}

void save_lexicon(const std::filesystem::path& path, const TitleLexicon& lexicon) {
  csv::Writer writer(path);
  writer.write_row({"title", "class", "mean_salary_usd", "exclusion_patterns"});
  for (const auto& e : lexicon) {
    std::string patterns;
    for (std::size_t i = 0; i < e.exclusion_patterns.size(); ++i) {
      if (i) patterns += ';';
      patterns += e.exclusion_patterns[i];
    }
    writer.write_row(
        {e.title, std::to_string(e.occupational_class), csv::format_double(e.mean_salary), patterns});
  }
  writer.close();
}

TitleMatches match_job_titles(const UserProfileStore& profiles, const TitleLexicon& lexicon,
                              const TitleMatchOptions& options) {
  if (lexicon.empty()) throw Error(ErrorKind::InvalidArgument, "job-title lexicon is empty");

  struct Prepared {
    std::string title;
    std::vector<std::string> exclusions;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(lexicon.size());
  for (const auto& e : lexicon) {
    Prepared p{to_lower(e.title), {}};
    for (const auto& x : e.exclusion_patterns) p.exclusions.push_back(to_lower(x));
    prepared.push_back(std::move(p));
  }

  TitleMatches out;
  std::map<std::string, std::vector<std::string>> members;
  for (const auto& profile : profiles.profiles()) {
    if (profile.description.empty()) continue;
    const auto text = to_lower(profile.description);
    const TitleEntry* hit = nullptr;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < prepared.size(); ++t) {
      if (!find_word_lower(text, prepared[t].title)) continue;
      const bool vetoed = std::any_of(prepared[t].exclusions.begin(), prepared[t].exclusions.end(),
                                      [&](const std::string& x) { return text.find(x) != std::string::npos; });
      if (vetoed) {
        ++out.excluded;
        continue;
      }
      hit = &lexicon[t];
      ++hits;
    }
    if (hits > 1) {
      ++out.ambiguous;
    } else if (hits == 1) {
      members[hit->title].push_back(profile.user_id);
    }
  }

  for (auto& [title, users] : members) {
    if (users.size() < options.min_matches) {
      out.dropped_titles.emplace(title, users.size());
      continue;
    }
    out.counts.emplace(title, users.size());
    for (auto& u : users) out.assignment.emplace(std::move(u), title);
  }
  return out;
}

TitleSalaryReport title_salary_analysis(const ScoreTable& users, const UserProfileStore& profiles,
                                        const TitleLexicon& lexicon, const TitleMatchOptions& match_options,
                                        const BootstrapOptions& bootstrap) {
  TitleSalaryReport report;
  report.matches = match_job_titles(profiles, lexicon, match_options);

  std::unordered_set<std::string_view> scored;
  scored.reserve(users.entries.size());
  for (const auto& e : users.entries) scored.insert(e.entity_id);

  std::map<std::string, std::string> assignment;
  for (const auto& [user, title] : report.matches.assignment) {
    if (scored.contains(user)) {
      assignment.emplace(user, title);
    } else {
      ++report.unscored_users;
    }
  }

  const auto stats = group_median_se(users, assignment, bootstrap);
  for (const auto& entry : lexicon) {
    auto it = stats.find(entry.title);
    if (it == stats.end()) continue;
    TitleRow row{entry.title, entry.occupational_class, entry.mean_salary, it->second};
    (row.summary.small ? report.small_titles : report.rows).push_back(std::move(row));
  }
  if (report.rows.size() < 3) {
    throw Error(ErrorKind::TooFewObservations,
                "title analysis: " + std::to_string(report.rows.size()) + " titles with at least " +
                    std::to_string(bootstrap.min_group_size) + " scored users; need 3");
  }
  std::vector<double> medians, salary, cls;
  for (const auto& r : report.rows) {
    medians.push_back(r.summary.median);
    salary.push_back(r.mean_salary);
    cls.push_back(r.occupational_class);
  }
  report.salary = spearman(medians, salary);
  report.occupational_class = spearman(medians, cls);
  return report;
}

}  // namespace sesmap
