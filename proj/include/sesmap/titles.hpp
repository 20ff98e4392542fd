#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sesmap/ingest.hpp"
#include "sesmap/scores.hpp"
#include "sesmap/stats.hpp"

namespace sesmap {

struct TitleEntry {
  std::string title;
  int occupational_class = 1;  // 1..9, lower is higher status
  double mean_salary = 0;      // USD, > 0
  // Literal, case-insensitive text; a description containing any of them is
  // never assigned this title.
  std::vector<std::string> exclusion_patterns;
};

using TitleLexicon = std::vector<TitleEntry>;

// lexicon.csv: title,class,mean_salary_usd,exclusion_patterns with patterns
// separated by ';'. Throws MalformedRow (class outside 1..9, salary <= 0,
// bad numbers) and InvalidArgument (duplicate title).
TitleLexicon load_lexicon(const std::filesystem::path& path);
void save_lexicon(const std::filesystem::path& path, const TitleLexicon& lexicon);

// Case-insensitive whole-word search; word characters are ASCII letters and
// digits.
bool contains_word(std::string_view text, std::string_view phrase);
bool contains_ci(std::string_view text, std::string_view needle);

struct TitleMatchOptions {
  std::size_t min_matches = 50;
};

struct TitleMatches {
  std::map<std::string, std::string> assignment;  // user id -> title
  std::map<std::string, std::size_t> counts;      // retained titles
  std::map<std::string, std::size_t> dropped_titles;  // below min_matches
  std::size_t ambiguous = 0;  // users matching more than one title
  std::size_t excluded = 0;   // title hits vetoed by an exclusion pattern
};

// Throws InvalidArgument on an empty lexicon.
TitleMatches match_job_titles(const UserProfileStore& profiles, const TitleLexicon& lexicon,
                              const TitleMatchOptions& options = {});

struct TitleRow {
  std::string title;
  int occupational_class = 0;
  double mean_salary = 0;
  GroupSummary summary;
};

struct TitleSalaryReport {
  std::vector<TitleRow> rows;  // titles with at least bootstrap.min_group_size scored users
  std::vector<TitleRow> small_titles;
  CorrelationResult salary;  // median SES vs mean salary
  CorrelationResult occupational_class;
  TitleMatches matches;
  std::size_t unscored_users = 0;  // matched users absent from the score table
};

// Matches titles, takes per-title median SES over scored users and
// correlates the medians with salary and class. Throws TooFewObservations
// when fewer than three titles remain.
TitleSalaryReport title_salary_analysis(const ScoreTable& users, const UserProfileStore& profiles,
                                        const TitleLexicon& lexicon, const TitleMatchOptions& match_options = {},
                                        const BootstrapOptions& bootstrap = {});

}  // namespace sesmap
