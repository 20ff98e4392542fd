#include "sesmap/ingest.hpp"

#include <algorithm>
#include <cctype>

#include "sesmap/csv.hpp"

namespace sesmap {

namespace {

constexpr std::array<std::string_view, kDomainCount> kDomainLabels{
    "supermarkets_department", "clothing_specialty", "chain_restaurants", "news", "sports", "tv_shows"};

std::string location_prefix(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

// Maps required column names to positions; throws if any is missing.
std::vector<std::size_t> resolve_columns(const std::vector<std::string>& header,
                                         std::initializer_list<std::string_view> required,
                                         const std::filesystem::path& path) {
  std::vector<std::size_t> positions;
  for (auto name : required) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorKind::MalformedRow, path.string() + ": header lacks column '" + std::string(name) + "'", 1);
    }
    positions.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  return positions;
}

std::optional<std::size_t> optional_column(const std::vector<std::string>& header, std::string_view name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

// Applies the error policy: rethrows under Throw, records under Collect.
void handle_row_error(const Error& err, const LoadOptions& options, std::vector<RowError>& sink) {
  if (options.on_error == ErrorPolicy::Throw) throw err;
  sink.push_back({err.line().value_or(0), err.kind(), err.what()});
}

}  // namespace

std::string_view to_string(Domain domain) noexcept { return kDomainLabels[static_cast<std::size_t>(domain)]; }

std::optional<Domain> parse_domain(std::string_view label) noexcept {
  for (std::size_t i = 0; i < kDomainCount; ++i) {
    if (kDomainLabels[i] == label) return static_cast<Domain>(i);
  }
  return std::nullopt;
}

std::uint32_t IdMap::intern(std::string_view id) {
  if (auto it = index_.find(id); it != index_.end()) return it->second;
  const auto index = static_cast<std::uint32_t>(ids_.size());
  ids_.emplace_back(id);
  index_.emplace(ids_.back(), index);
  return index;
}

std::optional<std::uint32_t> IdMap::find(std::string_view id) const {
  if (auto it = index_.find(id); it != index_.end()) return it->second;
  return std::nullopt;
}

std::uint32_t BrandCatalog::add(BrandEntry entry) {
  if (ids_.find(entry.brand_id)) {
    throw Error(ErrorKind::DuplicateBrandId, "duplicate brand_id '" + entry.brand_id + "'");
  }
  const auto index = ids_.intern(entry.brand_id);
  entries_.push_back(std::move(entry));
  return index;
}

std::size_t EdgeStore::n_brands_seen() const {
  std::vector<bool> seen(n_brands(), false);
  std::size_t count = 0;
  for (const auto& e : edges) {
    if (!seen[e.brand]) {
      seen[e.brand] = true;
      ++count;
    }
  }
  return count;
}

void UserProfileStore::add(UserProfile profile) {
  if (ids_.find(profile.user_id)) {
    throw Error(ErrorKind::DuplicateUserId, "duplicate user_id '" + profile.user_id + "'");
  }
  ids_.intern(profile.user_id);
  profiles_.push_back(std::move(profile));
}

const UserProfile* UserProfileStore::find(std::string_view user_id) const {
  auto index = ids_.find(user_id);
  return index ? &profiles_[*index] : nullptr;
}

std::vector<std::string> UserProfileStore::orphans(const EdgeStore& edges) const {
  std::vector<bool> has_edge(edges.n_users(), false);
  for (const auto& e : edges.edges) has_edge[e.user] = true;
  std::vector<std::string> out;
  for (const auto& p : profiles_) {
    auto index = edges.user_ids ? edges.user_ids->find(p.user_id) : std::nullopt;
    if (!index || !has_edge[*index]) out.push_back(p.user_id);
  }
  return out;
}

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text) noexcept {
  text = csv::trim(text);
  if (text.size() > 10 && text[10] == 'T') text = text.substr(0, 10);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  long long y = 0, m = 0, d = 0;
  if (!csv::parse_int64(text.substr(0, 4), y) || !csv::parse_int64(text.substr(5, 2), m) ||
      !csv::parse_int64(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::string format_iso_date(std::chrono::year_month_day date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

BrandCatalog load_brand_catalog(const std::filesystem::path& path, const LoadOptions& options) {
  csv::Reader reader(path, options.delimiter);
  const auto header = reader.read_header();
  const auto cols = resolve_columns(header, {"brand_id", "screen_name", "domain", "follower_count"}, path);
  const auto width = *std::max_element(cols.begin(), cols.end()) + 1;

  BrandCatalog catalog;
  std::vector<std::string> row;
  while (reader.next(row)) {
    const auto line = reader.record_line();
    try {
      if (row.size() < width) {
        throw Error(ErrorKind::MalformedRow,
                    location_prefix(path, line) + "expected " + std::to_string(header.size()) + " fields",
                    line);
      }
      BrandEntry entry;
      entry.brand_id = std::string(csv::trim(row[cols[0]]));
      entry.screen_name = std::string(csv::trim(row[cols[1]]));
      if (entry.brand_id.empty()) {
        throw Error(ErrorKind::MalformedRow, location_prefix(path, line) + "empty brand_id", line);
      }
      const auto label = csv::trim(row[cols[2]]);
      auto domain = parse_domain(label);
      if (!domain) {
        throw Error(ErrorKind::UnknownDomain,
                    location_prefix(path, line) + "unknown domain '" + std::string(label) + "' for brand '" +
                        entry.brand_id + "'",
                    line);
      }
      entry.domain = *domain;
      unsigned long long followers = 0;
      if (!csv::parse_uint64(csv::trim(row[cols[3]]), followers)) {
        throw Error(ErrorKind::MalformedRow, location_prefix(path, line) + "invalid follower_count", line);
      }
      entry.follower_count_at_selection = followers;
      if (catalog.find(entry.brand_id)) {
        throw Error(ErrorKind::DuplicateBrandId,
                    location_prefix(path, line) + "duplicate brand_id '" + entry.brand_id + "'", line);
      }
      catalog.add(std::move(entry));
    } catch (const Error& err) {
      handle_row_error(err, options, catalog.row_errors);
    }
  }
  if (catalog.size() == 0) {
    catalog.warnings.push_back(path.string() + ": brand catalog is empty");
  }
  return catalog;
}

namespace {

EdgeStore finish_edges(std::vector<Edge> raw, std::shared_ptr<IdMap> users, const BrandCatalog& catalog,
                       std::size_t skipped, std::vector<RowError> errors) {
  EdgeStore store;
  std::sort(raw.begin(), raw.end());
  const auto before = raw.size();
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  store.duplicate_edges = before - raw.size();
  store.skipped_unknown_brand = skipped;
  store.edges = std::move(raw);
  store.user_ids = std::move(users);
  store.brand_ids = std::make_shared<IdMap>(catalog.ids());
  store.row_errors = std::move(errors);
  return store;
}

}  // namespace

EdgeStore load_edges(const std::filesystem::path& path, const BrandCatalog& catalog, const LoadOptions& options) {
  csv::Reader reader(path, options.delimiter);
  const auto header = reader.read_header();
  const auto cols = resolve_columns(header, {"user_id", "brand_id"}, path);
  const auto width = std::max(cols[0], cols[1]) + 1;

  auto users = std::make_shared<IdMap>();
  std::vector<Edge> raw;
  std::vector<RowError> errors;
  std::size_t skipped = 0;
  std::vector<std::string> row;
  while (reader.next(row)) {
    const auto line = reader.record_line();
    try {
      if (row.size() < width) {
        throw Error(ErrorKind::MalformedRow, location_prefix(path, line) + "expected user_id and brand_id", line);
      }
      const auto user = csv::trim(row[cols[0]]);
      const auto brand = csv::trim(row[cols[1]]);
      if (user.empty() || brand.empty()) {
        throw Error(ErrorKind::MalformedRow, location_prefix(path, line) + "empty identifier", line);
      }
      auto brand_index = catalog.find(brand);
      if (!brand_index) {
        ++skipped;
        continue;
      }
      raw.push_back({users->intern(user), *brand_index});
    } catch (const Error& err) {
      handle_row_error(err, options, errors);
    }
  }
  if (raw.empty()) {
    throw Error(ErrorKind::EmptyInput, path.string() + ": no valid edges");
  }
  return finish_edges(std::move(raw), std::move(users), catalog, skipped, std::move(errors));
}

EdgeStore make_edge_store(const std::vector<std::pair<std::string, std::string>>& pairs, const BrandCatalog& catalog) {
  auto users = std::make_shared<IdMap>();
  std::vector<Edge> raw;
  raw.reserve(pairs.size());
  std::size_t skipped = 0;
  for (const auto& [user, brand] : pairs) {
    auto brand_index = catalog.find(brand);
    if (!brand_index) {
      ++skipped;
      continue;
    }
    raw.push_back({users->intern(user), *brand_index});
  }
  return finish_edges(std::move(raw), std::move(users), catalog, skipped, {});
}

UserProfileStore load_user_profiles(const std::filesystem::path& path, const LoadOptions& options) {
  csv::Reader reader(path, options.delimiter);
  const auto header = reader.read_header();
  const auto cols = resolve_columns(header, {"user_id", "statuses_count", "followers_count", "last_active"}, path);
  const auto location_col = optional_column(header, "location");
  const auto description_col = optional_column(header, "description");
  const auto width = *std::max_element(cols.begin(), cols.end()) + 1;

  UserProfileStore store;
  std::vector<std::string> row;
  while (reader.next(row)) {
    const auto line = reader.record_line();
    try {
      if (row.size() < width) {
        throw Error(ErrorKind::MalformedRow, location_prefix(path, line) + "too few fields", line);
      }
      UserProfile profile;
      profile.user_id = std::string(csv::trim(row[cols[0]]));
      if (profile.user_id.empty()) {
        throw Error(ErrorKind::MalformedRow, location_prefix(path, line) + "empty user_id", line);
      }
      unsigned long long statuses = 0, followers = 0;
      if (!csv::parse_uint64(csv::trim(row[cols[1]]), statuses)) {
        throw Error(ErrorKind::MalformedRow, location_prefix(path, line) + "invalid statuses_count", line);
      }
      if (!csv::parse_uint64(csv::trim(row[cols[2]]), followers)) {
        throw Error(ErrorKind::MalformedRow, location_prefix(path, line) + "invalid followers_count", line);
      }
      profile.statuses_count = statuses;
      profile.followers_count = followers;
      auto date = parse_iso_date(row[cols[3]]);
      if (!date) {
        throw Error(ErrorKind::MalformedRow,
                    location_prefix(path, line) + "invalid last_active '" + row[cols[3]] + "'", line);
      }
      profile.last_active = *date;
      if (location_col && *location_col < row.size()) {
        auto loc = csv::trim(row[*location_col]);
        if (!loc.empty()) {
          std::string code(loc);
          std::transform(code.begin(), code.end(), code.begin(),
                         [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
          profile.location_resolved = std::move(code);
        }
      }
      if (description_col && *description_col < row.size()) {
        profile.description = row[*description_col];
      }
      if (store.find(profile.user_id)) {
        throw Error(ErrorKind::DuplicateUserId,
                    location_prefix(path, line) + "duplicate user_id '" + profile.user_id + "'", line);
      }
      store.add(std::move(profile));
    } catch (const Error& err) {
      handle_row_error(err, options, store.row_errors);
    }
  }
  return store;
}

void save_brand_catalog(const std::filesystem::path& path, const BrandCatalog& catalog) {
  csv::Writer writer(path);
  writer.write_row({"brand_id", "screen_name", "domain", "follower_count"});
  for (const auto& b : catalog.entries()) {
    writer.write_row({b.brand_id, b.screen_name, to_string(b.domain), std::to_string(b.follower_count_at_selection)});
  }
  writer.close();
}

void save_edges(const std::filesystem::path& path, const EdgeStore& edges) {
  csv::Writer writer(path);
  writer.write_row({"user_id", "brand_id"});
  for (const auto& e : edges.edges) {
    writer.write_row({edges.user_ids->id(e.user), edges.brand_ids->id(e.brand)});
  }
  writer.close();
}

void save_user_profiles(const std::filesystem::path& path, const UserProfileStore& profiles) {
  csv::Writer writer(path);
  writer.write_row({"user_id", "statuses_count", "followers_count", "last_active", "location", "description"});
  writer.set_always_quote({false, false, false, false, false, true});
  for (const auto& p : profiles.profiles()) {
    writer.write_row({p.user_id, std::to_string(p.statuses_count), std::to_string(p.followers_count),
                      format_iso_date(p.last_active), p.location_resolved.value_or(""), p.description});
  }
  writer.close();
}

}  // namespace sesmap
