#include "tgrg/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "tgrg/errors.hpp"

namespace tgrg {

// ---------------------------------------------------------------------------
// Calendar arithmetic (proleptic Gregorian, days since 1970-01-01)
// ---------------------------------------------------------------------------

namespace {

std::int64_t days_from_civil(std::int64_t y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const int yoe = static_cast<int>(y - era * 400);
  const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const int doe = static_cast<int>(z - era * 146097);
  const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const int mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = yoe + era * 400 + (m <= 2);
}

bool all_digits(const std::string& s, std::size_t lo, std::size_t hi) {
  for (std::size_t k = lo; k < hi; ++k)
    if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
  return true;
}

}  // namespace

std::int64_t parse_date(const std::string& iso) {
  const auto bad = [&] {
    return ValidationError("invalid date '" + iso + "': expected YYYY-MM-DD");
  };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw bad();
  if (!all_digits(iso, 0, 4) || !all_digits(iso, 5, 7) || !all_digits(iso, 8, 10)) throw bad();
  const int y = std::stoi(iso.substr(0, 4));
  const int m = std::stoi(iso.substr(5, 2));
  const int d = std::stoi(iso.substr(8, 2));
  if (m < 1 || m > 12) throw bad();
  static const int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  const int last = kDays[m - 1] + (m == 2 && leap ? 1 : 0);
  if (d < 1 || d > last) throw bad();
  return days_from_civil(y, m, d);
}

std::string format_date(std::int64_t days) {
  std::int64_t y;
  int m, d;
  civil_from_days(days, y, m, d);
  std::ostringstream out;
  out << y << '-' << (m < 10 ? "0" : "") << m << '-' << (d < 10 ? "0" : "") << d;
  return out.str();
}

int weekday(std::int64_t days) {
  return static_cast<int>(((days + 4) % 7 + 7) % 7);  // 1970-01-01 is a Thursday
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

void validate(const IngestionConfig& config) {
  if (config.aggregation_days < 1)
    throw ValidationError("ingestion config: aggregation_days must be >= 1");
  if (!(config.activity_threshold >= 0.0 && config.activity_threshold <= 1.0))
    throw ValidationError("ingestion config: activity_threshold must be in [0,1]");
  if (config.date_from && config.date_to &&
      parse_date(*config.date_from) > parse_date(*config.date_to))
    throw ValidationError("ingestion config: date_from is after date_to");
}

namespace {

struct ParsedRecord {
  std::int64_t day = 0;
  std::string lender;
  std::string borrower;
};

ParsedRecord parse_record(const std::string& date, const std::string& lender,
                          const std::string& borrower) {
  if (lender.empty() || borrower.empty()) throw ValidationError("empty node label");
  if (lender == borrower)
    throw ValidationError("lender equals borrower ('" + lender + "')");
  return {parse_date(date), lender, borrower};
}

// Collects per-record messages and renders them as one error.
struct ErrorList {
  std::vector<std::string> messages;

  void add(const std::string& where, const std::string& what) {
    messages.push_back(where + ": " + what);
  }
  void raise_if_any() const {
    if (messages.empty()) return;
    std::ostringstream out;
    const std::size_t shown = std::min<std::size_t>(messages.size(), 8);
    for (std::size_t k = 0; k < shown; ++k) out << (k ? "; " : "") << messages[k];
    if (messages.size() > shown)
      out << "; and " << messages.size() - shown << " more";
    throw ValidationError(out.str());
  }
};

IngestionResult build(std::vector<ParsedRecord> records, const IngestionConfig& config) {
  validate(config);
  IngestionResult result;

  // Date-range restriction.
  if (config.date_from || config.date_to) {
    const std::int64_t lo = config.date_from ? parse_date(*config.date_from)
                                             : std::numeric_limits<std::int64_t>::min();
    const std::int64_t hi = config.date_to ? parse_date(*config.date_to)
                                           : std::numeric_limits<std::int64_t>::max();
    std::vector<ParsedRecord> kept;
    kept.reserve(records.size());
    for (auto& r : records) {
      if (r.day < lo || r.day > hi)
        ++result.n_skipped;
      else
        kept.push_back(std::move(r));
    }
    records = std::move(kept);
  }
  if (records.empty()) throw ValidationError("ingest: no records within the date range");
  result.n_records = static_cast<long>(records.size());

  std::int64_t min_day = records.front().day, max_day = records.front().day;
  for (const auto& r : records) {
    min_day = std::min(min_day, r.day);
    max_day = std::max(max_day, r.day);
  }
  // Weekly windows align to calendar weeks; other lengths tile from the first
  // retained date.
  const std::int64_t anchor =
      config.aggregation_days == 7 ? min_day - (weekday(min_day) + 6) % 7 : min_day;
  const int n_windows =
      static_cast<int>((max_day - anchor) / config.aggregation_days) + 1;

  // Label set and per-node window activity, both order-insensitive.
  std::map<std::string, int> index_of;
  for (const auto& r : records) {
    index_of.emplace(r.lender, 0);
    index_of.emplace(r.borrower, 0);
  }
  int next = 0;
  for (auto& [label, index] : index_of) index = next++;  // lexicographic order

  std::vector<std::vector<char>> active(index_of.size(),
                                        std::vector<char>(static_cast<std::size_t>(n_windows), 0));
  for (const auto& r : records) {
    const int w = static_cast<int>((r.day - anchor) / config.aggregation_days);
    active[static_cast<std::size_t>(index_of[r.lender])][static_cast<std::size_t>(w)] = 1;
    active[static_cast<std::size_t>(index_of[r.borrower])][static_cast<std::size_t>(w)] = 1;
  }

  const double required = config.activity_threshold * n_windows;
  std::vector<int> final_index(index_of.size(), -1);
  for (const auto& [label, index] : index_of) {
    long count = 0;
    for (char a : active[static_cast<std::size_t>(index)]) count += a;
    if (static_cast<double>(count) >= required) {
      final_index[static_cast<std::size_t>(index)] = static_cast<int>(result.labels.size());
      result.labels.push_back(label);
    } else {
      result.dropped_labels.push_back(label);
    }
  }
  if (result.labels.empty())
    throw ValidationError("ingest: the activity filter removed every node");

  const int n = static_cast<int>(result.labels.size());
  result.network.directed = true;
  result.network.snapshots.assign(static_cast<std::size_t>(n_windows),
                                  AdjacencyMatrix::Zero(n, n));
  for (const auto& r : records) {
    const int i = final_index[static_cast<std::size_t>(index_of[r.lender])];
    const int j = final_index[static_cast<std::size_t>(index_of[r.borrower])];
    if (i < 0 || j < 0) continue;  // an endpoint was filtered out
    const int w = static_cast<int>((r.day - anchor) / config.aggregation_days);
    result.network.snapshots[static_cast<std::size_t>(w)](i, j) = 1;
  }

  result.window_starts.reserve(static_cast<std::size_t>(n_windows));
  for (int w = 0; w < n_windows; ++w)
    result.window_starts.push_back(format_date(anchor + static_cast<std::int64_t>(w) *
                                                            config.aggregation_days));
  return result;
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, delim)) fields.push_back(field);
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  return fields;
}

std::string trimmed(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

std::string lowered(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

IngestionResult ingest(const std::vector<EdgeRecord>& records, const IngestionConfig& config) {
  std::vector<ParsedRecord> parsed;
  parsed.reserve(records.size());
  ErrorList errors;
  for (std::size_t k = 0; k < records.size(); ++k) {
    try {
      parsed.push_back(parse_record(records[k].date, records[k].lender, records[k].borrower));
    } catch (const ValidationError& e) {
      errors.add("record " + std::to_string(k + 1), e.what());
    }
  }
  errors.raise_if_any();
  return build(std::move(parsed), config);
}

IngestionResult ingest_file(const std::string& path, const IngestionConfig& config) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(file, line))
    throw ValidationError("'" + path + "': empty file, expected a header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';

  int date_col = -1, lender_col = -1, borrower_col = -1;
  const std::vector<std::string> header = split_fields(line, delim);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = lowered(trimmed(header[c]));
    if (name == "date") date_col = static_cast<int>(c);
    if (name == "lender") lender_col = static_cast<int>(c);
    if (name == "borrower") borrower_col = static_cast<int>(c);
  }
  if (date_col < 0 || lender_col < 0 || borrower_col < 0)
    throw ValidationError("'" + path +
                          "': header must name the columns date, lender and borrower");
  const std::size_t n_needed = static_cast<std::size_t>(
      std::max({date_col, lender_col, borrower_col}) + 1);

  std::vector<ParsedRecord> parsed;
  ErrorList errors;
  long line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trimmed(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line, delim);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() < n_needed) {
      errors.add(where, "expected at least " + std::to_string(n_needed) + " fields, got " +
                            std::to_string(fields.size()));
      continue;
    }
    try {
      parsed.push_back(parse_record(trimmed(fields[static_cast<std::size_t>(date_col)]),
                                    trimmed(fields[static_cast<std::size_t>(lender_col)]),
                                    trimmed(fields[static_cast<std::size_t>(borrower_col)])));
    } catch (const ValidationError& e) {
      errors.add(where, e.what());
    }
  }
  if (file.bad()) throw IoError("read failure on '" + path + "'");
  errors.raise_if_any();
  if (parsed.empty()) throw ValidationError("'" + path + "': no data rows");
  return build(std::move(parsed), config);
}

}  // namespace tgrg
