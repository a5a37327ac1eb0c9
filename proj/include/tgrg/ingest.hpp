#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tgrg/temporal_network.hpp"

namespace tgrg {

// One transaction row of an edge list: on `date`, `lender` extended credit to
// `borrower`. Labels are free-form strings; the date is an ISO-8601 calendar
// date (YYYY-MM-DD).
struct EdgeRecord {
  std::string date;
  std::string lender;
  std::string borrower;
};

struct IngestionConfig {
  int aggregation_days = 7;          // window length
  double activity_threshold = 0.05;  // keep nodes active in >= threshold * n_windows windows
  std::optional<std::string> date_from;  // inclusive ISO bounds; records outside are skipped
  std::optional<std::string> date_to;
};

void validate(const IngestionConfig& config);

struct IngestionResult {
  TemporalNetwork network;  // directed; snapshot w has A(i,j)=1 iff i lent to j in window w
  std::vector<std::string> labels;         // node index -> label, sorted lexicographically
  std::vector<std::string> window_starts;  // ISO date of each window's first day
  long n_records = 0;                      // records aggregated into the network
  long n_skipped = 0;                      // records outside the configured date range
  std::vector<std::string> dropped_labels;  // removed by the activity filter
};

// Aggregates transactions into binary snapshots, one per window, then drops
// nodes active (as lender or borrower) in fewer than threshold * n_windows
// windows. Weekly windows start on the Monday on or before the earliest
// retained date; other window lengths start at that date itself. The result
// depends only on the set of records, not their order. Throws ValidationError
// for malformed records (self-loops, bad dates; messages carry the record
// index) or when nothing remains after filtering.
IngestionResult ingest(const std::vector<EdgeRecord>& records, const IngestionConfig& config);

// Reads a delimited text file and ingests it. The first line must be a header
// naming the columns `date`, `lender` and `borrower` (any order, extra columns
// ignored, case-insensitive); the delimiter is a tab when the header contains
// one, otherwise a comma. Malformed rows are reported with their line
// numbers. Throws IoError when the file cannot be read.
IngestionResult ingest_file(const std::string& path, const IngestionConfig& config);

// Calendar helpers (proleptic Gregorian), exposed for reuse and tests.
// Throws ValidationError on anything but a valid YYYY-MM-DD date.
std::int64_t parse_date(const std::string& iso);  // days since 1970-01-01
std::string format_date(std::int64_t days);
int weekday(std::int64_t days);  // 0 = Sunday ... 6 = Saturday

}  // namespace tgrg
