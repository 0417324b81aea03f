#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "star/data.hpp"

namespace star {

struct AdapterOutput {
  std::vector<RawRow> rows;
  std::vector<Reject> rejects;
};

enum class DatasetKind { kYoochoose, kDiginetica, kCanonical };

DatasetKind parse_dataset_kind(std::string_view name);
std::string_view dataset_name(DatasetKind kind);

// Default test window: final day for Yoochoose, final week otherwise.
Seconds default_test_boundary(DatasetKind kind);

// `2014-04-07T10:51:09.780Z` -> epoch seconds (UTC, sub-seconds truncated).
std::optional<Seconds> parse_iso8601(std::string_view text);
// `2016-05-09` -> epoch seconds of midnight UTC.
std::optional<Seconds> parse_date(std::string_view text);

// session_id,timestamp,item_id,category
AdapterOutput read_yoochoose(std::istream& in);
// sessionId;userId;itemId;timeframe;eventdate (header line optional)
AdapterOutput read_diginetica(std::istream& in);
// session_id<TAB>item<TAB>epoch_seconds
AdapterOutput read_canonical_rows(std::istream& in);

AdapterOutput read_dataset(DatasetKind kind, std::istream& in);

}  // namespace star
