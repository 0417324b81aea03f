#include "star/adapters.hpp"

#include <charconv>
#include <chrono>

namespace star {
namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

template <typename T>
std::optional<T> to_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return value;
}

std::optional<Seconds> civil_to_epoch(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count() * kSecondsPerDay;
}

template <typename Fn>
AdapterOutput read_lines(std::istream& in, Fn&& handle) {
  AdapterOutput out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    handle(line_no, view, out);
  }
  return out;
}

}  // namespace

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "yoochoose") return DatasetKind::kYoochoose;
  if (name == "diginetica") return DatasetKind::kDiginetica;
  if (name == "canonical") return DatasetKind::kCanonical;
  throw DataError("unknown dataset adapter '" + std::string(name) + "'");
}

std::string_view dataset_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kYoochoose: return "yoochoose";
    case DatasetKind::kDiginetica: return "diginetica";
    case DatasetKind::kCanonical: return "canonical";
  }
  return "unknown";
}

Seconds default_test_boundary(DatasetKind kind) {
  return kind == DatasetKind::kYoochoose ? kSecondsPerDay : kSecondsPerWeek;
}

std::optional<Seconds> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = to_number<int>(text.substr(0, 4));
  const auto m = to_number<unsigned>(text.substr(5, 2));
  const auto d = to_number<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  return civil_to_epoch(*y, *m, *d);
}

std::optional<Seconds> parse_iso8601(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS[.fff][Z]
  if (text.size() < 19 || text[10] != 'T' || text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  const auto day = parse_date(text.substr(0, 10));
  const auto hh = to_number<int>(text.substr(11, 2));
  const auto mm = to_number<int>(text.substr(14, 2));
  const auto ss = to_number<int>(text.substr(17, 2));
  if (!day || !hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
  auto rest = text.substr(19);
  if (!rest.empty() && rest.front() == '.') {
    rest.remove_prefix(1);
    while (!rest.empty() && rest.front() >= '0' && rest.front() <= '9') rest.remove_prefix(1);
  }
  if (!rest.empty() && rest != "Z") return std::nullopt;
  return *day + *hh * 3600 + *mm * 60 + *ss;
}

AdapterOutput read_yoochoose(std::istream& in) {
  return read_lines(in, [](std::size_t line_no, std::string_view line, AdapterOutput& out) {
    const auto fields = split(line, ',');
    if (fields.size() != 4) {
      out.rejects.push_back({line_no, "bad_field_count", std::string(line)});
      return;
    }
    const auto ts = parse_iso8601(fields[1]);
    if (!ts) {
      out.rejects.push_back({line_no, "bad_timestamp", std::string(line)});
      return;
    }
    if (fields[0].empty() || fields[2].empty()) {
      out.rejects.push_back({line_no, "missing_id", std::string(line)});
      return;
    }
    out.rows.push_back({std::string(fields[0]), std::string(fields[2]), *ts});
  });
}

AdapterOutput read_diginetica(std::istream& in) {
  return read_lines(in, [](std::size_t line_no, std::string_view line, AdapterOutput& out) {
    const auto fields = split(line, ';');
    if (line_no == 1 && !fields.empty() && fields[0] == "sessionId") return;
    if (fields.size() != 5) {
      out.rejects.push_back({line_no, "bad_field_count", std::string(line)});
      return;
    }
    const auto day = parse_date(fields[4]);
    const auto frame = to_number<std::int64_t>(fields[3]);
    if (!day || !frame || *frame < 0) {
      out.rejects.push_back({line_no, "bad_timestamp", std::string(line)});
      return;
    }
    if (fields[0].empty() || fields[2].empty()) {
      out.rejects.push_back({line_no, "missing_id", std::string(line)});
      return;
    }
    // timeframe is milliseconds since the session's first event
    out.rows.push_back({std::string(fields[0]), std::string(fields[2]), *day + *frame / 1000});
  });
}

AdapterOutput read_canonical_rows(std::istream& in) {
  return read_lines(in, [](std::size_t line_no, std::string_view line, AdapterOutput& out) {
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      out.rejects.push_back({line_no, "bad_field_count", std::string(line)});
      return;
    }
    const auto ts = to_number<Seconds>(fields[2]);
    if (!ts || *ts < 0) {
      out.rejects.push_back({line_no, "bad_timestamp", std::string(line)});
      return;
    }
    if (fields[0].empty() || fields[1].empty()) {
      out.rejects.push_back({line_no, "missing_id", std::string(line)});
      return;
    }
    out.rows.push_back({std::string(fields[0]), std::string(fields[1]), *ts});
  });
}

AdapterOutput read_dataset(DatasetKind kind, std::istream& in) {
  switch (kind) {
    case DatasetKind::kYoochoose: return read_yoochoose(in);
    case DatasetKind::kDiginetica: return read_diginetica(in);
    case DatasetKind::kCanonical: return read_canonical_rows(in);
  }
  throw DataError("unhandled dataset kind");
}

}  // namespace star
