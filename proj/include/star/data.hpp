#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace star {

using ItemId = std::uint32_t;
using Seconds = std::int64_t;

// Interval in seconds between two adjacent events; empty at the session
// boundaries where no neighbour exists.
using Interval = std::optional<Seconds>;

inline constexpr Seconds kSecondsPerDay = 86400;
inline constexpr Seconds kSecondsPerWeek = 7 * kSecondsPerDay;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Event {
  ItemId item_id = 0;
  Seconds timestamp = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Session {
  std::string session_id;
  std::vector<Event> events;

  Seconds start_time() const { return events.empty() ? 0 : events.front().timestamp; }
  std::size_t size() const { return events.size(); }

  friend bool operator==(const Session&, const Session&) = default;
};

struct SequenceSample {
  std::vector<ItemId> prefix;
  std::vector<Interval> before_intervals;
  std::vector<Interval> after_intervals;
  ItemId target = 0;

  friend bool operator==(const SequenceSample&, const SequenceSample&) = default;
};

struct CorpusStats {
  std::size_t n_clicks = 0;
  std::size_t n_sessions = 0;
  std::size_t n_sequences = 0;
  std::size_t n_items = 0;
  double avg_session_length = 0.0;     // clicks per session
  double avg_samples_per_session = 0.0;
  // train only: the most-recent share kept and the session count before it
  std::string fraction = "full";
  std::size_t sessions_before_fraction = 0;
};

CorpusStats compute_stats(std::span<const Session> sessions);

// One raw click as delivered by a dataset adapter.
struct RawRow {
  std::string session_id;
  std::string item;
  Seconds timestamp = 0;
};

// A row the adapters could not interpret. `reason` is a short code
// (e.g. "bad_field_count", "bad_timestamp").
struct Reject {
  std::size_t line = 0;
  std::string reason;
  std::string text;
};

// Sessions keyed by provisional dense ids; `item_names[id]` is the raw id.
struct RawCorpus {
  std::vector<Session> sessions;
  std::vector<std::string> item_names;
};

// Groups rows by session id (sessions ordered by id), sorts each session's
// events by timestamp (stable on input order) and assigns provisional dense
// item ids in order of first appearance in that output.
RawCorpus parse_events(std::span<const RawRow> rows);

struct FilterOptions {
  std::size_t min_item_support = 5;
  std::size_t min_session_len = 2;
};

// Removes rare items and short sessions repeatedly until neither rule
// removes anything. Throws DataError when nothing survives.
std::vector<Session> filter_corpus(std::vector<Session> sessions,
                                   const FilterOptions& options = {});

struct ChronologicalSplit {
  std::vector<Session> train;
  std::vector<Session> test;
};

// Sessions starting after (latest timestamp - test_boundary) form the test
// set. Test items never seen in train are dropped, then test sessions left
// shorter than two events are dropped.
ChronologicalSplit split_chronological(std::vector<Session> sessions,
                                       Seconds test_boundary);

// Drops events whose item never occurs in `train`, then sessions left with
// fewer than two events.
std::vector<Session> restrict_to_items_of(std::vector<Session> sessions,
                                          std::span<const Session> train);

// The most recent `fraction` of sessions by start time (ties on session id).
// Used both for the validation split and for Yoochoose subsampling.
std::pair<std::vector<Session>, std::vector<Session>> split_validation(
    std::vector<Session> train, double fraction = 0.10);

// Keeps only the most recent `fraction` of sessions, in start-time order.
std::vector<Session> most_recent_fraction(std::vector<Session> sessions,
                                          double fraction);

std::vector<SequenceSample> expand_sequences(const Session& session);
std::vector<SequenceSample> expand_all(std::span<const Session> sessions);

// Dense item vocabulary. Index order is the order of first appearance in
// the train sessions it was built from.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names);

  static Vocabulary build(std::span<const Session> train,
                          std::span<const std::string> provisional_names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(ItemId id) const { return names_.at(id); }
  std::optional<ItemId> find(const std::string& name) const;

  // Re-indexes sessions from provisional ids; events whose item is not in
  // the vocabulary are removed.
  std::vector<Session> remap(std::span<const Session> sessions,
                             std::span<const std::string> provisional_names) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::pair<std::string, ItemId>> sorted_;
};

// Canonical event file: `session_id<TAB>item_index<TAB>epoch_seconds`,
// sorted by (session_id, epoch_seconds).
void write_canonical(const std::string& path, std::span<const Session> sessions);
std::vector<Session> read_canonical(const std::string& path);

void write_vocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::string& path);

void write_reject_log(const std::string& path, std::span<const Reject> rejects);

}  // namespace star
