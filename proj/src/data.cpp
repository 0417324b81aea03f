#include "star/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "star/adapters.hpp"

namespace star {
namespace {

struct PendingEvent {
  Seconds timestamp;
  std::size_t order;
  std::string item;
};

// session id -> events sorted by (timestamp, input order)
std::map<std::string, std::vector<PendingEvent>> group_rows(std::span<const RawRow> rows) {
  std::map<std::string, std::vector<PendingEvent>> grouped;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    grouped[rows[i].session_id].push_back({rows[i].timestamp, i, rows[i].item});
  }
  for (auto& [id, events] : grouped) {
    std::sort(events.begin(), events.end(), [](const PendingEvent& a, const PendingEvent& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.order < b.order;
    });
  }
  return grouped;
}

void sort_by_start(std::vector<Session>& sessions) {
  std::stable_sort(sessions.begin(), sessions.end(), [](const Session& a, const Session& b) {
    if (a.start_time() != b.start_time()) return a.start_time() < b.start_time();
    return a.session_id < b.session_id;
  });
}

std::size_t fraction_count(double fraction, std::size_t n) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DataError("fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

CorpusStats compute_stats(std::span<const Session> sessions) {
  CorpusStats stats;
  std::unordered_set<ItemId> items;
  for (const auto& s : sessions) {
    stats.n_clicks += s.size();
    stats.n_sequences += s.size() > 0 ? s.size() - 1 : 0;
    for (const auto& e : s.events) items.insert(e.item_id);
  }
  stats.n_sessions = sessions.size();
  stats.n_items = items.size();
  if (stats.n_sessions > 0) {
    const auto n = static_cast<double>(stats.n_sessions);
    stats.avg_session_length = static_cast<double>(stats.n_clicks) / n;
    stats.avg_samples_per_session = static_cast<double>(stats.n_sequences) / n;
  }
  return stats;
}

RawCorpus parse_events(std::span<const RawRow> rows) {
  RawCorpus corpus;
  std::unordered_map<std::string, ItemId> ids;
  for (auto& [session_id, pending] : group_rows(rows)) {
    Session session{session_id, {}};
    session.events.reserve(pending.size());
    for (const auto& p : pending) {
      auto [it, inserted] = ids.try_emplace(p.item, static_cast<ItemId>(corpus.item_names.size()));
      if (inserted) corpus.item_names.push_back(p.item);
      session.events.push_back({it->second, p.timestamp});
    }
    corpus.sessions.push_back(std::move(session));
  }
  return corpus;
}

std::vector<Session> filter_corpus(std::vector<Session> sessions, const FilterOptions& options) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<ItemId, std::size_t> support;
    for (const auto& s : sessions) {
      for (const auto& e : s.events) ++support[e.item_id];
    }
    std::vector<Session> kept;
    kept.reserve(sessions.size());
    for (auto& s : sessions) {
      const auto before = s.events.size();
      std::erase_if(s.events, [&](const Event& e) {
        return support[e.item_id] < options.min_item_support;
      });
      if (s.events.size() != before) changed = true;
      if (s.events.size() < options.min_session_len) {
        changed = true;
        continue;
      }
      kept.push_back(std::move(s));
    }
    sessions = std::move(kept);
  }
  if (sessions.empty()) throw DataError("empty corpus: every session was filtered out");
  return sessions;
}

std::vector<Session> restrict_to_items_of(std::vector<Session> sessions,
                                          std::span<const Session> train) {
  std::unordered_set<ItemId> known;
  for (const auto& s : train) {
    for (const auto& e : s.events) known.insert(e.item_id);
  }
  std::vector<Session> kept;
  for (auto& s : sessions) {
    std::erase_if(s.events, [&](const Event& e) { return !known.contains(e.item_id); });
    if (s.events.size() >= 2) kept.push_back(std::move(s));
  }
  return kept;
}

ChronologicalSplit split_chronological(std::vector<Session> sessions, Seconds test_boundary) {
  if (sessions.empty()) throw DataError("cannot split an empty corpus");
  Seconds first = sessions.front().start_time();
  Seconds last = first;
  for (const auto& s : sessions) {
    for (const auto& e : s.events) {
      first = std::min(first, e.timestamp);
      last = std::max(last, e.timestamp);
    }
  }
  if (test_boundary <= 0 || test_boundary > last - first) {
    throw DataError("test boundary " + std::to_string(test_boundary) +
                    "s lies outside the corpus time range of " + std::to_string(last - first) + "s");
  }
  const Seconds threshold = last - test_boundary;
  ChronologicalSplit split;
  for (auto& s : sessions) {
    (s.start_time() > threshold ? split.test : split.train).push_back(std::move(s));
  }
  if (split.train.empty()) throw DataError("chronological split left the train set empty");
  split.test = restrict_to_items_of(std::move(split.test), split.train);
  if (split.test.empty()) throw DataError("chronological split left the test set empty");
  return split;
}

std::pair<std::vector<Session>, std::vector<Session>> split_validation(
    std::vector<Session> train, double fraction) {
  if (train.empty()) throw DataError("cannot split an empty train set");
  const auto count = fraction_count(fraction, train.size());
  sort_by_start(train);
  std::vector<Session> validation(std::make_move_iterator(train.end() - count),
                                  std::make_move_iterator(train.end()));
  train.resize(train.size() - count);
  return {std::move(train), std::move(validation)};
}

std::vector<Session> most_recent_fraction(std::vector<Session> sessions, double fraction) {
  const auto count = std::max<std::size_t>(1, fraction_count(fraction, sessions.size()));
  sort_by_start(sessions);
  sessions.erase(sessions.begin(), sessions.end() - static_cast<std::ptrdiff_t>(
                                                        std::min(count, sessions.size())));
  return sessions;
}

std::vector<SequenceSample> expand_sequences(const Session& session) {
  const auto& ev = session.events;
  std::vector<SequenceSample> samples;
  if (ev.size() < 2) return samples;
  samples.reserve(ev.size() - 1);
  for (std::size_t m = 1; m < ev.size(); ++m) {
    SequenceSample s;
    s.prefix.reserve(m);
    s.before_intervals.reserve(m);
    s.after_intervals.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
      s.prefix.push_back(ev[k].item_id);
      s.before_intervals.push_back(k == 0 ? Interval{} : Interval{ev[k].timestamp - ev[k - 1].timestamp});
      s.after_intervals.push_back(k + 1 == m ? Interval{} : Interval{ev[k + 1].timestamp - ev[k].timestamp});
    }
    s.target = ev[m].item_id;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<SequenceSample> expand_all(std::span<const Session> sessions) {
  std::vector<SequenceSample> all;
  for (const auto& s : sessions) {
    auto samples = expand_sequences(s);
    all.insert(all.end(), std::make_move_iterator(samples.begin()),
               std::make_move_iterator(samples.end()));
  }
  return all;
}

// -- Vocabulary --------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  sorted_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    sorted_.emplace_back(names_[i], static_cast<ItemId>(i));
  }
  std::sort(sorted_.begin(), sorted_.end());
  for (std::size_t i = 1; i < sorted_.size(); ++i) {
    if (sorted_[i].first == sorted_[i - 1].first) {
      throw DataError("duplicate vocabulary entry '" + sorted_[i].first + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const Session> train,
                             std::span<const std::string> provisional_names) {
  std::vector<std::string> names;
  std::vector<bool> seen(provisional_names.size(), false);
  for (const auto& s : train) {
    for (const auto& e : s.events) {
      if (!seen.at(e.item_id)) {
        seen[e.item_id] = true;
        names.push_back(provisional_names[e.item_id]);
      }
    }
  }
  return Vocabulary(std::move(names));
}

std::optional<ItemId> Vocabulary::find(const std::string& name) const {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), name,
                             [](const auto& entry, const std::string& key) { return entry.first < key; });
  if (it == sorted_.end() || it->first != name) return std::nullopt;
  return it->second;
}

std::vector<Session> Vocabulary::remap(std::span<const Session> sessions,
                                       std::span<const std::string> provisional_names) const {
  std::vector<std::optional<ItemId>> lookup(provisional_names.size());
  for (std::size_t i = 0; i < provisional_names.size(); ++i) lookup[i] = find(provisional_names[i]);
  std::vector<Session> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    Session mapped{s.session_id, {}};
    for (const auto& e : s.events) {
      if (const auto id = lookup.at(e.item_id)) mapped.events.push_back({*id, e.timestamp});
    }
    out.push_back(std::move(mapped));
  }
  return out;
}

// -- Files -------------------------------------------------------------------

void write_canonical(const std::string& path, std::span<const Session> sessions) {
  std::vector<const Session*> order;
  for (const auto& s : sessions) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const Session* a, const Session* b) { return a->session_id < b->session_id; });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (const auto* s : order) {
    auto events = s->events;
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    for (const auto& e : events) {
      out << s->session_id << '\t' << e.item_id << '\t' << e.timestamp << '\n';
    }
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::vector<Session> read_canonical(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open canonical event file '" + path + "'");
  auto parsed = read_canonical_rows(in);
  if (!parsed.rejects.empty()) {
    const auto& r = parsed.rejects.front();
    throw DataError(path + ":" + std::to_string(r.line) + ": " + r.reason);
  }
  std::vector<Session> sessions;
  for (auto& [session_id, pending] : group_rows(parsed.rows)) {
    Session session{session_id, {}};
    for (const auto& p : pending) {
      ItemId id = 0;
      auto [ptr, ec] = std::from_chars(p.item.data(), p.item.data() + p.item.size(), id);
      if (ec != std::errc{} || ptr != p.item.data() + p.item.size()) {
        throw DataError(path + ": item index '" + p.item + "' is not a dense index");
      }
      session.events.push_back({id, p.timestamp});
    }
    sessions.push_back(std::move(session));
  }
  return sessions;
}

void write_vocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < vocab.size(); ++i) out << i << '\t' << vocab.names()[i] << '\n';
}

Vocabulary read_vocabulary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary '" + path + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || std::stoul(line.substr(0, tab)) != names.size()) {
      throw DataError(path + ": malformed vocabulary line " + std::to_string(names.size() + 1));
    }
    names.push_back(line.substr(tab + 1));
  }
  return Vocabulary(std::move(names));
}

void write_reject_log(const std::string& path, std::span<const Reject> rejects) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (const auto& r : rejects) out << r.line << '\t' << r.reason << '\t' << r.text << '\n';
}

}  // namespace star
