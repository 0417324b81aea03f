#include "star/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "star/random.hpp"

namespace star {

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& o) {
  if (o.n_items < 2 || o.n_sessions == 0 || o.min_length < 2 || o.max_length < o.min_length || o.days == 0) {
    throw std::invalid_argument("synthetic corpus: inconsistent options");
  }
  Rng rng(o.seed);
  SyntheticCorpus corpus;
  auto permutation = [&] {
    std::vector<ItemId> p(o.n_items);
    std::iota(p.begin(), p.end(), ItemId{0});
    rng.shuffle(std::span<ItemId>(p));
    return p;
  };
  corpus.short_successor = permutation();
  corpus.long_successor = permutation();

  const Seconds longest = static_cast<Seconds>(o.max_length) * std::max(o.short_gap_max, o.long_gap_max);
  if (longest >= kSecondsPerDay / 2) throw std::invalid_argument("synthetic corpus: sessions could span two days");
  for (std::size_t s = 0; s < o.n_sessions; ++s) {
    const auto day = static_cast<Seconds>(s * o.days / o.n_sessions);
    Seconds t = o.start_epoch + day * kSecondsPerDay + static_cast<Seconds>(rng.below(kSecondsPerDay / 2));
    const auto length = o.min_length + rng.below(o.max_length - o.min_length + 1);

    char id[32];
    std::snprintf(id, sizeof id, "s%06zu", s);
    Session session{id, {}};
    const auto first = static_cast<ItemId>(rng.below(o.n_items));
    session.events.push_back({first, t});
    bool last_gap_long = false;
    while (session.events.size() < length) {
      const ItemId last = session.events.back().item_id;
      ItemId next = last_gap_long ? corpus.long_successor[first] : corpus.short_successor[last];
      if (rng.uniform() < o.noise) next = static_cast<ItemId>(rng.below(o.n_items));
      last_gap_long = rng.uniform() < o.long_gap_probability;
      const Seconds lo = last_gap_long ? o.long_gap_min : o.short_gap_min;
      const Seconds hi = last_gap_long ? o.long_gap_max : o.short_gap_max;
      t += lo + static_cast<Seconds>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
      session.events.push_back({next, t});
    }
    corpus.sessions.push_back(std::move(session));
  }
  return corpus;
}

std::vector<RawRow> to_raw_rows(const std::vector<Session>& sessions) {
  std::vector<RawRow> rows;
  for (const auto& s : sessions) {
    for (const auto& e : s.events) rows.push_back({s.session_id, "i" + std::to_string(e.item_id), e.timestamp});
  }
  return rows;
}

}  // namespace star
