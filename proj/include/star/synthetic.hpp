#pragma once

#include <cstdint>
#include <vector>

#include "star/data.hpp"

namespace star {

// Click-log generator with a known next-item rule. Each item has two fixed
// successors drawn from random permutations: after a short gap the session
// continues with the short-gap successor of the last item; after a long gap
// it returns to the long-gap successor of the session's first item. With
// probability `noise` the next item is uniform instead.
struct SyntheticOptions {
  std::size_t n_items = 30;
  std::size_t n_sessions = 50;
  std::size_t min_length = 3;
  std::size_t max_length = 8;
  std::size_t days = 10;
  double noise = 0.0;
  double long_gap_probability = 0.0;
  Seconds short_gap_min = 5;
  Seconds short_gap_max = 120;
  Seconds long_gap_min = 1800;
  Seconds long_gap_max = 3600;
  Seconds start_epoch = 1'396'310'400;  // 2014-04-01T00:00:00Z
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<Session> sessions;  // chronological; ids are dense item indices
  std::vector<ItemId> short_successor;
  std::vector<ItemId> long_successor;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options);

// Same corpus as raw rows with item names "i<id>", for adapter round trips.
std::vector<RawRow> to_raw_rows(const std::vector<Session>& sessions);

}  // namespace star
