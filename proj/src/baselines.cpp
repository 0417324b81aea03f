#include "star/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace star {

std::vector<double> item_counts(std::span<const Session> train, std::size_t n_items) {
  std::vector<double> counts(n_items, 0.0);
  for (const auto& s : train) {
    for (const auto& e : s.events) counts.at(e.item_id) += 1.0;
  }
  return counts;
}

PopScorer::PopScorer(std::span<const Session> train, std::size_t n_items) : counts_(item_counts(train, n_items)) {}

std::vector<double> PopScorer::scores(const SequenceSample&) const { return counts_; }

SessionPopScorer::SessionPopScorer(std::span<const Session> train, std::size_t n_items)
    : counts_(item_counts(train, n_items)) {
  const double top = counts_.empty() ? 0.0 : *std::max_element(counts_.begin(), counts_.end());
  session_weight_ = top + 1.0;
}

std::vector<double> SessionPopScorer::scores(const SequenceSample& sample) const {
  auto scores = counts_;
  for (const ItemId id : sample.prefix) scores.at(id) += session_weight_;
  return scores;
}

ItemKnnScorer::ItemKnnScorer(std::span<const Session> train, std::size_t n_items, IncidenceMode mode)
    : n_items_(n_items), norm_sq_(n_items, 0.0), neighbours_(n_items) {
  auto& norm_sq = norm_sq_;
  std::unordered_map<std::uint64_t, double> products;
  for (const auto& s : train) {
    std::map<ItemId, double> incidence;
    for (const auto& e : s.events) {
      if (e.item_id >= n_items) throw std::out_of_range("Item-KNN: item id outside vocabulary");
      incidence[e.item_id] = mode == IncidenceMode::kBinary ? 1.0 : incidence[e.item_id] + 1.0;
    }
    for (auto a = incidence.begin(); a != incidence.end(); ++a) {
      norm_sq[a->first] += a->second * a->second;
      for (auto b = std::next(a); b != incidence.end(); ++b) {
        products[static_cast<std::uint64_t>(a->first) * n_items + b->first] += a->second * b->second;
      }
    }
  }
  for (const auto& [key, dot] : products) {
    const auto a = static_cast<ItemId>(key / n_items);
    const auto b = static_cast<ItemId>(key % n_items);
    const double sim = dot / std::sqrt(norm_sq[a] * norm_sq[b]);
    neighbours_[a].emplace_back(b, sim);
    neighbours_[b].emplace_back(a, sim);
  }
  for (auto& list : neighbours_) std::sort(list.begin(), list.end());
}

double ItemKnnScorer::similarity(ItemId a, ItemId b) const {
  if (a == b) return norm_sq_.at(a) > 0.0 ? 1.0 : 0.0;
  const auto& list = neighbours_.at(a);
  auto it = std::lower_bound(list.begin(), list.end(), std::pair<ItemId, double>{b, -1.0});
  return it != list.end() && it->first == b ? it->second : 0.0;
}

std::vector<double> ItemKnnScorer::scores(const SequenceSample& sample) const {
  std::vector<double> scores(n_items_, 0.0);
  std::vector<ItemId> distinct(sample.prefix.begin(), sample.prefix.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (const ItemId i : distinct) {
    for (const auto& [j, sim] : neighbours_.at(i)) scores[j] += sim;
  }
  return scores;
}

}  // namespace star
