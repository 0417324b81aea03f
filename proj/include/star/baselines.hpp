#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "star/data.hpp"
#include "star/evaluation.hpp"

namespace star {

// Global click counts over the train sessions.
std::vector<double> item_counts(std::span<const Session> train, std::size_t n_items);

// Recommends the globally most clicked items regardless of the session.
class PopScorer : public Scorer {
 public:
  PopScorer(std::span<const Session> train, std::size_t n_items);
  std::string name() const override { return "POP"; }
  std::vector<double> scores(const SequenceSample& sample) const override;

 private:
  std::vector<double> counts_;
};

// Items of the current session first (by in-session count), then the rest
// by global popularity.
class SessionPopScorer : public Scorer {
 public:
  SessionPopScorer(std::span<const Session> train, std::size_t n_items);
  std::string name() const override { return "S-POP"; }
  std::vector<double> scores(const SequenceSample& sample) const override;

  // Multiplier on the in-session count; exceeds every global count.
  double session_weight() const { return session_weight_; }

 private:
  std::vector<double> counts_;
  double session_weight_ = 1.0;
};

enum class IncidenceMode {
  kBinary,  // item present in a train session or not
  kCounts,  // number of clicks on the item in that session
};

// Cosine similarity between items over train-session incidence vectors;
// an item's score is the summed similarity to the distinct prefix items,
// excluding the item's similarity to itself.
class ItemKnnScorer : public Scorer {
 public:
  ItemKnnScorer(std::span<const Session> train, std::size_t n_items, IncidenceMode mode = IncidenceMode::kBinary);
  std::string name() const override { return "Item-KNN"; }
  std::vector<double> scores(const SequenceSample& sample) const override;

  double similarity(ItemId a, ItemId b) const;
  // Non-zero neighbours of an item, sorted by id (self excluded).
  std::span<const std::pair<ItemId, double>> neighbours(ItemId item) const { return neighbours_[item]; }

 private:
  std::size_t n_items_;
  std::vector<double> norm_sq_;
  std::vector<std::vector<std::pair<ItemId, double>>> neighbours_;
};

}  // namespace star
