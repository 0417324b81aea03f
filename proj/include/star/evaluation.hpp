#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "star/data.hpp"

namespace star {

// Top-k ids by descending score; ties go to the smaller id.
std::vector<ItemId> rank_items(std::span<const double> scores, std::size_t k);

// 1 + #(strictly higher scores) + #(equal scores with a smaller id).
std::size_t target_rank(std::span<const double> scores, ItemId target);

// Fraction of samples whose rank is at most k; absent ranks count as misses.
double recall_at_k(std::span<const std::optional<std::size_t>> ranks, std::size_t k);
// Mean of 1/rank over samples, counting 0 for ranks beyond k or absent.
double mrr_at_k(std::span<const std::optional<std::size_t>> ranks, std::size_t k);

struct MetricsReport {
  std::string model;
  std::string dataset;
  std::size_t k = 20;
  double recall = 0.0;
  double mrr = 0.0;
  std::size_t n_samples = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Anything that scores every item for a session prefix.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> scores(const SequenceSample& sample) const = 0;
};

MetricsReport evaluate(const Scorer& scorer, std::span<const SequenceSample> samples, std::size_t k,
                       const std::string& dataset);

// Tab-separated: model, dataset, k, recall, mrr, n_samples (with header).
void write_report(std::ostream& out, std::span<const MetricsReport> reports);
std::vector<MetricsReport> read_report(std::istream& in);
void print_summary(std::ostream& out, std::span<const MetricsReport> reports);

}  // namespace star
