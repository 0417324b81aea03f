#include "star/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace star {

std::vector<ItemId> rank_items(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) throw std::invalid_argument("rank_items: k exceeds the number of items");
  std::vector<ItemId> ids(scores.size());
  std::iota(ids.begin(), ids.end(), ItemId{0});
  auto better = [&](ItemId a, ItemId b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), better);
  ids.resize(k);
  return ids;
}

std::size_t target_rank(std::span<const double> scores, ItemId target) {
  const double t = scores[target];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > t || (scores[j] == t && j < target)) ++rank;
  }
  return rank;
}

double recall_at_k(std::span<const std::optional<std::size_t>> ranks, std::size_t k) {
  if (ranks.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : ranks) hits += r && *r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr_at_k(std::span<const std::optional<std::size_t>> ranks, std::size_t k) {
  if (ranks.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : ranks) {
    if (r && *r <= k) total += 1.0 / static_cast<double>(*r);
  }
  return total / static_cast<double>(ranks.size());
}

MetricsReport evaluate(const Scorer& scorer, std::span<const SequenceSample> samples, std::size_t k,
                       const std::string& dataset) {
  std::vector<std::optional<std::size_t>> ranks;
  ranks.reserve(samples.size());
  for (const auto& s : samples) {
    const auto scores = scorer.scores(s);
    ranks.emplace_back(target_rank(scores, s.target));
  }
  return {scorer.name(), dataset, k, recall_at_k(ranks, k), mrr_at_k(ranks, k), samples.size()};
}

void write_report(std::ostream& out, std::span<const MetricsReport> reports) {
  out << "model\tdataset\tk\trecall\tmrr\tn_samples\n";
  char buf[64];
  for (const auto& r : reports) {
    out << r.model << '\t' << r.dataset << '\t' << r.k << '\t';
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g", r.recall, r.mrr);
    out << buf << '\t' << r.n_samples << '\n';
  }
}

std::vector<MetricsReport> read_report(std::istream& in) {
  std::vector<MetricsReport> reports;
  std::string line;
  if (!std::getline(in, line) || line != "model\tdataset\tk\trecall\tmrr\tn_samples") {
    throw std::runtime_error("report: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    MetricsReport r;
    std::string k, recall, mrr, n;
    if (!std::getline(row, r.model, '\t') || !std::getline(row, r.dataset, '\t') || !std::getline(row, k, '\t') ||
        !std::getline(row, recall, '\t') || !std::getline(row, mrr, '\t') || !std::getline(row, n)) {
      throw std::runtime_error("report: malformed row '" + line + "'");
    }
    r.k = std::stoul(k);
    r.recall = std::stod(recall);
    r.mrr = std::stod(mrr);
    r.n_samples = std::stoul(n);
    reports.push_back(std::move(r));
  }
  return reports;
}

void print_summary(std::ostream& out, std::span<const MetricsReport> reports) {
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-10s %s  Recall@%zu = %.2f%%  MRR@%zu = %.2f%%  (%zu samples)\n", r.model.c_str(),
                  r.dataset.c_str(), r.k, 100.0 * r.recall, r.k, 100.0 * r.mrr, r.n_samples);
    out << buf;
  }
}

}  // namespace star
