#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "star/data.hpp"
#include "star/tensor.hpp"

namespace star {

// A maximal run of a session with no internal gap longer than the split
// threshold.
struct SubSession {
  std::vector<ItemId> items;

  friend bool operator==(const SubSession&, const SubSession&) = default;
};

// Mean of every adjacent-event gap across the sessions. Throws DataError
// when no session has two events.
double average_interval(std::span<const Session> sessions);

// Breaks the session after every adjacent pair whose gap exceeds `theta`.
std::vector<SubSession> split_subsessions(const Session& session, double theta);
std::vector<SubSession> split_all_subsessions(std::span<const Session> sessions, double theta);

std::size_t max_session_length(std::span<const Session> sessions);

enum class CooccurrenceWeighting {
  kInverseDistance,  // 1/t for a pair t positions apart
  kUniform,          // 1 for every pair inside the window
};

struct CooccurrenceEntry {
  ItemId row = 0;
  ItemId col = 0;
  double weight = 0.0;

  friend bool operator==(const CooccurrenceEntry&, const CooccurrenceEntry&) = default;
};

// Sparse symmetric co-occurrence weights. Both (i, j) and (j, i) are stored,
// sorted by (row, col); the diagonal is never stored.
class CooccurrenceMatrix {
 public:
  CooccurrenceMatrix() = default;
  CooccurrenceMatrix(std::size_t n_items, std::vector<CooccurrenceEntry> entries);

  std::size_t n_items() const { return n_items_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const CooccurrenceEntry> entries() const { return entries_; }

  // 0 when the pair never co-occurred.
  double weight(ItemId row, ItemId col) const;

 private:
  std::size_t n_items_ = 0;
  std::vector<CooccurrenceEntry> entries_;
};

CooccurrenceMatrix build_cooccurrence(
    std::span<const SubSession> subsessions, std::size_t n_items, std::size_t window,
    CooccurrenceWeighting weighting = CooccurrenceWeighting::kInverseDistance);

struct GloveOptions {
  std::size_t dim = 180;
  std::size_t epochs = 100;
  double x_max = 100.0;
  double alpha = 0.75;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
  // 1 keeps updates sequential and reproducible; more threads update shared
  // parameters without locks.
  std::size_t threads = 1;
};

struct GloveState {
  Tensor w;        // n x d
  Tensor w_tilde;  // n x d
  Tensor b;        // n
  Tensor b_tilde;  // n

  // w + w_tilde, the table handed to the recommender.
  Tensor embeddings() const;
};

struct GloveResult {
  GloveState state;
  std::vector<double> epoch_loss;  // weighted squared error per epoch
};

double glove_weight(double x, double x_max, double alpha);

// Fits the weighted least-squares objective over the observed entries with
// per-coordinate AdaGrad. Throws NumericError if the loss stops being finite.
GloveResult train_glove(const CooccurrenceMatrix& x, const GloveOptions& options);

}  // namespace star
