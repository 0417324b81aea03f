#pragma once

#include <span>
#include <string>
#include <vector>

#include "star/evaluation.hpp"
#include "star/model.hpp"
#include "star/optimizer.hpp"

namespace star {

// Forward and backward over the batch, one Adam update, grads cleared.
// Returns the mean batch loss; throws NumericError naming `batch_id` when
// the loss or a gradient is not finite.
double train_step(StarModel& model, const Batch& batch, const AdamOptions& adam, Rng& rng, std::size_t batch_id = 0);

// One pass over `samples` in an order shuffled by `rng`. Returns the mean
// of the batch losses.
double train_epoch(StarModel& model, std::span<const SequenceSample> samples, std::size_t batch_size,
                   const AdamOptions& adam, Rng& rng);

class StarScorer : public Scorer {
 public:
  StarScorer(const StarModel& model, std::string label = "STAR") : model_(model), label_(std::move(label)) {}
  std::string name() const override { return label_; }
  std::vector<double> scores(const SequenceSample& sample) const override;

 private:
  const StarModel& model_;
  std::string label_;
};

}  // namespace star
