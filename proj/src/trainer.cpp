#include "star/trainer.hpp"

#include <cmath>
#include <numeric>

namespace star {

double train_step(StarModel& model, const Batch& batch, const AdamOptions& adam, Rng& rng, std::size_t batch_id) {
  auto& params = model.params();
  params.zero_grads();
  const double loss = model.accumulate_batch(batch, true, &rng);
  if (!std::isfinite(loss)) {
    params.zero_grads();
    throw NumericError("training diverged: non-finite loss in batch " + std::to_string(batch_id));
  }
  try {
    adam_step(params, adam);
  } catch (const NumericError& e) {
    params.zero_grads();
    throw NumericError(std::string(e.what()) + " (batch " + std::to_string(batch_id) + ")");
  }
  params.zero_grads();
  return loss;
}

double train_epoch(StarModel& model, std::span<const SequenceSample> samples, std::size_t batch_size,
                   const AdamOptions& adam, Rng& rng) {
  if (samples.empty()) throw std::invalid_argument("train_epoch: no samples");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  double total = 0.0;
  std::size_t batches = 0;
  std::vector<SequenceSample> chunk;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    chunk.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) chunk.push_back(samples[order[i]]);
    total += train_step(model, make_batch(chunk), adam, rng, batches);
    ++batches;
  }
  return total / static_cast<double>(batches);
}

std::vector<double> StarScorer::scores(const SequenceSample& sample) const {
  return model_.predict(sample.prefix, sample.before_intervals, sample.after_intervals);
}

}  // namespace star
