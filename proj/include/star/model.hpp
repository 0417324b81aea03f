#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "star/data.hpp"
#include "star/optimizer.hpp"
#include "star/random.hpp"
#include "star/tensor.hpp"

namespace star {

enum class LossMode {
  kCategorical,  // -ln p(target)
  kLiteral,      // -sum_i [y_i ln p_i + (1 - y_i) ln(1 - p_i)]
};

struct ModelConfig {
  std::size_t n_items = 0;
  std::size_t dim = 180;
  bool self_attention = true;
  bool time_attention = true;
  bool share_gru_weights = false;
  double dropout = 0.0;
  LossMode loss = LossMode::kCategorical;
};

// Interval decomposed into hour/minute/second table rows. Gaps of a day or
// more saturate at 23:59:59.
struct ClockIndex {
  std::size_t hours = 0;
  std::size_t minutes = 0;
  std::size_t seconds = 0;

  friend bool operator==(const ClockIndex&, const ClockIndex&) = default;
};

inline constexpr std::size_t kHourRows = 24;
inline constexpr std::size_t kMinuteRows = 60;
inline constexpr std::size_t kSecondRows = 60;
inline constexpr Seconds kMaxEncodedInterval = 23 * 3600 + 59 * 60 + 59;

ClockIndex decompose_interval(Seconds delta);

// Parameter names.
namespace param {
inline constexpr const char* kItemEmbedding = "item_embedding";
inline constexpr const char* kScoreBias = "score.bias";
inline constexpr const char* kHeadWeight = "head.weight";
inline constexpr const char* kHeadBias = "head.bias";
std::string time_table(bool before, char unit);  // unit: 'h', 'm' or 's'
std::string attention(bool before, bool weight);
std::string gru(bool forward, const char* gate, bool weight);  // gate: update|reset|candidate
}  // namespace param

// Non-owning view of one training or inference instance.
struct SampleView {
  std::span<const ItemId> prefix;
  std::span<const Interval> before;
  std::span<const Interval> after;
  ItemId target = 0;
};

SampleView view_of(const SequenceSample& sample);

// Samples padded to a common length. Positions with mask 0 are padding and
// never read by the model.
struct Batch {
  std::size_t max_len = 0;
  std::vector<ItemId> items;
  std::vector<Interval> before;
  std::vector<Interval> after;
  std::vector<std::uint8_t> mask;
  std::vector<ItemId> targets;

  std::size_t size() const { return targets.size(); }
  std::size_t length(std::size_t b) const;
  SampleView sample(std::size_t b) const;
};

Batch make_batch(std::span<const SequenceSample> samples, std::size_t pad_to = 0);

struct GruCache {
  Tensor update;     // m x d
  Tensor reset;      // m x d
  Tensor candidate;  // m x d
  Tensor hidden;     // m x d, indexed by sequence position
};

struct AttentionAnchor {
  std::vector<double> alpha;  // m, sums to 1
  Tensor preference;          // d
};

// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardTrace {
  std::size_t length = 0;
  std::vector<ItemId> items;
  ItemId target = 0;

  Tensor item_emb;                    // m x d after dropout
  Tensor item_mask;                   // m x d
  std::vector<bool> before_present;   // m
  std::vector<bool> after_present;    // m
  std::vector<ClockIndex> before_idx;
  std::vector<ClockIndex> after_idx;
  Tensor before_emb;                  // m x 3d after dropout (E^B)
  Tensor after_emb;                   // m x 3d after dropout (E^A)
  Tensor before_emb_mask;
  Tensor after_emb_mask;

  GruCache forward_gru;
  GruCache backward_gru;
  Tensor merged;        // m x d, h'' after dropout
  Tensor merged_mask;

  Tensor before_gate;   // m x d, AW^B before dropout
  Tensor after_gate;    // m x d, AW^A before dropout
  Tensor before_gate_dropped;
  Tensor after_gate_dropped;
  Tensor before_gate_mask;
  Tensor after_gate_mask;

  Tensor after_stream;  // m x d, h^A
  Tensor before_stream; // m x d, h^B

  // Anchors in order: A first, A last, B first, B last.
  std::array<AttentionAnchor, 4> anchors;

  Tensor head_input;    // z: 6d (2d without self attention)
  Tensor head_output;   // z' after dropout
  Tensor head_mask;
  std::vector<double> probabilities;  // n
  double loss = 0.0;
};

class StarModel {
 public:
  explicit StarModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // Uniform(-1/sqrt(d), 1/sqrt(d)) for every parameter in name order; the
  // item table is then overwritten by `item_init` when given.
  void initialize(Rng& rng, const Tensor* item_init = nullptr);

  // `rng` is required when `train` is set and dropout is non-zero.
  ForwardTrace forward(const SampleView& sample, bool train = false, Rng* rng = nullptr) const;
  // Accumulates scale * dLoss/dparam into the parameter grads.
  void backward(const ForwardTrace& trace, double scale = 1.0);

  std::vector<double> predict(std::span<const ItemId> prefix, std::span<const Interval> before,
                              std::span<const Interval> after) const;

  // Mean loss over the batch with grads accumulated (scaled by 1/batch size).
  double accumulate_batch(const Batch& batch, bool train, Rng* rng);
  // Per-sample losses in evaluation mode without touching grads.
  std::vector<double> sample_losses(const Batch& batch) const;

  double loss_value(std::span<const double> probabilities, ItemId target) const;

 private:
  ModelConfig config_;
  ParameterStore params_;
};

}  // namespace star
