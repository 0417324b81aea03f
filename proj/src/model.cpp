#include "star/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace star {
namespace {

constexpr double kProbFloor = 1e-12;
constexpr const char* kGates[] = {"update", "reset", "candidate"};

struct GruParams {
  const Tensor* w[3];
  const Tensor* b[3];
};

struct GruGrads {
  Tensor* w[3];
  Tensor* b[3];
};

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

void apply_dropout(Tensor& values, Tensor& mask, double rate, bool train, Rng* rng) {
  if (!train || rate == 0.0) {
    mask = Tensor(values.shape(), 1.0);
    return;
  }
  if (!rng) throw std::invalid_argument("dropout in training mode needs a random generator");
  values = dropout(values, rate, true, *rng, &mask);
}

// Runs one GRU direction. `order` lists sequence positions in processing
// order; hidden.row(order[i]) holds the state after consuming order[i].
void gru_forward(const GruParams& p, const Tensor& inputs, std::span<const std::size_t> order, GruCache& cache) {
  const std::size_t m = inputs.rows();
  const std::size_t d = inputs.cols();
  cache.update = Tensor({m, d});
  cache.reset = Tensor({m, d});
  cache.candidate = Tensor({m, d});
  cache.hidden = Tensor({m, d});
  std::vector<double> joined(2 * d);
  std::vector<double> prev(d, 0.0);
  for (const std::size_t k : order) {
    const auto x = inputs.row(k);
    std::copy(prev.begin(), prev.end(), joined.begin());
    std::copy(x.begin(), x.end(), joined.begin() + static_cast<std::ptrdiff_t>(d));
    auto z = cache.update.row(k);
    auto r = cache.reset.row(k);
    vec_mat(joined, *p.w[0], z);
    vec_mat(joined, *p.w[1], r);
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = sigmoid(z[j] + (*p.b[0])[j]);
      r[j] = sigmoid(r[j] + (*p.b[1])[j]);
    }
    for (std::size_t j = 0; j < d; ++j) joined[j] = r[j] * prev[j];
    auto c = cache.candidate.row(k);
    vec_mat(joined, *p.w[2], c);
    auto h = cache.hidden.row(k);
    for (std::size_t j = 0; j < d; ++j) {
      c[j] = std::tanh(c[j] + (*p.b[2])[j]);
      h[j] = (1.0 - z[j]) * prev[j] + z[j] * c[j];
    }
    std::copy(h.begin(), h.end(), prev.begin());
  }
}

// Backpropagates `d_hidden` (m x d, per position) through one direction and
// accumulates input gradients into `d_inputs`.
void gru_backward(const GruParams& p, GruGrads& g, const Tensor& inputs, std::span<const std::size_t> order,
                  const GruCache& cache, const Tensor& d_hidden, Tensor& d_inputs) {
  const std::size_t d = inputs.cols();
  std::vector<double> carry(d, 0.0);
  std::vector<double> prev(d), joined(2 * d), d_joined(2 * d), dh(d), d_prev(d);
  std::vector<double> da_z(d), da_r(d), da_c(d);
  for (std::size_t step = order.size(); step-- > 0;) {
    const std::size_t k = order[step];
    if (step == 0) {
      std::fill(prev.begin(), prev.end(), 0.0);
    } else {
      const auto h = cache.hidden.row(order[step - 1]);
      std::copy(h.begin(), h.end(), prev.begin());
    }
    const auto x = inputs.row(k);
    const auto z = cache.update.row(k);
    const auto r = cache.reset.row(k);
    const auto c = cache.candidate.row(k);
    const auto upstream = d_hidden.row(k);
    for (std::size_t j = 0; j < d; ++j) {
      dh[j] = upstream[j] + carry[j];
      da_z[j] = dh[j] * (c[j] - prev[j]) * z[j] * (1.0 - z[j]);
      da_c[j] = dh[j] * z[j] * (1.0 - c[j] * c[j]);
      d_prev[j] = dh[j] * (1.0 - z[j]);
    }
    // candidate: [r*h_prev, x] W_c + b_c
    for (std::size_t j = 0; j < d; ++j) joined[j] = r[j] * prev[j];
    std::copy(x.begin(), x.end(), joined.begin() + static_cast<std::ptrdiff_t>(d));
    outer_acc(joined, da_c, *g.w[2]);
    axpy(1.0, da_c, g.b[2]->data());
    std::fill(d_joined.begin(), d_joined.end(), 0.0);
    vec_mat_backward_input(da_c, *p.w[2], d_joined);
    auto d_x = d_inputs.row(k);
    for (std::size_t j = 0; j < d; ++j) {
      const double d_rh = d_joined[j];
      da_r[j] = d_rh * prev[j] * r[j] * (1.0 - r[j]);
      d_prev[j] += d_rh * r[j];
      d_x[j] += d_joined[d + j];
    }
    // gates: [h_prev, x] W + b
    std::copy(prev.begin(), prev.end(), joined.begin());
    outer_acc(joined, da_z, *g.w[0]);
    outer_acc(joined, da_r, *g.w[1]);
    axpy(1.0, da_z, g.b[0]->data());
    axpy(1.0, da_r, g.b[1]->data());
    std::fill(d_joined.begin(), d_joined.end(), 0.0);
    vec_mat_backward_input(da_z, *p.w[0], d_joined);
    vec_mat_backward_input(da_r, *p.w[1], d_joined);
    for (std::size_t j = 0; j < d; ++j) {
      d_prev[j] += d_joined[j];
      d_x[j] += d_joined[d + j];
    }
    carry = d_prev;
  }
}

void attend(const Tensor& stream, std::size_t anchor, AttentionAnchor& out) {
  const std::size_t m = stream.rows();
  out.alpha.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) out.alpha[k] = dot(stream.row(k), stream.row(anchor));
  softmax_inplace(out.alpha);
  out.preference = Tensor({stream.cols()});
  for (std::size_t k = 0; k < m; ++k) axpy(out.alpha[k], stream.row(k), out.preference.data());
}

void attend_backward(const Tensor& stream, std::size_t anchor, const AttentionAnchor& a,
                     std::span<const double> d_pref, Tensor& d_stream) {
  const std::size_t m = stream.rows();
  std::vector<double> d_alpha(m);
  for (std::size_t k = 0; k < m; ++k) {
    d_alpha[k] = dot(d_pref, stream.row(k));
    axpy(a.alpha[k], d_pref, d_stream.row(k));
  }
  double inner = 0.0;
  for (std::size_t k = 0; k < m; ++k) inner += a.alpha[k] * d_alpha[k];
  for (std::size_t k = 0; k < m; ++k) {
    const double d_score = a.alpha[k] * (d_alpha[k] - inner);
    // score_k = stream_k . stream_anchor
    axpy(d_score, stream.row(anchor), d_stream.row(k));
    axpy(d_score, stream.row(k), d_stream.row(anchor));
  }
}

}  // namespace

ClockIndex decompose_interval(Seconds delta) {
  if (delta < 0) throw std::invalid_argument("negative time interval " + std::to_string(delta));
  const Seconds clamped = std::min(delta, kMaxEncodedInterval);
  return {static_cast<std::size_t>(clamped / 3600), static_cast<std::size_t>((clamped % 3600) / 60),
          static_cast<std::size_t>(clamped % 60)};
}

namespace param {

std::string time_table(bool before, char unit) {
  const char* name = unit == 'h' ? "hour" : unit == 'm' ? "minute" : "second";
  return std::string("time.") + (before ? "before." : "after.") + name;
}

std::string attention(bool before, bool weight) {
  return std::string("attention.") + (before ? "before." : "after.") + (weight ? "weight" : "bias");
}

std::string gru(bool forward, const char* gate, bool weight) {
  return std::string("gru.") + (forward ? "forward." : "backward.") + gate + (weight ? ".weight" : ".bias");
}

}  // namespace param

SampleView view_of(const SequenceSample& sample) {
  return {sample.prefix, sample.before_intervals, sample.after_intervals, sample.target};
}

std::size_t Batch::length(std::size_t b) const {
  const auto row = std::span<const std::uint8_t>(mask).subspan(b * max_len, max_len);
  return static_cast<std::size_t>(std::count(row.begin(), row.end(), std::uint8_t{1}));
}

SampleView Batch::sample(std::size_t b) const {
  const std::size_t m = length(b);
  const std::size_t off = b * max_len;
  return {std::span<const ItemId>(items).subspan(off, m), std::span<const Interval>(before).subspan(off, m),
          std::span<const Interval>(after).subspan(off, m), targets[b]};
}

Batch make_batch(std::span<const SequenceSample> samples, std::size_t pad_to) {
  Batch batch;
  batch.max_len = pad_to;
  for (const auto& s : samples) batch.max_len = std::max(batch.max_len, s.prefix.size());
  const std::size_t cells = samples.size() * batch.max_len;
  batch.items.assign(cells, 0);
  batch.before.assign(cells, std::nullopt);
  batch.after.assign(cells, std::nullopt);
  batch.mask.assign(cells, 0);
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const auto& s = samples[b];
    if (s.prefix.empty()) throw std::invalid_argument("sample with an empty prefix");
    for (std::size_t k = 0; k < s.prefix.size(); ++k) {
      const std::size_t cell = b * batch.max_len + k;
      batch.items[cell] = s.prefix[k];
      batch.before[cell] = s.before_intervals[k];
      batch.after[cell] = s.after_intervals[k];
      batch.mask[cell] = 1;
    }
    batch.targets.push_back(s.target);
  }
  return batch;
}

StarModel::StarModel(ModelConfig config) : config_(config) {
  const std::size_t n = config_.n_items;
  const std::size_t d = config_.dim;
  if (n == 0 || d == 0) throw std::invalid_argument("model needs a non-empty vocabulary and dimension");
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) throw std::invalid_argument("dropout must lie in [0, 1)");
  params_.add(param::kItemEmbedding, Tensor({n, d}));
  params_.add(param::kScoreBias, Tensor({n}));
  if (config_.time_attention) {
    for (const bool before : {true, false}) {
      params_.add(param::time_table(before, 'h'), Tensor({kHourRows, d}));
      params_.add(param::time_table(before, 'm'), Tensor({kMinuteRows, d}));
      params_.add(param::time_table(before, 's'), Tensor({kSecondRows, d}));
      params_.add(param::attention(before, true), Tensor({3 * d, d}));
      params_.add(param::attention(before, false), Tensor({d}));
    }
  }
  for (const bool forward : {true, false}) {
    if (!forward && config_.share_gru_weights) break;
    for (const char* gate : kGates) {
      params_.add(param::gru(forward, gate, true), Tensor({2 * d, d}));
      params_.add(param::gru(forward, gate, false), Tensor({d}));
    }
  }
  const std::size_t head_in = config_.self_attention ? 6 * d : 2 * d;
  params_.add(param::kHeadWeight, Tensor({head_in, d}));
  params_.add(param::kHeadBias, Tensor({d}));
}

void StarModel::initialize(Rng& rng, const Tensor* item_init) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(config_.dim));
  for (auto& [name, p] : params_) {
    for (auto& v : p.value.data()) v = rng.uniform(-bound, bound);
  }
  if (item_init) {
    auto& table = params_.get(param::kItemEmbedding).value;
    if (item_init->shape() != table.shape()) {
      throw ShapeError("item embedding init has shape " + shape_string(item_init->shape()) + ", expected " +
                       shape_string(table.shape()));
    }
    table = *item_init;
  }
}

double StarModel::loss_value(std::span<const double> probs, ItemId target) const {
  if (config_.loss == LossMode::kCategorical) return -std::log(std::max(probs[target], kProbFloor));
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = clamp_prob(probs[i]);
    total -= i == target ? std::log(p) : std::log(1.0 - p);
  }
  return total;
}

ForwardTrace StarModel::forward(const SampleView& s, bool train, Rng* rng) const {
  const std::size_t m = s.prefix.size();
  const std::size_t d = config_.dim;
  const std::size_t n = config_.n_items;
  if (m == 0) throw std::invalid_argument("forward: empty prefix");
  if (s.before.size() != m || s.after.size() != m) throw std::invalid_argument("forward: interval lengths differ");
  if (s.target >= n) throw std::out_of_range("target id " + std::to_string(s.target) + " outside vocabulary");
  const double rate = config_.dropout;

  ForwardTrace t;
  t.length = m;
  t.items.assign(s.prefix.begin(), s.prefix.end());
  t.target = s.target;

  // Module 1: item and interval embeddings.
  const auto& table = params_.get(param::kItemEmbedding).value;
  t.item_emb = Tensor({m, d});
  for (std::size_t k = 0; k < m; ++k) {
    if (s.prefix[k] >= n) throw std::out_of_range("item id " + std::to_string(s.prefix[k]) + " outside vocabulary");
    const auto row = table.row(s.prefix[k]);
    std::copy(row.begin(), row.end(), t.item_emb.row(k).begin());
  }
  apply_dropout(t.item_emb, t.item_mask, rate, train, rng);

  if (config_.time_attention) {
    auto embed_side = [&](bool before, std::span<const Interval> intervals, std::vector<bool>& present,
                          std::vector<ClockIndex>& idx, Tensor& emb) {
      const auto& hours = params_.get(param::time_table(before, 'h')).value;
      const auto& minutes = params_.get(param::time_table(before, 'm')).value;
      const auto& seconds = params_.get(param::time_table(before, 's')).value;
      present.assign(m, false);
      idx.assign(m, ClockIndex{});
      emb = Tensor({m, 3 * d});
      for (std::size_t k = 0; k < m; ++k) {
        if (!intervals[k]) continue;
        present[k] = true;
        idx[k] = decompose_interval(*intervals[k]);
        auto out = emb.row(k);
        std::copy_n(hours.row(idx[k].hours).begin(), d, out.begin());
        std::copy_n(minutes.row(idx[k].minutes).begin(), d, out.begin() + static_cast<std::ptrdiff_t>(d));
        std::copy_n(seconds.row(idx[k].seconds).begin(), d, out.begin() + static_cast<std::ptrdiff_t>(2 * d));
      }
    };
    embed_side(true, s.before, t.before_present, t.before_idx, t.before_emb);
    embed_side(false, s.after, t.after_present, t.after_idx, t.after_emb);
    apply_dropout(t.before_emb, t.before_emb_mask, rate, train, rng);
    apply_dropout(t.after_emb, t.after_emb_mask, rate, train, rng);
  }

  // Module 2: bidirectional GRU, averaged.
  std::vector<std::size_t> order(m);
  for (std::size_t k = 0; k < m; ++k) order[k] = k;
  auto gru_params = [&](bool forward) {
    const bool fwd = forward || config_.share_gru_weights;
    GruParams p{};
    for (int g = 0; g < 3; ++g) {
      p.w[g] = &params_.get(param::gru(fwd, kGates[g], true)).value;
      p.b[g] = &params_.get(param::gru(fwd, kGates[g], false)).value;
    }
    return p;
  };
  gru_forward(gru_params(true), t.item_emb, order, t.forward_gru);
  std::reverse(order.begin(), order.end());
  gru_forward(gru_params(false), t.item_emb, order, t.backward_gru);
  t.merged = Tensor({m, d});
  for (std::size_t i = 0; i < m * d; ++i) {
    t.merged[i] = 0.5 * (t.forward_gru.hidden[i] + t.backward_gru.hidden[i]);
  }
  apply_dropout(t.merged, t.merged_mask, rate, train, rng);

  // Modules 3 and 4: interval gates applied to h''.
  if (config_.time_attention) {
    auto gate = [&](bool before, const Tensor& emb, Tensor& out) {
      const auto& w = params_.get(param::attention(before, true)).value;
      const auto& b = params_.get(param::attention(before, false)).value;
      out = Tensor({m, d});
      for (std::size_t k = 0; k < m; ++k) {
        auto row = out.row(k);
        vec_mat(emb.row(k), w, row);
        for (std::size_t j = 0; j < d; ++j) row[j] = sigmoid(row[j] + b[j]);
      }
    };
    gate(true, t.before_emb, t.before_gate);
    gate(false, t.after_emb, t.after_gate);
    t.before_gate_dropped = t.before_gate;
    t.after_gate_dropped = t.after_gate;
    apply_dropout(t.before_gate_dropped, t.before_gate_mask, rate, train, rng);
    apply_dropout(t.after_gate_dropped, t.after_gate_mask, rate, train, rng);
    t.after_stream = elementwise_mul(t.after_gate_dropped, t.merged);
    t.before_stream = elementwise_mul(t.before_gate_dropped, t.merged);
  } else {
    t.after_stream = t.merged;
    t.before_stream = t.merged;
  }

  // Module 5: self attention anchored on the first and last steps.
  const std::size_t last = m - 1;
  std::vector<Tensor> parts{Tensor({d}, std::vector<double>(t.after_stream.row(last).begin(), t.after_stream.row(last).end())),
                            Tensor({d}, std::vector<double>(t.before_stream.row(last).begin(), t.before_stream.row(last).end()))};
  if (config_.self_attention) {
    attend(t.after_stream, 0, t.anchors[0]);
    attend(t.after_stream, last, t.anchors[1]);
    attend(t.before_stream, 0, t.anchors[2]);
    attend(t.before_stream, last, t.anchors[3]);
    for (const auto& a : t.anchors) parts.push_back(a.preference);
  }

  // Module 6: linear head, scores against the item table, softmax.
  t.head_input = concat(parts);
  const auto& w3 = params_.get(param::kHeadWeight).value;
  const auto& b3 = params_.get(param::kHeadBias).value;
  t.head_output = Tensor({d});
  vec_mat(t.head_input.data(), w3, t.head_output.data());
  axpy(1.0, b3.data(), t.head_output.data());
  apply_dropout(t.head_output, t.head_mask, rate, train, rng);

  const auto& b4 = params_.get(param::kScoreBias).value;
  t.probabilities.resize(n);
  for (std::size_t j = 0; j < n; ++j) t.probabilities[j] = dot(t.head_output.data(), table.row(j)) + b4[j];
  softmax_inplace(t.probabilities);
  t.loss = loss_value(t.probabilities, t.target);
  return t;
}

void StarModel::backward(const ForwardTrace& t, double scale) {
  const std::size_t m = t.length;
  const std::size_t d = config_.dim;
  const std::size_t n = config_.n_items;
  const auto& probs = t.probabilities;

  // dLoss/dscore
  std::vector<double> d_score(n, 0.0);
  if (config_.loss == LossMode::kCategorical) {
    if (probs[t.target] >= kProbFloor) {
      for (std::size_t j = 0; j < n; ++j) d_score[j] = scale * probs[j];
      d_score[t.target] -= scale;
    }
  } else {
    std::vector<double> d_prob(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (probs[j] <= kProbFloor || probs[j] >= 1.0 - kProbFloor) continue;
      d_prob[j] = j == t.target ? -scale / probs[j] : scale / (1.0 - probs[j]);
    }
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) inner += probs[j] * d_prob[j];
    for (std::size_t j = 0; j < n; ++j) d_score[j] = probs[j] * (d_prob[j] - inner);
  }

  auto& table = params_.get(param::kItemEmbedding);
  auto& b4 = params_.get(param::kScoreBias);
  axpy(1.0, d_score, b4.grad.data());
  Tensor d_head_out({d});
  for (std::size_t j = 0; j < n; ++j) {
    if (d_score[j] == 0.0) continue;
    axpy(d_score[j], table.value.row(j), d_head_out.data());
    axpy(d_score[j], t.head_output.data(), table.grad.row(j));
  }
  for (std::size_t j = 0; j < d; ++j) d_head_out[j] *= t.head_mask[j];

  auto& w3 = params_.get(param::kHeadWeight);
  auto& b3 = params_.get(param::kHeadBias);
  axpy(1.0, d_head_out.data(), b3.grad.data());
  outer_acc(t.head_input.data(), d_head_out.data(), w3.grad);
  Tensor d_head_in(t.head_input.shape());
  vec_mat_backward_input(d_head_out.data(), w3.value, d_head_in.data());

  // Split z back into its parts.
  const std::size_t last = m - 1;
  Tensor d_after_stream({m, d});
  Tensor d_before_stream({m, d});
  axpy(1.0, d_head_in.data().subspan(0, d), d_after_stream.row(last));
  axpy(1.0, d_head_in.data().subspan(d, d), d_before_stream.row(last));
  if (config_.self_attention) {
    const auto pref = [&](std::size_t i) { return std::span<const double>(d_head_in.data()).subspan((2 + i) * d, d); };
    attend_backward(t.after_stream, 0, t.anchors[0], pref(0), d_after_stream);
    attend_backward(t.after_stream, last, t.anchors[1], pref(1), d_after_stream);
    attend_backward(t.before_stream, 0, t.anchors[2], pref(2), d_before_stream);
    attend_backward(t.before_stream, last, t.anchors[3], pref(3), d_before_stream);
  }

  Tensor d_merged({m, d});
  if (config_.time_attention) {
    auto gate_backward = [&](bool before, const Tensor& d_stream, const Tensor& gate, const Tensor& gate_dropped,
                             const Tensor& gate_mask, const Tensor& emb, const Tensor& emb_mask,
                             const std::vector<bool>& present, const std::vector<ClockIndex>& idx) {
      auto& w = params_.get(param::attention(before, true));
      auto& b = params_.get(param::attention(before, false));
      auto& hours = params_.get(param::time_table(before, 'h'));
      auto& minutes = params_.get(param::time_table(before, 'm'));
      auto& seconds = params_.get(param::time_table(before, 's'));
      std::vector<double> d_pre(d), d_emb(3 * d);
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
          const std::size_t i = k * d + j;
          d_merged[i] += d_stream[i] * gate_dropped[i];
          const double d_gate = d_stream[i] * t.merged[i] * gate_mask[i];
          d_pre[j] = d_gate * gate[i] * (1.0 - gate[i]);
        }
        axpy(1.0, d_pre, b.grad.data());
        outer_acc(emb.row(k), d_pre, w.grad);
        if (!present[k]) continue;
        std::fill(d_emb.begin(), d_emb.end(), 0.0);
        vec_mat_backward_input(d_pre, w.value, d_emb);
        const auto mask = emb_mask.row(k);
        for (std::size_t j = 0; j < 3 * d; ++j) d_emb[j] *= mask[j];
        axpy(1.0, std::span<const double>(d_emb).subspan(0, d), hours.grad.row(idx[k].hours));
        axpy(1.0, std::span<const double>(d_emb).subspan(d, d), minutes.grad.row(idx[k].minutes));
        axpy(1.0, std::span<const double>(d_emb).subspan(2 * d, d), seconds.grad.row(idx[k].seconds));
      }
    };
    gate_backward(false, d_after_stream, t.after_gate, t.after_gate_dropped, t.after_gate_mask, t.after_emb,
                  t.after_emb_mask, t.after_present, t.after_idx);
    gate_backward(true, d_before_stream, t.before_gate, t.before_gate_dropped, t.before_gate_mask, t.before_emb,
                  t.before_emb_mask, t.before_present, t.before_idx);
  } else {
    for (std::size_t i = 0; i < m * d; ++i) d_merged[i] = d_after_stream[i] + d_before_stream[i];
  }

  // h'' = dropout((h + h') / 2)
  Tensor d_hidden({m, d});
  for (std::size_t i = 0; i < m * d; ++i) d_hidden[i] = 0.5 * d_merged[i] * t.merged_mask[i];

  Tensor d_inputs({m, d});
  std::vector<std::size_t> order(m);
  for (std::size_t k = 0; k < m; ++k) order[k] = k;
  auto run_direction = [&](bool forward, const GruCache& cache) {
    const bool fwd = forward || config_.share_gru_weights;
    GruParams p{};
    GruGrads g{};
    for (int gate = 0; gate < 3; ++gate) {
      auto& w = params_.get(param::gru(fwd, kGates[gate], true));
      auto& b = params_.get(param::gru(fwd, kGates[gate], false));
      p.w[gate] = &w.value;
      p.b[gate] = &b.value;
      g.w[gate] = &w.grad;
      g.b[gate] = &b.grad;
    }
    gru_backward(p, g, t.item_emb, order, cache, d_hidden, d_inputs);
  };
  run_direction(true, t.forward_gru);
  std::reverse(order.begin(), order.end());
  run_direction(false, t.backward_gru);

  for (std::size_t k = 0; k < m; ++k) {
    auto d_row = d_inputs.row(k);
    const auto mask = t.item_mask.row(k);
    auto g_row = table.grad.row(t.items[k]);
    for (std::size_t j = 0; j < d; ++j) g_row[j] += d_row[j] * mask[j];
  }
}

std::vector<double> StarModel::predict(std::span<const ItemId> prefix, std::span<const Interval> before,
                                       std::span<const Interval> after) const {
  return forward(SampleView{prefix, before, after, 0}, false, nullptr).probabilities;
}

double StarModel::accumulate_batch(const Batch& batch, bool train, Rng* rng) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto trace = forward(batch.sample(b), train, rng);
    total += trace.loss;
    backward(trace, scale);
  }
  return total * scale;
}

std::vector<double> StarModel::sample_losses(const Batch& batch) const {
  std::vector<double> losses;
  losses.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) losses.push_back(forward(batch.sample(b)).loss);
  return losses;
}

}  // namespace star
