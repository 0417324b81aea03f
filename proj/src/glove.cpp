#include "star/glove.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "star/optimizer.hpp"
#include "star/random.hpp"

namespace star {

double average_interval(std::span<const Session> sessions) {
  long double total = 0.0L;
  std::size_t count = 0;
  for (const auto& s : sessions) {
    for (std::size_t k = 1; k < s.events.size(); ++k) {
      total += static_cast<long double>(s.events[k].timestamp - s.events[k - 1].timestamp);
      ++count;
    }
  }
  if (count == 0) throw DataError("average_interval: no session has two or more events");
  return static_cast<double>(total / static_cast<long double>(count));
}

std::vector<SubSession> split_subsessions(const Session& session, double theta) {
  if (!(theta > 0.0)) throw DataError("split threshold must be positive");
  std::vector<SubSession> parts;
  const auto& ev = session.events;
  if (ev.empty()) return parts;
  parts.push_back({{ev.front().item_id}});
  for (std::size_t k = 1; k < ev.size(); ++k) {
    const auto gap = static_cast<double>(ev[k].timestamp - ev[k - 1].timestamp);
    if (gap > theta) parts.emplace_back();
    parts.back().items.push_back(ev[k].item_id);
  }
  return parts;
}

std::vector<SubSession> split_all_subsessions(std::span<const Session> sessions, double theta) {
  std::vector<SubSession> all;
  for (const auto& s : sessions) {
    auto parts = split_subsessions(s, theta);
    all.insert(all.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
  }
  return all;
}

std::size_t max_session_length(std::span<const Session> sessions) {
  std::size_t longest = 0;
  for (const auto& s : sessions) longest = std::max(longest, s.size());
  return longest;
}

CooccurrenceMatrix::CooccurrenceMatrix(std::size_t n_items, std::vector<CooccurrenceEntry> entries)
    : n_items_(n_items), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
}

double CooccurrenceMatrix::weight(ItemId row, ItemId col) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{row, col},
                             [](const CooccurrenceEntry& e, const std::pair<ItemId, ItemId>& key) {
                               return e.row != key.first ? e.row < key.first : e.col < key.second;
                             });
  if (it == entries_.end() || it->row != row || it->col != col) return 0.0;
  return it->weight;
}

CooccurrenceMatrix build_cooccurrence(std::span<const SubSession> subsessions, std::size_t n_items,
                                      std::size_t window, CooccurrenceWeighting weighting) {
  if (window == 0) throw DataError("co-occurrence window must be at least 1");
  // key = row * n + col with row < col; accumulated in traversal order
  std::unordered_map<std::uint64_t, double> upper;
  for (const auto& sub : subsessions) {
    const auto& items = sub.items;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::size_t last = std::min(items.size() - 1, i + window);
      for (std::size_t j = i + 1; j <= last; ++j) {
        const ItemId a = items[i];
        const ItemId b = items[j];
        if (a == b) continue;
        if (a >= n_items || b >= n_items) throw DataError("co-occurrence: item id out of range");
        const double w = weighting == CooccurrenceWeighting::kInverseDistance
                             ? 1.0 / static_cast<double>(j - i)
                             : 1.0;
        const auto lo = std::min(a, b);
        const auto hi = std::max(a, b);
        upper[static_cast<std::uint64_t>(lo) * n_items + hi] += w;
      }
    }
  }
  std::vector<CooccurrenceEntry> entries;
  entries.reserve(upper.size() * 2);
  for (const auto& [key, w] : upper) {
    const auto lo = static_cast<ItemId>(key / n_items);
    const auto hi = static_cast<ItemId>(key % n_items);
    entries.push_back({lo, hi, w});
    entries.push_back({hi, lo, w});
  }
  return CooccurrenceMatrix(n_items, std::move(entries));
}

Tensor GloveState::embeddings() const {
  Tensor out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += w_tilde[i];
  return out;
}

double glove_weight(double x, double x_max, double alpha) {
  return x < x_max ? std::pow(x / x_max, alpha) : 1.0;
}

namespace {

struct AdaGradState {
  Tensor w_sq;
  Tensor w_tilde_sq;
  Tensor b_sq;
  Tensor b_tilde_sq;
};

double train_range(const CooccurrenceMatrix& x, std::span<const std::size_t> order, const GloveOptions& o,
                   GloveState& s, AdaGradState& g) {
  const std::size_t d = o.dim;
  const auto entries = x.entries();
  double loss = 0.0;
  for (const std::size_t idx : order) {
    const auto& e = entries[idx];
    auto wi = s.w.row(e.row);
    auto wj = s.w_tilde.row(e.col);
    auto gwi = g.w_sq.row(e.row);
    auto gwj = g.w_tilde_sq.row(e.col);
    const double diff = dot(wi, wj) + s.b[e.row] + s.b_tilde[e.col] - std::log(e.weight);
    const double weighted = glove_weight(e.weight, o.x_max, o.alpha) * diff;
    loss += weighted * diff;
    const double step = o.learning_rate * weighted;
    for (std::size_t k = 0; k < d; ++k) {
      const double grad_i = step * wj[k];
      const double grad_j = step * wi[k];
      wi[k] -= grad_i / std::sqrt(gwi[k]);
      wj[k] -= grad_j / std::sqrt(gwj[k]);
      gwi[k] += grad_i * grad_i;
      gwj[k] += grad_j * grad_j;
    }
    s.b[e.row] -= step / std::sqrt(g.b_sq[e.row]);
    s.b_tilde[e.col] -= step / std::sqrt(g.b_tilde_sq[e.col]);
    g.b_sq[e.row] += step * step;
    g.b_tilde_sq[e.col] += step * step;
  }
  return loss;
}

}  // namespace

GloveResult train_glove(const CooccurrenceMatrix& x, const GloveOptions& o) {
  if (x.empty()) throw DataError("train_glove: co-occurrence matrix is empty");
  if (o.dim == 0) throw DataError("train_glove: dimension must be positive");
  const std::size_t n = x.n_items();
  const std::size_t d = o.dim;
  Rng rng(o.seed);

  GloveResult result;
  auto& s = result.state;
  const double scale = 0.5 / static_cast<double>(d);
  auto init = [&](Shape shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-scale, scale);
    return t;
  };
  s.w = init({n, d});
  s.w_tilde = init({n, d});
  s.b = init({n});
  s.b_tilde = init({n});
  AdaGradState g{Tensor({n, d}, 1.0), Tensor({n, d}, 1.0), Tensor({n}, 1.0), Tensor({n}, 1.0)};

  std::vector<std::size_t> order(x.nnz());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t threads = std::max<std::size_t>(1, std::min(o.threads, order.size()));

  for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss = 0.0;
    if (threads == 1) {
      loss = train_range(x, order, o, s, g);
    } else {
      std::vector<double> partial(threads, 0.0);
      std::vector<std::jthread> workers;
      const std::size_t chunk = (order.size() + threads - 1) / threads;
      for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = std::min(order.size(), t * chunk);
        const std::size_t hi = std::min(order.size(), lo + chunk);
        workers.emplace_back([&, t, lo, hi] {
          partial[t] = train_range(x, std::span<const std::size_t>(order).subspan(lo, hi - lo), o, s, g);
        });
      }
      workers.clear();
      loss = std::accumulate(partial.begin(), partial.end(), 0.0);
    }
    if (!std::isfinite(loss)) {
      throw NumericError("GloVe training diverged at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(loss);
  }
  return result;
}

}  // namespace star
