#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "star/glove.hpp"
#include "star/optimizer.hpp"
#include "support.hpp"

using namespace star;
using star::testing::make_session;
using star::testing::random_sessions;

namespace {

// O(L^2) pair counter over every sub-session.
std::map<std::pair<ItemId, ItemId>, double> count_oracle(const std::vector<SubSession>& subs, std::size_t window,
                                                         bool inverse) {
  std::map<std::pair<ItemId, ItemId>, double> x;
  for (const auto& s : subs) {
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      for (std::size_t j = 0; j < s.items.size(); ++j) {
        const std::size_t dist = i > j ? i - j : j - i;
        if (dist == 0 || dist > window || s.items[i] == s.items[j]) continue;
        if (i < j) {
          // count the unordered pair once, mirrored into both cells
          const double w = inverse ? 1.0 / double(dist) : 1.0;
          const auto lo = std::min(s.items[i], s.items[j]), hi = std::max(s.items[i], s.items[j]);
          x[{lo, hi}] += w;
        }
      }
    }
  }
  std::map<std::pair<ItemId, ItemId>, double> both;
  for (const auto& [k, w] : x) {
    both[k] = w;
    both[{k.second, k.first}] = w;
  }
  return both;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

}  // namespace

TEST_SUITE("glove") {

TEST_CASE("average_interval: direct mean, zero case and error") {
  CHECK(average_interval(std::vector{make_session("s", {{0, 0}, {1, 60}, {2, 180}})}) == 90.0);
  CHECK(average_interval(std::vector{make_session("s", {{0, 5}, {1, 5}, {2, 5}})}) == 0.0);
  CHECK_THROWS_AS(average_interval(std::vector{make_session("s", {{0, 5}})}), DataError);
  CHECK_THROWS_AS(average_interval(std::vector<Session>{}), DataError);
}

TEST_CASE("average_interval equals a flatten-and-average oracle") {
  Rng rng(1);
  const auto sessions = random_sessions(rng, 1000, 50, 8, 4000);
  std::vector<double> flat;
  for (const auto& s : sessions)
    for (std::size_t k = 1; k < s.size(); ++k) flat.push_back(double(s.events[k].timestamp - s.events[k - 1].timestamp));
  double sum = 0.0;
  for (double v : flat) sum += v;
  CHECK(average_interval(sessions) == doctest::Approx(sum / double(flat.size())).epsilon(1e-12));
}

TEST_CASE("split_subsessions: hand-enumerated break points") {
  const auto s = make_session("s", {{1, 0}, {2, 10}, {3, 510}, {4, 530}});
  const auto parts = split_subsessions(s, 100.0);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].items == std::vector<ItemId>{1, 2});
  CHECK(parts[1].items == std::vector<ItemId>{3, 4});
}

TEST_CASE("split_subsessions: theta above every gap keeps the session whole") {
  const auto s = make_session("s", {{1, 0}, {2, 10}, {3, 510}, {4, 530}});
  const auto parts = split_subsessions(s, 1e9);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].items == std::vector<ItemId>{1, 2, 3, 4});
  CHECK_THROWS_AS(split_subsessions(s, 0.0), DataError);
}

TEST_CASE("split_subsessions: singleton sub-session after a break is kept and adds nothing") {
  const auto s = make_session("s", {{1, 0}, {2, 10}, {3, 5000}});
  const auto parts = split_subsessions(s, 100.0);
  REQUIRE(parts.size() == 2);
  CHECK(parts[1].items == std::vector<ItemId>{3});
  const auto x = build_cooccurrence(std::vector{parts[1]}, 5, 4);
  CHECK(x.empty());
}

TEST_CASE("split_subsessions: reconstruction and break properties on random sessions") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto sessions = random_sessions(rng, 1, 9, 12, 600);
    const auto& s = sessions[0];
    const double theta = 1.0 + double(rng.below(600));
    const auto parts = split_subsessions(s, theta);
    std::vector<ItemId> joined;
    for (const auto& p : parts) {
      REQUIRE_FALSE(p.items.empty());
      joined.insert(joined.end(), p.items.begin(), p.items.end());
    }
    std::vector<ItemId> items;
    for (const auto& e : s.events) items.push_back(e.item_id);
    REQUIRE(joined == items);
    // every break has gap > theta, every internal gap <= theta
    std::size_t pos = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      for (std::size_t k = 1; k < parts[p].items.size(); ++k) {
        REQUIRE(double(s.events[pos + k].timestamp - s.events[pos + k - 1].timestamp) <= theta);
      }
      pos += parts[p].items.size();
      if (p + 1 < parts.size()) REQUIRE(double(s.events[pos].timestamp - s.events[pos - 1].timestamp) > theta);
    }
  }
}

TEST_CASE("build_cooccurrence: [a,b,c] with 1/distance weights") {
  const auto x = build_cooccurrence(std::vector{SubSession{{0, 1, 2}}}, 3, 2);
  CHECK(x.weight(0, 1) == 1.0);
  CHECK(x.weight(1, 2) == 1.0);
  CHECK(x.weight(0, 2) == 0.5);
  CHECK(x.weight(2, 0) == 0.5);
  CHECK(x.weight(0, 0) == 0.0);
  CHECK(x.nnz() == 6);
  const auto narrow = build_cooccurrence(std::vector{SubSession{{0, 1, 2}}}, 3, 1);
  CHECK(narrow.weight(0, 2) == 0.0);
  const auto uniform = build_cooccurrence(std::vector{SubSession{{0, 1, 2}}}, 3, 2, CooccurrenceWeighting::kUniform);
  CHECK(uniform.weight(0, 2) == 1.0);
}

TEST_CASE("build_cooccurrence equals a double-loop oracle on random corpora") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 2 + rng.below(7);
    std::vector<SubSession> subs(1 + rng.below(5));
    std::size_t events = 0;
    for (auto& s : subs) {
      const auto len = 1 + rng.below(8);
      for (std::size_t k = 0; k < len && events < 50; ++k, ++events) s.items.push_back(ItemId(rng.below(n)));
    }
    const auto window = 1 + rng.below(8);
    const bool inverse = rng.below(2) == 0;
    const auto x = build_cooccurrence(
        subs, n, window, inverse ? CooccurrenceWeighting::kInverseDistance : CooccurrenceWeighting::kUniform);
    const auto oracle = count_oracle(subs, window, inverse);
    REQUIRE(x.nnz() == oracle.size());
    std::size_t i = 0;
    for (const auto& [key, w] : oracle) {
      const auto& e = x.entries()[i++];
      REQUIRE(e.row == key.first);
      REQUIRE(e.col == key.second);
      REQUIRE(e.weight == w);
      REQUIRE(e.weight > 0.0);
      REQUIRE(e.row != e.col);
      REQUIRE(x.weight(e.col, e.row) == e.weight);
    }
  }
}

TEST_CASE("glove_weight") {
  CHECK(glove_weight(100.0, 100.0, 0.75) == 1.0);
  CHECK(glove_weight(500.0, 100.0, 0.75) == 1.0);
  CHECK(glove_weight(10.0, 100.0, 0.75) == doctest::Approx(std::pow(0.1, 0.75)));
}

TEST_CASE("train_glove: a single entry X(a,b) = e fits ln e") {
  std::vector<CooccurrenceEntry> entries{{0, 1, std::numbers::e}, {1, 0, std::numbers::e}};
  CooccurrenceMatrix xe(2, entries);
  GloveOptions o;
  o.dim = 4;
  o.epochs = 4000;
  const auto r = train_glove(xe, o);
  const auto& s = r.state;
  const double fit = dot(s.w.row(0), s.w_tilde.row(1)) + s.b[0] + s.b_tilde[1];
  CHECK(fit == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("train_glove: shape, finiteness, loss decrease and untouched rows") {
  Rng rng(12);
  const auto sessions = random_sessions(rng, 200, 40, 6, 100);
  const auto subs = split_all_subsessions(sessions, 150.0);
  // item 41 never occurs: its rows must keep their initial values
  const auto x = build_cooccurrence(subs, 42, max_session_length(sessions));
  GloveOptions o;
  o.dim = 180;
  o.epochs = 15;
  const auto r = train_glove(x, o);
  const auto table = r.state.embeddings();
  CHECK(table.shape() == Shape{42, 180});
  CHECK(table.all_finite());
  CHECK(r.epoch_loss.size() == 15);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());

  GloveOptions o0 = o;
  o0.epochs = 0;
  const auto init = train_glove(x, o0);
  for (std::size_t k = 0; k < 180; ++k) {
    CHECK(r.state.w.at(41, k) == init.state.w.at(41, k));
    CHECK(std::abs(init.state.w.at(41, k)) <= 0.5 / 180);
  }
}

TEST_CASE("train_glove: deterministic with one thread, lock-free threads stay finite") {
  Rng rng(13);
  const auto sessions = random_sessions(rng, 100, 20, 6, 100);
  const auto x = build_cooccurrence(split_all_subsessions(sessions, 200.0), 20, 6);
  GloveOptions o;
  o.dim = 16;
  o.epochs = 5;
  CHECK(train_glove(x, o).state.embeddings() == train_glove(x, o).state.embeddings());
  o.threads = 4;
  CHECK(train_glove(x, o).state.embeddings().all_finite());
  CHECK_THROWS_AS(train_glove(CooccurrenceMatrix(3, {}), o), DataError);
}

TEST_CASE("train_glove: disjoint item groups cluster") {
  // items 0..9 and 10..19 never share a sub-session
  Rng rng(14);
  std::vector<SubSession> subs;
  for (int s = 0; s < 400; ++s) {
    const ItemId base = s % 2 == 0 ? 0 : 10;
    SubSession sub;
    for (int k = 0; k < 5; ++k) sub.items.push_back(base + ItemId(rng.below(10)));
    subs.push_back(sub);
  }
  const auto x = build_cooccurrence(subs, 20, 5);
  GloveOptions o;
  o.dim = 16;
  o.epochs = 50;
  const auto table = train_glove(x, o).state.embeddings();
  double intra = 0, inter = 0;
  std::size_t n_intra = 0, n_inter = 0;
  for (ItemId a = 0; a < 20; ++a) {
    for (ItemId b = a + 1; b < 20; ++b) {
      const double c = cosine(table.row(a), table.row(b));
      if ((a < 10) == (b < 10)) intra += c, ++n_intra;
      else inter += c, ++n_inter;
    }
  }
  CHECK(intra / double(n_intra) > inter / double(n_inter));
}

}  // TEST_SUITE
