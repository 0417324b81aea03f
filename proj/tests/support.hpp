#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "star/data.hpp"
#include "star/random.hpp"

namespace star::testing {

// Sessions with ids "s0000".. and random items/gaps; lengths in [1, max_len].
inline std::vector<Session> random_sessions(Rng& rng, std::size_t n_sessions, std::size_t n_items,
                                            std::size_t max_len, Seconds max_gap, Seconds start = 1'400'000'000) {
  std::vector<Session> out;
  for (std::size_t s = 0; s < n_sessions; ++s) {
    char id[16];
    std::snprintf(id, sizeof id, "s%04zu", s);
    Session session{id, {}};
    Seconds t = start + static_cast<Seconds>(rng.below(30 * 86400));
    const auto len = 1 + rng.below(max_len);
    for (std::size_t k = 0; k < len; ++k) {
      if (k > 0) t += static_cast<Seconds>(rng.below(static_cast<std::uint64_t>(max_gap) + 1));
      session.events.push_back({static_cast<ItemId>(rng.below(n_items)), t});
    }
    out.push_back(std::move(session));
  }
  return out;
}

inline Session make_session(const std::string& id, std::vector<std::pair<ItemId, Seconds>> events) {
  Session s{id, {}};
  for (auto [item, t] : events) s.events.push_back({item, t});
  return s;
}

// Empty directory under the system temp dir, recreated on every call.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("star_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

}  // namespace star::testing
