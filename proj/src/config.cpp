#include "star/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace star {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || value.empty()) {
    throw ConfigError("config: bad value '" + value + "' for '" + key + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || !std::isfinite(out)) {
    throw ConfigError("config: bad value '" + value + "' for '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: bad boolean '" + value + "' for '" + key + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define STAR_STR(name) \
  Field{#name, [](const RunConfig& c) { return c.name; }, \
        [](RunConfig& c, const std::string&, const std::string& v) { c.name = v; }}
#define STAR_SIZE(name) \
  Field{#name, [](const RunConfig& c) { return std::to_string(c.name); }, \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.name = parse_number<std::size_t>(k, v); }}
#define STAR_REAL(name) \
  Field{#name, [](const RunConfig& c) { return format_double(c.name); }, \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.name = parse_real(k, v); }}
#define STAR_BOOL(name) \
  Field{#name, [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.name = parse_bool(k, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      STAR_STR(dataset),
      STAR_STR(fraction),
      STAR_STR(data_dir),
      STAR_STR(out_dir),
      STAR_SIZE(embedding_dim),
      STAR_SIZE(glove_epochs),
      STAR_SIZE(glove_window),
      STAR_STR(glove_weighting),
      STAR_SIZE(glove_threads),
      STAR_REAL(theta_multiplier),
      STAR_SIZE(epochs),
      STAR_REAL(lr),
      STAR_REAL(lr_decay),
      STAR_SIZE(decay_step),
      STAR_SIZE(batch_size),
      STAR_REAL(dropout),
      STAR_REAL(l2),
      STAR_REAL(validation_fraction),
      STAR_SIZE(k),
      Field{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      STAR_BOOL(self_attention),
      STAR_BOOL(time_attention),
      STAR_BOOL(share_gru_weights),
      STAR_STR(loss),
      STAR_BOOL(deterministic),
      Field{"precision", [](const RunConfig& c) { return std::to_string(c.precision); },
            [](RunConfig& c, const std::string& k, const std::string& v) { c.precision = parse_number<int>(k, v); }},
  };
  return all;
}

#undef STAR_STR
#undef STAR_SIZE
#undef STAR_REAL
#undef STAR_BOOL

void validate(const RunConfig& c) {
  if (c.fraction != "1/64" && c.fraction != "1/4" && c.fraction != "full") {
    throw ConfigError("config: fraction must be 1/64, 1/4 or full");
  }
  if (c.loss != "categorical" && c.loss != "literal") throw ConfigError("config: loss must be categorical or literal");
  if (c.glove_weighting != "inverse" && c.glove_weighting != "uniform") {
    throw ConfigError("config: glove_weighting must be inverse or uniform");
  }
  if (c.precision != 32 && c.precision != 64) throw ConfigError("config: precision must be 32 or 64");
  if (c.embedding_dim == 0 || c.batch_size == 0 || c.decay_step == 0) {
    throw ConfigError("config: embedding_dim, batch_size and decay_step must be positive");
  }
  if (c.dropout < 0.0 || c.dropout >= 1.0) throw ConfigError("config: dropout must lie in [0, 1)");
  if (c.theta_multiplier <= 0.0) throw ConfigError("config: theta_multiplier must be positive");
}

}  // namespace

RunConfig RunConfig::defaults_for(const std::string& dataset, const std::string& fraction) {
  RunConfig c;
  c.dataset = dataset;
  c.fraction = fraction;
  if (dataset == "diginetica") {
    c.fraction = "full";
    c.batch_size = 512;
    c.dropout = 0.3;
    c.decay_step = 6;
  } else if (fraction == "1/4") {
    c.batch_size = 512;
    c.dropout = 0.1;
    c.decay_step = 4;
  }
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, key, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

RunConfig RunConfig::from_text(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate(base);
  return base;
}

RunConfig RunConfig::from_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str(), std::move(base));
}

RunConfig RunConfig::from_text(const std::string& text) { return from_text(text, RunConfig{}); }
RunConfig RunConfig::from_file(const std::string& path) { return from_file(path, RunConfig{}); }

double RunConfig::fraction_value() const {
  if (fraction == "1/64") return 1.0 / 64.0;
  if (fraction == "1/4") return 0.25;
  return 1.0;
}

LossMode RunConfig::loss_mode() const { return loss == "literal" ? LossMode::kLiteral : LossMode::kCategorical; }

Precision RunConfig::precision_mode() const { return precision == 64 ? Precision::kF64 : Precision::kF32; }

CooccurrenceWeighting RunConfig::weighting() const {
  return glove_weighting == "uniform" ? CooccurrenceWeighting::kUniform : CooccurrenceWeighting::kInverseDistance;
}

std::string RunConfig::model_label() const {
  if (!self_attention && !time_attention) return "STAR_V0";
  if (!self_attention) return "STAR_V1";
  if (!time_attention) return "STAR_V2";
  return "STAR";
}

std::string RunConfig::dataset_label() const {
  return dataset == "yoochoose" && fraction != "full" ? dataset + "-" + fraction : dataset;
}

ModelConfig model_config(const RunConfig& c, std::size_t n_items) {
  ModelConfig m;
  m.n_items = n_items;
  m.dim = c.embedding_dim;
  m.self_attention = c.self_attention;
  m.time_attention = c.time_attention;
  m.share_gru_weights = c.share_gru_weights;
  m.dropout = c.dropout;
  m.loss = c.loss_mode();
  return m;
}

GloveOptions glove_options(const RunConfig& c) {
  GloveOptions o;
  o.dim = c.embedding_dim;
  o.epochs = c.glove_epochs;
  o.seed = c.seed;
  o.threads = c.deterministic ? 1 : std::max<std::size_t>(1, c.glove_threads);
  return o;
}

double learning_rate_for_epoch(const RunConfig& c, std::size_t epoch) {
  return c.lr * std::pow(c.lr_decay, static_cast<double>(epoch / c.decay_step));
}

}  // namespace star
