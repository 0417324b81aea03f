#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "star/glove.hpp"
#include "star/model.hpp"
#include "star/optimizer.hpp"

namespace star {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every knob of a pipeline run. Defaults are the Yoochoose 1/64 settings;
// see defaults_for() for the other datasets.
struct RunConfig {
  std::string dataset = "yoochoose";
  std::string fraction = "1/64";  // 1/64, 1/4 or full
  std::string data_dir = "data";
  std::string out_dir = "run";

  std::size_t embedding_dim = 180;
  std::size_t glove_epochs = 100;
  std::size_t glove_window = 0;  // 0: longest train session
  std::string glove_weighting = "inverse";  // inverse or uniform
  std::size_t glove_threads = 1;
  double theta_multiplier = 2.0;

  std::size_t epochs = 12;
  double lr = 0.001;
  double lr_decay = 0.1;
  std::size_t decay_step = 4;
  std::size_t batch_size = 64;
  double dropout = 0.2;
  double l2 = 1e-6;
  double validation_fraction = 0.10;
  std::size_t k = 20;

  std::uint64_t seed = 42;
  bool self_attention = true;
  bool time_attention = true;
  bool share_gru_weights = false;
  std::string loss = "categorical";  // categorical or literal
  bool deterministic = true;
  int precision = 32;  // bits kept for parameters and checkpoints

  static RunConfig defaults_for(const std::string& dataset, const std::string& fraction = "1/64");

  // Sets one field from its text form. Throws ConfigError on unknown keys or
  // unparsable values.
  void set(const std::string& key, const std::string& value);

  // `key = value` lines in a fixed key order; doubles round-trip exactly.
  std::string to_text() const;
  static RunConfig from_text(const std::string& text, RunConfig base);
  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path, RunConfig base);
  static RunConfig from_file(const std::string& path);

  double fraction_value() const;  // 1.0 for "full"
  LossMode loss_mode() const;
  Precision precision_mode() const;
  CooccurrenceWeighting weighting() const;
  // Report label: STAR, STAR_V1 (no self attention), STAR_V2 (no time attention).
  std::string model_label() const;
  std::string dataset_label() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

ModelConfig model_config(const RunConfig& config, std::size_t n_items);
GloveOptions glove_options(const RunConfig& config);

// Step decay: lr * decay^(epoch / decay_step) for a zero-based epoch.
double learning_rate_for_epoch(const RunConfig& config, std::size_t epoch);

}  // namespace star
