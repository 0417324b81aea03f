#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "star/checkpoint.hpp"
#include "star/config.hpp"
#include "star/data.hpp"
#include "star/evaluation.hpp"

namespace star {

// File names inside a preprocessed data directory.
namespace files {
inline constexpr const char* kTrain = "train.tsv";
inline constexpr const char* kTest = "test.tsv";
inline constexpr const char* kVocabulary = "vocab.tsv";
inline constexpr const char* kRejects = "rejects.log";
inline constexpr const char* kStats = "stats.tsv";
inline constexpr const char* kDataset = "dataset.cfg";  // dataset and fraction, read back by pretrain/train
inline constexpr const char* kEmbeddings = "embeddings.ckpt";
inline constexpr const char* kFinal = "final.ckpt";
inline constexpr const char* kBest = "best.ckpt";
inline constexpr const char* kReport = "report.tsv";
}  // namespace files

struct PreprocessArgs {
  std::string raw_path;
  std::string dataset = "yoochoose";
  std::string fraction = "full";
  std::string out_dir;
  std::optional<Seconds> test_boundary;  // defaults per dataset
  FilterOptions filter;
};

struct PreprocessResult {
  CorpusStats train;
  CorpusStats test;
  std::size_t rejected_rows = 0;
};

// raw log -> train.tsv, test.tsv, vocab.tsv, rejects.log, stats.tsv, dataset.cfg
PreprocessResult cmd_preprocess(const PreprocessArgs& args, std::ostream& log);

struct PretrainResult {
  double mean_interval = 0.0;
  double theta = 0.0;
  std::size_t window = 0;
  std::size_t nnz = 0;
  Shape shape;
  std::vector<double> epoch_loss;
};

// train.tsv -> GloVe item table stored as `item_embedding.init`.
PretrainResult cmd_pretrain(const std::string& data_dir, const RunConfig& config, const std::string& out_path,
                            std::ostream& log);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_recall = 0.0;
  double valid_mrr = 0.0;
};

struct TrainArgs {
  std::string data_dir;
  std::string embeddings_path;  // empty: random item table
  std::string out_dir;
  std::string resume_path;      // empty: fresh run
  RunConfig config;
};

// Trains on the oldest 90% of train.tsv, validates on the rest, writes
// final.ckpt every epoch and best.ckpt when validation Recall@k improves.
std::vector<EpochLog> cmd_train(const TrainArgs& args, std::ostream& log);

// STAR plus POP, S-POP and Item-KNN on test.tsv; writes the report table
// when `report_path` is non-empty.
std::vector<MetricsReport> cmd_evaluate(const std::string& checkpoint_path, const std::string& data_dir,
                                        std::size_t k, const std::string& report_path, std::ostream& log);

// Reads one session as `item<TAB>epoch_seconds` lines (raw item names) and
// prints the top-k `item<TAB>probability`.
void cmd_recommend(const std::string& checkpoint_path, std::istream& events, std::size_t k, std::ostream& out);

}  // namespace star
