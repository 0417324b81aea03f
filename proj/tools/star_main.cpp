// star: preprocess -> pretrain -> train -> evaluate, plus recommend and a
// synthetic log generator for smoke runs.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "star/commands.hpp"
#include "star/synthetic.hpp"

namespace {

using namespace star;

// Config flags shared by pretrain and train. Unset flags leave the file or
// dataset defaults alone.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> dataset, fraction, loss;
  std::optional<double> theta_multiplier, dropout, lr;
  std::optional<std::size_t> epochs, batch_size, decay_step, dim, glove_epochs, glove_window, threads;
  std::optional<std::uint64_t> seed;
  std::optional<int> precision;
  bool no_self_attention = false;
  bool no_time_attention = false;
  bool share_gru = false;
  std::optional<bool> deterministic;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--dataset", dataset, "yoochoose, diginetica or canonical");
    cmd->add_option("--fraction", fraction, "1/64, 1/4 or full");
    cmd->add_option("--theta-multiplier", theta_multiplier, "sub-session threshold as a multiple of the mean interval");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--dropout", dropout);
    cmd->add_option("--decay-step", decay_step, "epochs between 10x learning rate decays");
    cmd->add_option("--lr", lr);
    cmd->add_option("--seed", seed);
    cmd->add_option("--dim", dim, "embedding and hidden size");
    cmd->add_option("--glove-epochs", glove_epochs);
    cmd->add_option("--glove-window", glove_window, "0 uses the longest train session");
    cmd->add_option("--threads", threads, "GloVe worker threads (ignored when deterministic)");
    cmd->add_option("--precision", precision, "32 or 64 bit parameters");
    cmd->add_option("--loss", loss, "categorical or literal");
    cmd->add_flag("--no-self-attention", no_self_attention);
    cmd->add_flag("--no-time-attention", no_time_attention);
    cmd->add_flag("--share-gru-weights", share_gru);
    cmd->add_flag("--deterministic,!--no-deterministic", deterministic);
    cmd->add_option("--set", overrides, "extra key=value overrides")->take_all();
  }

  // dataset defaults <- config file <- flags. The dataset and fraction come
  // from --dataset/--fraction, else from the preprocessed data directory.
  RunConfig resolve(const std::string& data_dir) const {
    std::string ds = "yoochoose", fr = "1/64";
    const auto recorded = std::filesystem::path(data_dir) / files::kDataset;
    if (std::filesystem::exists(recorded)) {
      const auto d = RunConfig::from_file(recorded.string());
      ds = d.dataset;
      fr = d.fraction;
    }
    RunConfig c = RunConfig::defaults_for(dataset.value_or(ds), fraction.value_or(fr));
    if (!config_path.empty()) c = RunConfig::from_file(config_path, c);
    if (dataset) c.dataset = *dataset;
    if (fraction) c.fraction = *fraction;
    if (theta_multiplier) c.theta_multiplier = *theta_multiplier;
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (dropout) c.dropout = *dropout;
    if (decay_step) c.decay_step = *decay_step;
    if (lr) c.lr = *lr;
    if (seed) c.seed = *seed;
    if (dim) c.embedding_dim = *dim;
    if (glove_epochs) c.glove_epochs = *glove_epochs;
    if (glove_window) c.glove_window = *glove_window;
    if (threads) c.glove_threads = *threads;
    if (precision) c.precision = *precision;
    if (loss) c.loss = *loss;
    if (no_self_attention) c.self_attention = false;
    if (no_time_attention) c.time_attention = false;
    if (share_gru) c.share_gru_weights = true;
    if (deterministic) c.deterministic = *deterministic;
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    // re-validate the combined result
    return RunConfig::from_text(c.to_text());
  }
};

void write_synthetic(const std::string& path, const SyntheticOptions& o) {
  const auto corpus = make_synthetic_corpus(o);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (const auto& row : to_raw_rows(corpus.sessions)) out << row.session_id << '\t' << row.item << '\t' << row.timestamp << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STAR session-based next-item recommender"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  std::optional<double> test_days;
  auto* c_pre = app.add_subcommand("preprocess", "raw click log -> canonical train/test files");
  c_pre->add_option("--input", pre.raw_path, "raw click log")->required();
  c_pre->add_option("--dataset", pre.dataset, "yoochoose, diginetica or canonical")->capture_default_str();
  c_pre->add_option("--fraction", pre.fraction, "most recent train fraction: 1/64, 1/4 or full")->capture_default_str();
  c_pre->add_option("--out", pre.out_dir, "output directory")->required();
  c_pre->add_option("--test-days", test_days, "test window length in days (default 1 for yoochoose, 7 otherwise)");
  c_pre->add_option("--min-item-support", pre.filter.min_item_support)->capture_default_str();

  ConfigFlags pre_cfg, train_cfg;
  std::string data_dir, emb_out;
  auto* c_pretrain = app.add_subcommand("pretrain", "GloVe item embeddings from train sub-sessions");
  c_pretrain->add_option("--data", data_dir, "preprocessed data directory")->required();
  c_pretrain->add_option("--out", emb_out, "embedding checkpoint to write")->required();
  pre_cfg.attach(c_pretrain);

  TrainArgs targs;
  auto* c_train = app.add_subcommand("train", "train STAR and write final/best checkpoints");
  c_train->add_option("--data", targs.data_dir, "preprocessed data directory")->required();
  c_train->add_option("--embeddings", targs.embeddings_path, "pretrained embedding checkpoint");
  c_train->add_option("--out", targs.out_dir, "output directory")->required();
  c_train->add_option("--resume", targs.resume_path, "continue from a checkpoint written by train");
  train_cfg.attach(c_train);

  std::string ckpt_path, report_path;
  std::size_t k = 20;
  auto* c_eval = app.add_subcommand("evaluate", "Recall@k and MRR@k of STAR and baselines on test.tsv");
  c_eval->add_option("--checkpoint", ckpt_path)->required();
  c_eval->add_option("--data", data_dir, "preprocessed data directory")->required();
  c_eval->add_option("--k", k)->capture_default_str();
  c_eval->add_option("--report", report_path, "write the metrics table here");

  auto* c_rec = app.add_subcommand("recommend", "top-k next items for a session read from stdin");
  c_rec->add_option("--checkpoint", ckpt_path)->required();
  c_rec->add_option("--k", k)->capture_default_str();

  SyntheticOptions syn;
  std::string syn_out;
  auto* c_syn = app.add_subcommand("synth", "write a synthetic click log in canonical raw form");
  c_syn->add_option("--out", syn_out)->required();
  c_syn->add_option("--items", syn.n_items)->capture_default_str();
  c_syn->add_option("--sessions", syn.n_sessions)->capture_default_str();
  c_syn->add_option("--days", syn.days)->capture_default_str();
  c_syn->add_option("--min-length", syn.min_length)->capture_default_str();
  c_syn->add_option("--max-length", syn.max_length)->capture_default_str();
  c_syn->add_option("--long-gap-min", syn.long_gap_min)->capture_default_str();
  c_syn->add_option("--long-gap-max", syn.long_gap_max)->capture_default_str();
  c_syn->add_option("--noise", syn.noise)->capture_default_str();
  c_syn->add_option("--long-gap-probability", syn.long_gap_probability)->capture_default_str();
  c_syn->add_option("--seed", syn.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_pre) {
      if (test_days) pre.test_boundary = static_cast<Seconds>(*test_days * kSecondsPerDay);
      cmd_preprocess(pre, std::cout);
    } else if (*c_pretrain) {
      cmd_pretrain(data_dir, pre_cfg.resolve(data_dir), emb_out, std::cout);
    } else if (*c_train) {
      targs.config = train_cfg.resolve(targs.data_dir);
      cmd_train(targs, std::cout);
    } else if (*c_eval) {
      cmd_evaluate(ckpt_path, data_dir, k, report_path, std::cout);
    } else if (*c_rec) {
      cmd_recommend(ckpt_path, std::cin, k, std::cout);
    } else if (*c_syn) {
      write_synthetic(syn_out, syn);
    }
  } catch (const std::exception& e) {
    std::cerr << "star: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
