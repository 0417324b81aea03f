#include "star/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "star/adapters.hpp"
#include "star/baselines.hpp"
#include "star/glove.hpp"
#include "star/model.hpp"
#include "star/trainer.hpp"

namespace star {
namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

std::string real_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_stats_row(std::ostream& out, const char* split, const CorpusStats& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f\t%.4f", s.avg_session_length, s.avg_samples_per_session);
  out << split << '\t' << s.n_clicks << '\t' << s.n_sessions << '\t' << s.n_sequences << '\t' << s.n_items << '\t'
      << buf << '\t' << s.fraction << '\t' << s.sessions_before_fraction << '\n';
}

void print_stats(std::ostream& log, const char* split, const CorpusStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-5s clicks=%zu sessions=%zu sequences=%zu items=%zu clicks/session=%.2f sequences/session=%.2f\n",
                split, s.n_clicks, s.n_sessions, s.n_sequences, s.n_items, s.avg_session_length,
                s.avg_samples_per_session);
  log << buf;
}

struct LoadedModel {
  Checkpoint ckpt;
  RunConfig config;
  Vocabulary vocab;
  std::unique_ptr<StarModel> model;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel out;
  out.ckpt = load_checkpoint(path);
  out.config = RunConfig::from_text(out.ckpt.meta_value(meta::kConfig));
  out.vocab = Vocabulary(out.ckpt.vocabulary);
  out.model = std::make_unique<StarModel>(model_config(out.config, out.vocab.size()));
  restore_parameters(out.ckpt, out.model->params(), false);
  return out;
}

}  // namespace

PreprocessResult cmd_preprocess(const PreprocessArgs& args, std::ostream& log) {
  const auto kind = parse_dataset_kind(args.dataset);
  std::ifstream in(args.raw_path, std::ios::binary);
  if (!in) throw DataError("cannot open raw input '" + args.raw_path + "'");
  fs::create_directories(args.out_dir);

  const auto parsed = read_dataset(kind, in);
  write_reject_log(join(args.out_dir, files::kRejects), parsed.rejects);
  auto corpus = parse_events(parsed.rows);
  auto sessions = filter_corpus(std::move(corpus.sessions), args.filter);
  auto split = split_chronological(std::move(sessions), args.test_boundary.value_or(default_test_boundary(kind)));
  const std::size_t before_fraction = split.train.size();
  if (args.fraction != "full") {
    const RunConfig probe = [&] {
      RunConfig c;
      c.fraction = args.fraction;
      return c;
    }();
    split.train = most_recent_fraction(std::move(split.train), probe.fraction_value());
    split.test = restrict_to_items_of(std::move(split.test), split.train);
    if (split.test.empty()) throw DataError("test set is empty after subsampling the train set");
  }
  const auto vocab = Vocabulary::build(split.train, corpus.item_names);
  const auto train = vocab.remap(split.train, corpus.item_names);
  const auto test = vocab.remap(split.test, corpus.item_names);

  write_canonical(join(args.out_dir, files::kTrain), train);
  write_canonical(join(args.out_dir, files::kTest), test);
  write_vocabulary(join(args.out_dir, files::kVocabulary), vocab);

  PreprocessResult result{compute_stats(train), compute_stats(test), parsed.rejects.size()};
  result.train.fraction = args.fraction;
  result.train.sessions_before_fraction = before_fraction;
  result.test.sessions_before_fraction = test.size();
  std::ofstream stats(join(args.out_dir, files::kStats), std::ios::binary);
  stats << "split\tclicks\tsessions\tsequences\titems\tclicks_per_session\tsequences_per_session\tfraction\t"
           "sessions_before_fraction\n";
  write_stats_row(stats, "train", result.train);
  write_stats_row(stats, "test", result.test);
  std::ofstream(join(args.out_dir, files::kDataset), std::ios::binary)
      << "dataset = " << args.dataset << "\nfraction = " << args.fraction << "\n";

  log << "dataset " << args.dataset << " (train fraction " << args.fraction << ", most recent sessions), "
      << parsed.rows.size() << " rows read, " << result.rejected_rows << " rejected\n";
  print_stats(log, "train", result.train);
  print_stats(log, "test", result.test);
  return result;
}

PretrainResult cmd_pretrain(const std::string& data_dir, const RunConfig& config, const std::string& out_path,
                            std::ostream& log) {
  const auto train = read_canonical(join(data_dir, files::kTrain));
  const auto vocab = read_vocabulary(join(data_dir, files::kVocabulary));
  PretrainResult r;
  r.mean_interval = average_interval(train);
  r.theta = config.theta_multiplier * r.mean_interval;
  if (!(r.theta > 0.0)) throw DataError("sub-session threshold is zero: every train interval is zero");
  r.window = config.glove_window > 0 ? config.glove_window : max_session_length(train);
  const auto subsessions = split_all_subsessions(train, r.theta);
  const auto x = build_cooccurrence(subsessions, vocab.size(), r.window, config.weighting());
  r.nnz = x.nnz();
  log << "mean interval " << real_text(r.mean_interval) << "s, theta = " << config.theta_multiplier
      << " x mean = " << real_text(r.theta) << "s, " << subsessions.size() << " sub-sessions, window " << r.window
      << ", " << r.nnz << " co-occurrence entries\n";

  const auto glove = train_glove(x, glove_options(config));
  r.epoch_loss = glove.epoch_loss;
  Tensor table = glove.state.embeddings();
  round_to_precision(table, config.precision_mode());
  r.shape = table.shape();
  log << "GloVe loss: epoch 1 " << r.epoch_loss.front() << ", epoch " << r.epoch_loss.size() << " "
      << r.epoch_loss.back() << "; table " << shape_string(r.shape) << "\n";

  Checkpoint ckpt;
  ckpt.precision = config.precision_mode();
  ckpt.meta[meta::kConfig] = config.to_text();
  ckpt.meta[meta::kTheta] = real_text(r.theta);
  ckpt.vocabulary = vocab.names();
  ckpt.tensors[kInitEmbeddingTensor] = std::move(table);
  save_checkpoint(out_path, ckpt);
  return r;
}

std::vector<EpochLog> cmd_train(const TrainArgs& args, std::ostream& log) {
  const auto& config = args.config;
  const auto train = read_canonical(join(args.data_dir, files::kTrain));
  const auto vocab = read_vocabulary(join(args.data_dir, files::kVocabulary));
  auto [fit, valid] = split_validation(train, config.validation_fraction);
  const auto fit_samples = expand_all(fit);
  const auto valid_samples = expand_all(valid);
  fs::create_directories(args.out_dir);

  StarModel model(model_config(config, vocab.size()));
  Rng rng(config.seed);
  std::optional<Tensor> init;
  std::string theta;
  if (!args.embeddings_path.empty()) {
    const auto emb = load_checkpoint(args.embeddings_path);
    if (emb.vocabulary != vocab.names()) throw CheckpointError("embedding vocabulary does not match " + args.data_dir);
    init = emb.tensor(kInitEmbeddingTensor);
    theta = emb.meta_value(meta::kTheta);
  }
  model.initialize(rng, init ? &*init : nullptr);
  for (auto& [name, p] : model.params()) round_to_precision(p.value, config.precision_mode());

  std::size_t start_epoch = 0;
  double best = -1.0;
  if (!args.resume_path.empty()) {
    const auto ckpt = load_checkpoint(args.resume_path);
    if (ckpt.vocabulary != vocab.names()) throw CheckpointError("checkpoint vocabulary does not match " + args.data_dir);
    restore_parameters(ckpt, model.params(), true);
    rng.set_state(ckpt.meta_value(meta::kRngState));
    start_epoch = std::stoul(ckpt.meta_value(meta::kEpoch));
    best = std::stod(ckpt.meta_value(meta::kBestRecall));
    if (ckpt.meta.contains(meta::kTheta)) theta = ckpt.meta_value(meta::kTheta);
    if (ckpt.tensors.contains(kInitEmbeddingTensor)) init = ckpt.tensor(kInitEmbeddingTensor);
    log << "resuming " << args.resume_path << " after epoch " << start_epoch << "\n";
  }

  log << config.model_label() << ": " << vocab.size() << " items, " << fit_samples.size() << " train / "
      << valid_samples.size() << " validation sequences, " << model.params().parameter_count() << " parameters\n";

  std::vector<EpochLog> history;
  for (std::size_t epoch = start_epoch; epoch < config.epochs; ++epoch) {
    AdamOptions adam;
    adam.lr = learning_rate_for_epoch(config, epoch);
    adam.l2 = config.l2;
    adam.precision = config.precision_mode();
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.lr = adam.lr;
    entry.train_loss = train_epoch(model, fit_samples, config.batch_size, adam, rng);
    if (!valid_samples.empty()) {
      const auto report = evaluate(StarScorer(model), valid_samples, config.k, "validation");
      entry.valid_recall = report.recall;
      entry.valid_mrr = report.mrr;
    }
    history.push_back(entry);
    char line[160];
    std::snprintf(line, sizeof line, "epoch %2zu  lr %.1e  loss %.5f  valid Recall@%zu %.4f  MRR@%zu %.4f\n",
                  entry.epoch, entry.lr, entry.train_loss, config.k, entry.valid_recall, config.k, entry.valid_mrr);
    log << line;

    const bool improved = entry.valid_recall > best;
    if (improved) best = entry.valid_recall;
    Checkpoint ckpt;
    ckpt.precision = config.precision_mode();
    ckpt.meta[meta::kConfig] = config.to_text();
    ckpt.meta[meta::kRngState] = rng.state();
    ckpt.meta[meta::kEpoch] = std::to_string(epoch + 1);
    ckpt.meta[meta::kBestRecall] = real_text(best);
    if (!theta.empty()) ckpt.meta[meta::kTheta] = theta;
    ckpt.vocabulary = vocab.names();
    store_parameters(model.params(), ckpt, true);
    if (init) ckpt.tensors[kInitEmbeddingTensor] = *init;
    save_checkpoint(join(args.out_dir, files::kFinal), ckpt);
    if (improved) save_checkpoint(join(args.out_dir, files::kBest), ckpt);
  }
  return history;
}

std::vector<MetricsReport> cmd_evaluate(const std::string& checkpoint_path, const std::string& data_dir,
                                        std::size_t k, const std::string& report_path, std::ostream& log) {
  const auto loaded = load_model(checkpoint_path);
  const auto vocab = read_vocabulary(join(data_dir, files::kVocabulary));
  if (vocab.names() != loaded.vocab.names()) throw CheckpointError("checkpoint vocabulary does not match " + data_dir);
  const auto train = read_canonical(join(data_dir, files::kTrain));
  const auto test = read_canonical(join(data_dir, files::kTest));
  const auto samples = expand_all(test);
  const auto n = vocab.size();
  const auto dataset = loaded.config.dataset_label();

  std::vector<MetricsReport> reports;
  reports.push_back(evaluate(StarScorer(*loaded.model, loaded.config.model_label()), samples, k, dataset));
  reports.push_back(evaluate(PopScorer(train, n), samples, k, dataset));
  reports.push_back(evaluate(SessionPopScorer(train, n), samples, k, dataset));
  reports.push_back(evaluate(ItemKnnScorer(train, n), samples, k, dataset));
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + report_path + "' for writing");
    write_report(out, reports);
  }
  print_summary(log, reports);
  return reports;
}

void cmd_recommend(const std::string& checkpoint_path, std::istream& events, std::size_t k, std::ostream& out) {
  const auto loaded = load_model(checkpoint_path);
  SequenceSample sample;
  std::vector<Seconds> times;
  std::string line;
  while (std::getline(events, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string item;
    Seconds ts = 0;
    if (!(row >> item >> ts)) throw DataError("expected '<item> <epoch_seconds>', got '" + line + "'");
    const auto id = loaded.vocab.find(item);
    if (!id) throw DataError("unknown item '" + item + "'");
    sample.prefix.push_back(*id);
    times.push_back(ts);
  }
  if (sample.prefix.empty()) throw DataError("no session events on input");
  const std::size_t m = times.size();
  for (std::size_t i = 0; i < m; ++i) {
    sample.before_intervals.push_back(i == 0 ? Interval{} : Interval{times[i] - times[i - 1]});
    sample.after_intervals.push_back(i + 1 == m ? Interval{} : Interval{times[i + 1] - times[i]});
  }
  const auto probs = loaded.model->predict(sample.prefix, sample.before_intervals, sample.after_intervals);
  char buf[32];
  for (const ItemId id : rank_items(probs, std::min(k, probs.size()))) {
    std::snprintf(buf, sizeof buf, "%.6g", probs[id]);
    out << loaded.vocab.name(id) << '\t' << buf << '\n';
  }
}

}  // namespace star
