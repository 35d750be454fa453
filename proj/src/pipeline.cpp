#include "ctxdep/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ctxdep/common.hpp"
#include "json.hpp"

namespace ctxdep {

namespace {

void write_manifest(const PipelineConfig& config, const std::string& stage,
                    const std::vector<std::string>& input_paths,
                    const nlohmann::ordered_json& config_echo) {
  nlohmann::ordered_json j;
  j["stage"] = stage;
  auto inputs = nlohmann::ordered_json::object();
  for (const auto& path : input_paths)
    inputs[std::filesystem::path(path).filename().string()] =
        fnv1a64_hex(read_file(path));
  j["inputs"] = inputs;
  j["config"] = config_echo;
  j["seed"] = config.seed;
  j["timestamp"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  write_file(config.path(stage + ".manifest.json"), j.dump(2) + "\n");
}

std::unordered_set<std::string> stopwords_for(const PipelineConfig& config) {
  if (config.stopwords_path.empty()) return {};
  return load_stopwords(config.stopwords_path);
}

SignalTable signals_for_groups(const PipelineConfig& config,
                               const std::vector<ResponseGroup>& groups) {
  return compute_signals(groups, stopwords_for(config), config.counting);
}

// map message text -> index of the eligible group carrying its signals
std::map<std::string, std::size_t> message_index(
    const std::vector<ResponseGroup>& groups) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < groups.size(); ++i)
    index[groups[i].message.joined()] = i;
  return index;
}

std::vector<std::pair<FeatureVector, double>> labeled_signal_examples(
    const std::vector<LabeledMessage>& labels,
    const std::vector<ResponseGroup>& groups, const SignalTable& table) {
  auto index = message_index(groups);
  std::vector<std::pair<FeatureVector, double>> examples;
  for (const auto& lm : labels) {
    auto it = index.find(lm.message.joined());
    if (it == index.end() || !table.eligible[it->second]) continue;
    examples.emplace_back(signal_features(table.signals[it->second]),
                          static_cast<double>(lm.label));
  }
  return examples;
}

}  // namespace

std::string threshold_artifact(const std::string& system) {
  return "threshold_" + system + ".json";
}

std::string predictions_artifact(const std::string& system) {
  return "preds_" + system + ".tsv";
}

void require_artifact(const PipelineConfig& config, const std::string& artifact,
                      const std::string& producing_stage) {
  if (!std::filesystem::exists(config.path(artifact)))
    throw DependencyError("missing artifact '" + artifact + "'; run stage '" +
                          producing_stage + "' first");
}

void stage_synth(const PipelineConfig& config, const SyntheticSpec& spec) {
  SyntheticCorpus corpus = generate_synthetic(spec);
  write_file(config.path(artifacts::kCorpus), triples_to_jsonl(corpus.triples));
  write_file(config.path(artifacts::kLabels), labels_to_tsv(corpus.labels));
  nlohmann::ordered_json echo;
  echo["n_messages"] = spec.n_messages;
  echo["dependent_fraction"] = spec.dependent_fraction;
  echo["responses_min"] = spec.responses_min;
  echo["responses_max"] = spec.responses_max;
  echo["diverse_vocab"] = spec.diverse_vocab;
  echo["concentrated_vocab"] = spec.concentrated_vocab;
  echo["seed"] = spec.seed;
  write_manifest(config, "synth", {}, echo);
}

void stage_ingest(const PipelineConfig& config, const std::string& input_path) {
  std::ifstream in(input_path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus input: " + input_path);
  ParseDiagnostics parse_diag;
  auto triples = parse_triples(in, config.format, &parse_diag);
  TokenizerConfig tok;
  tok.lowercase = config.lowercase;
  tok.stopwords = stopwords_for(config);
  ParseDiagnostics group_diag;
  auto groups = group_by_message(triples, tok, config.min_responses, &group_diag);
  auto vocab = build_vocabulary(groups, config.min_count);
  write_file(config.path(artifacts::kGroups), groups_to_jsonl(groups));
  write_file(config.path(artifacts::kVocab), vocab.to_json());
  nlohmann::ordered_json echo;
  echo["format"] = config.format == TripleFormat::kJsonl ? "jsonl" : "tsv";
  echo["lowercase"] = config.lowercase;
  echo["min_count"] = config.min_count;
  echo["min_responses"] = config.min_responses;
  echo["well_formed"] = parse_diag.well_formed;
  echo["malformed"] = parse_diag.malformed;
  echo["dropped_empty"] = group_diag.dropped_empty;
  echo["groups"] = groups.size();
  echo["vocab_size"] = vocab.size();
  write_manifest(config, "ingest", {input_path}, echo);
}

void stage_signals(const PipelineConfig& config) {
  require_artifact(config, artifacts::kGroups, "ingest");
  auto groups = groups_from_jsonl(read_file(config.path(artifacts::kGroups)));
  SignalTable table = signals_for_groups(config, groups);
  write_file(config.path(artifacts::kSignals), signals_to_tsv(table));
  write_file(config.path(artifacts::kNormStats), table.stats.to_json() + "\n");
  nlohmann::ordered_json echo;
  echo["counting"] =
      config.counting == LengthCounting::kRawTokens ? "raw_tokens" : "post_stopword";
  echo["flagged"] = table.flagged_count;
  echo["degenerate"] = table.degenerate_count;
  write_manifest(config, "signals", {config.path(artifacts::kGroups)}, echo);
}

void stage_histogram(const PipelineConfig& config, const std::string& labels_path,
                     double bin_width) {
  require_artifact(config, artifacts::kGroups, "ingest");
  auto groups = groups_from_jsonl(read_file(config.path(artifacts::kGroups)));
  SignalTable table = signals_for_groups(config, groups);
  auto labels = labels_from_tsv(read_file(labels_path));
  auto index = message_index(groups);

  struct Series {
    const char* name;
    std::vector<double> values;
  };
  Series series[3] = {{"entropy", {}}, {"m_p", {}}, {"avg_len", {}}};
  std::vector<int> label_values;
  for (const auto& lm : labels) {
    auto it = index.find(lm.message.joined());
    if (it == index.end() || !table.eligible[it->second]) continue;
    const SignalVector& s = table.signals[it->second];
    series[0].values.push_back(s.entropy_norm);
    series[1].values.push_back(s.m_p);
    series[2].values.push_back(s.avg_len_norm);
    label_values.push_back(lm.label);
  }
  for (const auto& s : series) {
    auto bins = histogram(s.values, label_values, bin_width);
    write_file(config.path(std::string("histogram_") + s.name + ".csv"),
               histogram_to_csv(bins));
  }
  nlohmann::ordered_json echo;
  echo["bin_width"] = bin_width;
  echo["labeled_messages"] = label_values.size();
  write_manifest(config, "histogram",
                 {config.path(artifacts::kGroups), labels_path}, echo);
}

CvResult stage_train_combiner(const PipelineConfig& config,
                              const std::string& labels_path) {
  require_artifact(config, artifacts::kGroups, "ingest");
  require_artifact(config, artifacts::kNormStats, "signals");
  auto groups = groups_from_jsonl(read_file(config.path(artifacts::kGroups)));
  SignalTable table = signals_for_groups(config, groups);
  auto labels = labels_from_tsv(read_file(labels_path));
  auto examples = labeled_signal_examples(labels, groups, table);
  if (examples.size() < 10)
    throw ValidationError("too few labeled messages with signals to train combiner");

  FeatureIndex index = signal_feature_index();
  CvResult cv = kfold_cv(examples, 5, config.c_grid, index.size(), config.seed);
  LinearModel combiner =
      train_linear(examples, LinearMode::kClassification, cv.best_C, index.size(),
                   TrainOptions{100, config.seed});
  write_file(config.path(artifacts::kCombiner), combiner.to_json(&index) + "\n");

  nlohmann::ordered_json cv_json;
  cv_json["best_C"] = cv.best_C;
  cv_json["fold_accuracies"] = cv.fold_accuracies;
  cv_json["mean_accuracy"] = cv.mean_accuracy;
  cv_json["C_grid"] = config.c_grid;
  cv_json["grid_mean_accuracies"] = cv.grid_mean_accuracies;
  write_file(config.path(artifacts::kCv), cv_json.dump(2) + "\n");

  nlohmann::ordered_json echo;
  echo["labeled_examples"] = examples.size();
  echo["best_C"] = cv.best_C;
  write_manifest(config, "train-combiner",
                 {config.path(artifacts::kGroups), labels_path}, echo);
  return cv;
}

WeakDatasetManifest stage_weaklabel(const PipelineConfig& config) {
  require_artifact(config, artifacts::kGroups, "ingest");
  require_artifact(config, artifacts::kNormStats, "signals");
  require_artifact(config, artifacts::kCombiner, "train-combiner");
  require_artifact(config, artifacts::kVocab, "ingest");
  auto groups = groups_from_jsonl(read_file(config.path(artifacts::kGroups)));
  auto stats =
      NormalizationStats::from_json(read_file(config.path(artifacts::kNormStats)));
  auto combiner =
      LinearModel::from_json(read_file(config.path(artifacts::kCombiner)));
  auto vocab = Vocabulary::from_json(read_file(config.path(artifacts::kVocab)));
  SignalTable table = signals_for_groups(config, groups);

  WeakDatasetManifest manifest;
  auto dataset =
      build_weak_dataset(groups, table, stats, combiner, vocab, &manifest);
  write_file(config.path(artifacts::kWeak), weak_dataset_to_jsonl(dataset));
  write_file(config.path(artifacts::kWeakManifest), manifest.to_json() + "\n");
  write_file(config.path(artifacts::kDfTable),
             DfTable::build(dataset).to_json() + "\n");

  nlohmann::ordered_json echo;
  echo["eligible"] = manifest.eligible;
  echo["flagged"] = manifest.flagged;
  echo["degenerate"] = manifest.degenerate;
  write_manifest(config, "weaklabel",
                 {config.path(artifacts::kGroups), config.path(artifacts::kNormStats),
                  config.path(artifacts::kCombiner)},
                 echo);
  return manifest;
}

void stage_train_lstm(const PipelineConfig& config,
                      const std::string& exclude_labels_path) {
  require_artifact(config, artifacts::kWeak, "weaklabel");
  require_artifact(config, artifacts::kVocab, "ingest");
  auto dataset = weak_dataset_from_jsonl(read_file(config.path(artifacts::kWeak)));
  auto vocab = Vocabulary::from_json(read_file(config.path(artifacts::kVocab)));

  std::vector<LstmExample> examples;
  std::set<std::string> excluded;
  if (!exclude_labels_path.empty()) {
    for (const auto& lm : labels_from_tsv(read_file(exclude_labels_path)))
      excluded.insert(lm.message.joined());
  }
  for (const auto& weak : dataset) {
    if (excluded.count(weak.message.joined())) continue;
    examples.push_back(LstmExample{weak.message.ids, weak.y});
  }

  LstmDims dims = config.dims;
  dims.vocab_size = vocab.size();
  std::vector<EpochStats> log;
  LstmParams params = train_lstm(examples, dims, config.lstm, &log);
  write_file(config.path(artifacts::kLstmModel),
             lstm_to_json(params, config.lstm, vocab.content_hash()) + "\n");

  std::ostringstream csv;
  // wall time stays out of the log so reruns are byte-identical
  csv << "epoch,mean_loss\n";
  csv.precision(17);
  for (const auto& e : log) csv << e.epoch << ',' << e.mean_loss << '\n';
  write_file(config.path(artifacts::kTrainLog), csv.str());

  nlohmann::ordered_json echo;
  echo["examples"] = examples.size();
  echo["excluded"] = excluded.size();
  echo["d_w"] = dims.d_w;
  echo["d_h"] = dims.d_h;
  echo["d_s"] = dims.d_s;
  echo["epochs"] = config.lstm.epochs;
  echo["learning_rate"] = config.lstm.learning_rate;
  echo["batch_size"] = config.lstm.batch_size;
  echo["dropout_rate"] = config.lstm.dropout_rate;
  echo["lstm_seed"] = config.lstm.seed;
  write_manifest(config, "train-lstm",
                 {config.path(artifacts::kWeak), config.path(artifacts::kVocab)},
                 echo);
}

std::vector<double> lstm_scores(const LstmParams& params, const Vocabulary& vocab,
                                const std::vector<LabeledMessage>& messages) {
  std::vector<double> scores;
  scores.reserve(messages.size());
  for (const auto& lm : messages)
    scores.push_back(forward(params, vocab.encode(lm.message)));
  return scores;
}

Threshold stage_tune_threshold(const PipelineConfig& config,
                               const std::string& labels_path,
                               const std::string& system) {
  auto labels = labels_from_tsv(read_file(labels_path));
  std::vector<int> label_values;
  for (const auto& lm : labels) label_values.push_back(lm.label);

  Threshold threshold;
  if (system == "lstm") {
    require_artifact(config, artifacts::kLstmModel, "train-lstm");
    require_artifact(config, artifacts::kVocab, "ingest");
    auto params = lstm_from_json(read_file(config.path(artifacts::kLstmModel)));
    auto vocab = Vocabulary::from_json(read_file(config.path(artifacts::kVocab)));
    threshold = tune_threshold(lstm_scores(params, vocab, labels), label_values);
  } else if (system == "length") {
    // tuned on negated lengths so that score > T matches length < T_len
    std::vector<double> scores;
    for (const auto& lm : labels)
      scores.push_back(-static_cast<double>(lm.message.size()));
    Threshold negated = tune_threshold(scores, label_values);
    threshold = negated;
    threshold.T = -negated.T;
  } else if (system == "mdf") {
    require_artifact(config, artifacts::kDfTable, "weaklabel");
    auto df = DfTable::from_json(read_file(config.path(artifacts::kDfTable)));
    std::vector<double> scores;
    for (const auto& lm : labels)
      scores.push_back(static_cast<double>(df.min_df(lm.message)));
    threshold = tune_threshold(scores, label_values);
  } else {
    throw ValidationError("unknown system for tune-threshold: " + system);
  }
  threshold.source = labels_path;
  write_file(config.path(threshold_artifact(system)), threshold.to_json() + "\n");
  nlohmann::ordered_json echo;
  echo["system"] = system;
  echo["T"] = threshold.T;
  echo["tuned_accuracy"] = threshold.tuned_accuracy;
  write_manifest(config, "tune-threshold-" + system, {labels_path}, echo);
  return threshold;
}

void stage_predict(const PipelineConfig& config, const std::string& messages_path,
                   const std::string& system) {
  require_artifact(config, threshold_artifact(system), "tune-threshold");
  auto threshold =
      Threshold::from_json(read_file(config.path(threshold_artifact(system))));
  auto messages = labels_from_tsv(read_file(messages_path));

  std::vector<int> preds;
  if (system == "lstm") {
    require_artifact(config, artifacts::kLstmModel, "train-lstm");
    require_artifact(config, artifacts::kVocab, "ingest");
    auto params = lstm_from_json(read_file(config.path(artifacts::kLstmModel)));
    auto vocab = Vocabulary::from_json(read_file(config.path(artifacts::kVocab)));
    for (double s : lstm_scores(params, vocab, messages))
      preds.push_back(predict(s, threshold));
  } else if (system == "length") {
    for (const auto& lm : messages)
      preds.push_back(baseline_length(lm.message, threshold));
  } else if (system == "mdf") {
    require_artifact(config, artifacts::kDfTable, "weaklabel");
    auto df = DfTable::from_json(read_file(config.path(artifacts::kDfTable)));
    for (const auto& lm : messages)
      preds.push_back(baseline_mdf(lm.message, df, threshold));
  } else {
    throw ValidationError("unknown system for predict: " + system);
  }
  write_file(config.path(predictions_artifact(system)), predictions_to_tsv(preds));
  nlohmann::ordered_json echo;
  echo["system"] = system;
  echo["messages"] = messages.size();
  write_manifest(config, "predict-" + system, {messages_path}, echo);
}

EvalReport stage_evaluate(
    const PipelineConfig& config, const std::string& labels_path,
    const std::vector<std::pair<std::string, std::string>>& system_pred_paths) {
  auto labels = labels_from_tsv(read_file(labels_path));
  std::vector<int> label_values;
  for (const auto& lm : labels) label_values.push_back(lm.label);

  std::vector<std::pair<std::string, std::vector<int>>> systems;
  std::vector<std::string> inputs = {labels_path};
  for (const auto& [name, path] : system_pred_paths) {
    if (!std::filesystem::exists(path))
      throw DependencyError("missing predictions '" + path + "'; run stage 'predict' first");
    auto preds = predictions_from_tsv(read_file(path));
    if (preds.size() != label_values.size())
      throw ValidationError("predictions for '" + name + "' not aligned with labels");
    systems.emplace_back(name, std::move(preds));
    inputs.push_back(path);
  }
  EvalReport report = build_report(
      systems, label_values, std::filesystem::path(labels_path).filename().string());
  write_file(config.path(artifacts::kReportJson), report.to_json() + "\n");
  write_file(config.path(artifacts::kReportText), report.to_text());
  nlohmann::ordered_json echo;
  echo["systems"] = systems.size();
  echo["best_system"] = report.best_system;
  write_manifest(config, "evaluate", inputs, echo);
  return report;
}

}  // namespace ctxdep
