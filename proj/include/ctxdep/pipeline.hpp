#pragma once

#include <string>
#include <vector>

#include "ctxdep/classify.hpp"
#include "ctxdep/corpus.hpp"
#include "ctxdep/eval.hpp"
#include "ctxdep/linear.hpp"
#include "ctxdep/lstm.hpp"
#include "ctxdep/signals.hpp"
#include "ctxdep/synth.hpp"
#include "ctxdep/weaklabel.hpp"

namespace ctxdep {

// Stages communicate only through files inside a workspace directory.
// Fixed artifact names keep lineage reconstruction simple.
struct PipelineConfig {
  std::string workspace = ".";
  TripleFormat format = TripleFormat::kJsonl;
  bool lowercase = true;
  std::string stopwords_path;  // optional, one token per line
  std::size_t min_count = 2;
  std::size_t min_responses = 2;
  LengthCounting counting = LengthCounting::kRawTokens;
  std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
  LstmDims dims;  // vocab_size filled from the vocabulary at train time
  TrainConfig lstm;
  std::uint64_t seed = 1;

  std::string path(const std::string& artifact) const {
    return workspace + "/" + artifact;
  }
};

// artifact file names
namespace artifacts {
inline constexpr const char* kCorpus = "corpus.jsonl";
inline constexpr const char* kLabels = "labels.tsv";
inline constexpr const char* kGroups = "groups.jsonl";
inline constexpr const char* kVocab = "vocab.json";
inline constexpr const char* kSignals = "signals.tsv";
inline constexpr const char* kNormStats = "norm_stats.json";
inline constexpr const char* kCombiner = "combiner.json";
inline constexpr const char* kCv = "cv.json";
inline constexpr const char* kWeak = "weak.jsonl";
inline constexpr const char* kWeakManifest = "weak_manifest.json";
inline constexpr const char* kLstmModel = "lstm.json";
inline constexpr const char* kTrainLog = "trainlog.csv";
inline constexpr const char* kDfTable = "df_table.json";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportText = "report.txt";
}  // namespace artifacts

void stage_synth(const PipelineConfig& config, const SyntheticSpec& spec);
void stage_ingest(const PipelineConfig& config, const std::string& input_path);
void stage_signals(const PipelineConfig& config);
void stage_histogram(const PipelineConfig& config, const std::string& labels_path,
                     double bin_width);
CvResult stage_train_combiner(const PipelineConfig& config,
                              const std::string& labels_path);
WeakDatasetManifest stage_weaklabel(const PipelineConfig& config);
void stage_train_lstm(const PipelineConfig& config,
                      const std::string& exclude_labels_path = "");
Threshold stage_tune_threshold(const PipelineConfig& config,
                               const std::string& labels_path,
                               const std::string& system);
void stage_predict(const PipelineConfig& config, const std::string& messages_path,
                   const std::string& system);
EvalReport stage_evaluate(
    const PipelineConfig& config, const std::string& labels_path,
    const std::vector<std::pair<std::string, std::string>>& system_pred_paths);

// shared helpers
std::string threshold_artifact(const std::string& system);
std::string predictions_artifact(const std::string& system);
void require_artifact(const PipelineConfig& config, const std::string& artifact,
                      const std::string& producing_stage);

// scores of a trained model on tokenized messages (eval mode)
std::vector<double> lstm_scores(const LstmParams& params, const Vocabulary& vocab,
                                const std::vector<LabeledMessage>& messages);

}  // namespace ctxdep
