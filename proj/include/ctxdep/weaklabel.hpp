#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "ctxdep/corpus.hpp"
#include "ctxdep/linear.hpp"
#include "ctxdep/signals.hpp"

namespace ctxdep {

struct WeakLabeledExample {
  TokenSeq message;  // tokens + ids against the frozen vocabulary
  double y = 0.0;
  SignalVector provenance;
};

struct LabeledMessage {
  TokenSeq message;
  int label = 0;  // +1 context dependent, -1 context independent
};

struct WeakDatasetManifest {
  std::size_t eligible = 0;
  std::size_t flagged = 0;
  std::size_t degenerate = 0;
  double y_min = 0.0, y_max = 0.0, y_mean = 0.0;

  std::string to_json() const;
};

// Signal feature ids of the combiner, in this fixed order.
FeatureVector signal_features(const SignalVector& s);
FeatureIndex signal_feature_index();

std::vector<WeakLabeledExample> build_weak_dataset(
    const std::vector<ResponseGroup>& groups, const SignalTable& table,
    const NormalizationStats& stats, const LinearModel& combiner,
    const Vocabulary& vocab, WeakDatasetManifest* manifest = nullptr);

std::string weak_dataset_to_jsonl(const std::vector<WeakLabeledExample>& dataset);
std::vector<WeakLabeledExample> weak_dataset_from_jsonl(const std::string& text);

// labels file: message text <TAB> label (+1 / -1)
std::string labels_to_tsv(const std::vector<LabeledMessage>& labels);
std::vector<LabeledMessage> labels_from_tsv(const std::string& text);

}  // namespace ctxdep
