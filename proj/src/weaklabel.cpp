#include "ctxdep/weaklabel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctxdep/common.hpp"
#include "json.hpp"

namespace ctxdep {

std::string WeakDatasetManifest::to_json() const {
  nlohmann::ordered_json j;
  j["eligible"] = eligible;
  j["flagged"] = flagged;
  j["degenerate"] = degenerate;
  j["y_min"] = y_min;
  j["y_max"] = y_max;
  j["y_mean"] = y_mean;
  return j.dump(2);
}

FeatureIndex signal_feature_index() {
  FeatureIndex index;
  index.intern("entropy_norm");
  index.intern("m_p");
  index.intern("avg_len_norm");
  return index;
}

FeatureVector signal_features(const SignalVector& s) {
  FeatureVector fv;
  fv.add(0, s.entropy_norm);
  fv.add(1, s.m_p);
  fv.add(2, s.avg_len_norm);
  fv.finalize();
  return fv;
}

std::vector<WeakLabeledExample> build_weak_dataset(
    const std::vector<ResponseGroup>& groups, const SignalTable& table,
    const NormalizationStats& stats, const LinearModel& combiner,
    const Vocabulary& vocab, WeakDatasetManifest* manifest) {
  if (table.signals.size() != groups.size())
    throw ValidationError("signal table does not align with groups");
  if (combiner.mode != LinearMode::kClassification)
    throw ValidationError("combiner must be a classification model");

  std::vector<WeakLabeledExample> dataset;
  double y_sum = 0.0;
  double y_min = 0.0, y_max = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!table.eligible[i]) continue;
    SignalVector s = table.signals[i];
    // re-normalize raw signals against the supplied (training-corpus) stats
    s.entropy_norm = normalize_with(s.raw_entropy, stats.min_entropy, stats.max_entropy);
    s.avg_len_norm = normalize_with(s.raw_avg_len, stats.min_avg_len, stats.max_avg_len);

    WeakLabeledExample example;
    example.message = groups[i].message;
    example.message.ids = vocab.encode(groups[i].message);
    example.y = decision_value(combiner, signal_features(s));
    example.provenance = s;
    if (dataset.empty()) {
      y_min = y_max = example.y;
    } else {
      y_min = std::min(y_min, example.y);
      y_max = std::max(y_max, example.y);
    }
    y_sum += example.y;
    dataset.push_back(std::move(example));
  }
  // groups arrive sorted by message text, so the dataset already is too
  if (manifest) {
    manifest->eligible = dataset.size();
    manifest->flagged = table.flagged_count;
    manifest->degenerate = table.degenerate_count;
    manifest->y_min = y_min;
    manifest->y_max = y_max;
    manifest->y_mean = dataset.empty() ? 0.0 : y_sum / static_cast<double>(dataset.size());
  }
  return dataset;
}

std::string weak_dataset_to_jsonl(const std::vector<WeakLabeledExample>& dataset) {
  std::string out;
  for (const auto& example : dataset) {
    nlohmann::ordered_json j;
    j["message"] = example.message.tokens;
    j["ids"] = example.message.ids;
    j["y"] = example.y;
    j["signals"] = {{"entropy_norm", example.provenance.entropy_norm},
                    {"m_p", example.provenance.m_p},
                    {"avg_len_norm", example.provenance.avg_len_norm}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<WeakLabeledExample> weak_dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::vector<WeakLabeledExample> dataset;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    WeakLabeledExample example;
    example.message.tokens = j.at("message").get<std::vector<std::string>>();
    example.message.ids = j.at("ids").get<std::vector<std::uint32_t>>();
    example.y = j.at("y").get<double>();
    if (j.contains("signals")) {
      example.provenance.entropy_norm = j["signals"].value("entropy_norm", 0.0);
      example.provenance.m_p = j["signals"].value("m_p", 0.0);
      example.provenance.avg_len_norm = j["signals"].value("avg_len_norm", 0.0);
    }
    if (example.message.tokens.empty())
      throw FormatError("weak example with empty message");
    dataset.push_back(std::move(example));
  }
  return dataset;
}

std::string labels_to_tsv(const std::vector<LabeledMessage>& labels) {
  std::string out;
  for (const auto& lm : labels) {
    out += lm.message.joined();
    out.push_back('\t');
    out += lm.label > 0 ? "1" : "-1";
    out.push_back('\n');
  }
  return out;
}

std::vector<LabeledMessage> labels_from_tsv(const std::string& text) {
  std::istringstream in(text);
  std::vector<LabeledMessage> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw FormatError("labels file row without tab separator");
    LabeledMessage lm;
    lm.message = tokenize(line.substr(0, tab), /*lowercase=*/true);
    std::string value = line.substr(tab + 1);
    if (value == "1" || value == "+1")
      lm.label = 1;
    else if (value == "-1")
      lm.label = -1;
    else
      throw FormatError("label must be +1 or -1, got: " + value);
    labels.push_back(std::move(lm));
  }
  return labels;
}

}  // namespace ctxdep
