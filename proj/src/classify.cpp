#include "ctxdep/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ctxdep/common.hpp"
#include "json.hpp"

namespace ctxdep {

std::string Threshold::to_json() const {
  nlohmann::ordered_json j;
  j["T"] = T;
  j["tuned_accuracy"] = tuned_accuracy;
  j["source"] = source;
  j["degenerate"] = degenerate;
  return j.dump(2);
}

Threshold Threshold::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  Threshold t;
  t.T = j.at("T").get<double>();
  t.tuned_accuracy = j.at("tuned_accuracy").get<double>();
  t.source = j.value("source", "");
  t.degenerate = j.value("degenerate", false);
  return t;
}

DfTable DfTable::build(const std::vector<WeakLabeledExample>& dataset) {
  std::vector<TokenSeq> messages;
  messages.reserve(dataset.size());
  for (const auto& example : dataset) messages.push_back(example.message);
  return build_from_messages(messages);
}

DfTable DfTable::build_from_messages(const std::vector<TokenSeq>& messages) {
  DfTable table;
  for (const auto& msg : messages) {
    std::set<std::string> distinct(msg.tokens.begin(), msg.tokens.end());
    for (const auto& token : distinct) ++table.counts_[token];
  }
  return table;
}

std::uint64_t DfTable::df(const std::string& token) const {
  auto it = counts_.find(token);
  return it == counts_.end() ? 0 : it->second;
}

std::uint64_t DfTable::min_df(const TokenSeq& msg) const {
  std::uint64_t m = UINT64_MAX;
  for (const auto& token : msg.tokens) m = std::min(m, df(token));
  return msg.tokens.empty() ? 0 : m;
}

std::string DfTable::to_json() const {
  std::map<std::string, std::uint64_t> ordered(counts_.begin(), counts_.end());
  nlohmann::json j = ordered;
  return j.dump();
}

DfTable DfTable::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  DfTable table;
  for (auto& [token, count] : j.items())
    table.counts_[token] = count.get<std::uint64_t>();
  return table;
}

int predict(double score, const Threshold& threshold) {
  return score > threshold.T ? 1 : -1;
}

Threshold tune_threshold(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ValidationError("tune_threshold: scores/labels mismatch");

  bool has_pos = false, has_neg = false;
  for (int label : labels) (label > 0 ? has_pos : has_neg) = true;

  std::vector<double> sorted(scores);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  Threshold result;
  if (!has_pos || !has_neg) {
    // single-class labels: any sentinel on the right side is perfect
    result.T = has_pos ? sorted.front() - 1.0 : sorted.back() + 1.0;
    result.tuned_accuracy = 1.0;
    result.degenerate = true;
    return result;
  }

  std::vector<double> candidates;
  candidates.push_back(sorted.front() - 1.0);
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
    candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  candidates.push_back(sorted.back() + 1.0);

  double best_acc = -1.0;
  double best_T = candidates.front();
  for (double T : candidates) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      int pred = scores[i] > T ? 1 : -1;
      if (pred == labels[i]) ++correct;
    }
    double acc = static_cast<double>(correct) / static_cast<double>(scores.size());
    if (acc > best_acc) {  // ties keep the smallest candidate
      best_acc = acc;
      best_T = T;
    }
  }
  result.T = best_T;
  result.tuned_accuracy = best_acc;
  return result;
}

int baseline_length(const TokenSeq& msg, const Threshold& threshold) {
  return static_cast<double>(msg.tokens.size()) < threshold.T ? 1 : -1;
}

int baseline_mdf(const TokenSeq& msg, const DfTable& df,
                 const Threshold& threshold) {
  return static_cast<double>(df.min_df(msg)) > threshold.T ? 1 : -1;
}

}  // namespace ctxdep
