#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ctxdep/corpus.hpp"
#include "ctxdep/weaklabel.hpp"

namespace ctxdep {

struct Threshold {
  double T = 0.0;
  double tuned_accuracy = 0.0;
  std::string source;
  bool degenerate = false;  // tuned on single-class labels

  std::string to_json() const;
  static Threshold from_json(const std::string& text);
};

// token -> number of distinct messages containing it
class DfTable {
 public:
  static DfTable build(const std::vector<WeakLabeledExample>& dataset);
  static DfTable build_from_messages(const std::vector<TokenSeq>& messages);

  std::uint64_t df(const std::string& token) const;  // 0 when unseen
  std::uint64_t min_df(const TokenSeq& msg) const;
  std::size_t size() const { return counts_.size(); }

  std::string to_json() const;
  static DfTable from_json(const std::string& text);

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
};

// +1 iff s > T (strict)
int predict(double score, const Threshold& threshold);

// Exhaustive threshold search over midpoints of consecutive distinct sorted
// scores plus sentinels below the minimum and above the maximum.
Threshold tune_threshold(const std::vector<double>& scores,
                         const std::vector<int>& labels);

// +1 iff token count < T (strict)
int baseline_length(const TokenSeq& msg, const Threshold& threshold);

// +1 iff minimal document frequency over message tokens > T (strict)
int baseline_mdf(const TokenSeq& msg, const DfTable& df,
                 const Threshold& threshold);

}  // namespace ctxdep
