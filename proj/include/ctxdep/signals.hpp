#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ctxdep/corpus.hpp"

namespace ctxdep {

// Unigram distribution over the pooled responses of one message.
struct WordDistribution {
  // (token, probability) sorted by token; every probability in (0, 1]
  std::vector<std::pair<std::string, double>> probs;
  std::size_t support_size() const { return probs.size(); }
};

struct SignalVector {
  double raw_entropy = 0.0;
  double entropy_norm = 0.0;
  double m_p = 0.0;
  double raw_avg_len = 0.0;
  double avg_len_norm = 0.0;
};

struct NormalizationStats {
  double min_entropy = 0.0, max_entropy = 0.0;
  double min_avg_len = 0.0, max_avg_len = 0.0;

  std::string to_json() const;
  static NormalizationStats from_json(const std::string& text);
};

enum class LengthCounting { kRawTokens, kPostStopword };

struct HistogramBin {
  double bin_start = 0.0;
  double pct_positive = 0.0;  // fraction in [0,1]
  double pct_negative = 0.0;
  std::size_t count = 0;
};

WordDistribution word_distribution(const ResponseGroup& group,
                                   const std::unordered_set<std::string>& stopwords);

double entropy(const WordDistribution& p);

double max_mass_complement(const WordDistribution& p);

double average_response_length(const ResponseGroup& group,
                               LengthCounting counting,
                               const std::unordered_set<std::string>& stopwords);

struct Normalized {
  std::vector<double> values;
  double min = 0.0;
  double max = 0.0;
};

// Min-max affine map to [0,1]; all-equal input maps to all zeros.
Normalized normalize(const std::vector<double>& values);

// Normalize one value against frozen (min, max) stats, clamped to [0,1].
double normalize_with(double value, double min_value, double max_value);

std::vector<HistogramBin> histogram(const std::vector<double>& values,
                                    const std::vector<int>& labels,
                                    double bin_width);

// Per-message signals for every eligible (non-flagged, non-degenerate) group.
// Returns one entry per group; `eligible[i]` is false for groups that were
// flagged or whose distribution was degenerate.
struct SignalTable {
  std::vector<SignalVector> signals;  // aligned with groups
  std::vector<bool> eligible;
  NormalizationStats stats;
  std::size_t degenerate_count = 0;
  std::size_t flagged_count = 0;
};

SignalTable compute_signals(const std::vector<ResponseGroup>& groups,
                            const std::unordered_set<std::string>& stopwords,
                            LengthCounting counting);

std::string signals_to_tsv(const SignalTable& table);
std::string histogram_to_csv(const std::vector<HistogramBin>& bins);

}  // namespace ctxdep
