#include "ctxdep/signals.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ctxdep/common.hpp"
#include "json.hpp"

namespace ctxdep {

std::string NormalizationStats::to_json() const {
  nlohmann::ordered_json j;
  j["min_entropy"] = min_entropy;
  j["max_entropy"] = max_entropy;
  j["min_avg_len"] = min_avg_len;
  j["max_avg_len"] = max_avg_len;
  return j.dump(2);
}

NormalizationStats NormalizationStats::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  NormalizationStats s;
  s.min_entropy = j.at("min_entropy").get<double>();
  s.max_entropy = j.at("max_entropy").get<double>();
  s.min_avg_len = j.at("min_avg_len").get<double>();
  s.max_avg_len = j.at("max_avg_len").get<double>();
  if (s.min_entropy > s.max_entropy || s.min_avg_len > s.max_avg_len)
    throw FormatError("normalization stats with min > max");
  return s;
}

WordDistribution word_distribution(
    const ResponseGroup& group,
    const std::unordered_set<std::string>& stopwords) {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& resp : group.responses) {
    for (const auto& token : resp.tokens) {
      if (stopwords.count(token)) continue;
      ++counts[token];
      ++total;
    }
  }
  if (total == 0)
    throw DegenerateDistribution("all response tokens are stopwords");
  WordDistribution dist;
  dist.probs.reserve(counts.size());
  for (const auto& [token, count] : counts)
    dist.probs.emplace_back(token,
                            static_cast<double>(count) / static_cast<double>(total));
  return dist;
}

double entropy(const WordDistribution& p) {
  double e = 0.0;
  for (const auto& [token, prob] : p.probs) e -= prob * std::log2(prob);
  return e;
}

double max_mass_complement(const WordDistribution& p) {
  double max_prob = 0.0;
  for (const auto& [token, prob] : p.probs) max_prob = std::max(max_prob, prob);
  return 1.0 - max_prob;
}

double average_response_length(const ResponseGroup& group,
                               LengthCounting counting,
                               const std::unordered_set<std::string>& stopwords) {
  if (group.responses.empty())
    throw ValidationError("average_response_length on empty group");
  double total = 0.0;
  for (const auto& resp : group.responses) {
    if (counting == LengthCounting::kRawTokens) {
      total += static_cast<double>(resp.tokens.size());
    } else {
      std::size_t kept = 0;
      for (const auto& token : resp.tokens)
        if (!stopwords.count(token)) ++kept;
      total += static_cast<double>(kept);
    }
  }
  return total / static_cast<double>(group.responses.size());
}

Normalized normalize(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("normalize on empty input");
  Normalized out;
  out.min = *std::min_element(values.begin(), values.end());
  out.max = *std::max_element(values.begin(), values.end());
  out.values.reserve(values.size());
  for (double v : values) out.values.push_back(normalize_with(v, out.min, out.max));
  return out;
}

double normalize_with(double value, double min_value, double max_value) {
  if (max_value <= min_value) return 0.0;
  double x = (value - min_value) / (max_value - min_value);
  return std::clamp(x, 0.0, 1.0);
}

std::vector<HistogramBin> histogram(const std::vector<double>& values,
                                    const std::vector<int>& labels,
                                    double bin_width) {
  if (values.size() != labels.size())
    throw ValidationError("histogram: values/labels length mismatch");
  if (bin_width <= 0.0 || bin_width > 1.0)
    throw ValidationError("histogram: bin width must be in (0, 1]");
  std::size_t n_bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
  std::vector<HistogramBin> bins(n_bins);
  std::vector<std::size_t> pos(n_bins, 0), neg(n_bins, 0);
  for (std::size_t b = 0; b < n_bins; ++b)
    bins[b].bin_start = static_cast<double>(b) * bin_width;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = values[i];
    if (v < 0.0 || v > 1.0)
      throw ValidationError("histogram: value outside [0,1]");
    std::size_t b = std::min(static_cast<std::size_t>(v / bin_width), n_bins - 1);
    ++bins[b].count;
    if (labels[i] > 0)
      ++pos[b];
    else
      ++neg[b];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (bins[b].count > 0) {
      bins[b].pct_positive = static_cast<double>(pos[b]) / bins[b].count;
      bins[b].pct_negative = static_cast<double>(neg[b]) / bins[b].count;
    }
  }
  return bins;
}

SignalTable compute_signals(const std::vector<ResponseGroup>& groups,
                            const std::unordered_set<std::string>& stopwords,
                            LengthCounting counting) {
  SignalTable table;
  table.signals.resize(groups.size());
  table.eligible.assign(groups.size(), false);

  std::vector<double> entropies, avg_lens;
  std::vector<std::size_t> eligible_idx;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].flagged) {
      ++table.flagged_count;
      continue;
    }
    try {
      WordDistribution dist = word_distribution(groups[i], stopwords);
      table.signals[i].raw_entropy = entropy(dist);
      table.signals[i].m_p = max_mass_complement(dist);
      table.signals[i].raw_avg_len =
          average_response_length(groups[i], counting, stopwords);
      table.eligible[i] = true;
      eligible_idx.push_back(i);
      entropies.push_back(table.signals[i].raw_entropy);
      avg_lens.push_back(table.signals[i].raw_avg_len);
    } catch (const DegenerateDistribution&) {
      ++table.degenerate_count;
    }
  }
  if (!eligible_idx.empty()) {
    Normalized ne = normalize(entropies);
    Normalized nl = normalize(avg_lens);
    table.stats.min_entropy = ne.min;
    table.stats.max_entropy = ne.max;
    table.stats.min_avg_len = nl.min;
    table.stats.max_avg_len = nl.max;
    for (std::size_t k = 0; k < eligible_idx.size(); ++k) {
      table.signals[eligible_idx[k]].entropy_norm = ne.values[k];
      table.signals[eligible_idx[k]].avg_len_norm = nl.values[k];
    }
  }
  return table;
}

std::string signals_to_tsv(const SignalTable& table) {
  std::ostringstream out;
  out << "message_id\traw_entropy\tentropy_norm\tm_p\traw_avg_len\tavg_len_norm\n";
  out.precision(17);
  for (std::size_t i = 0; i < table.signals.size(); ++i) {
    if (!table.eligible[i]) continue;
    const auto& s = table.signals[i];
    out << i << '\t' << s.raw_entropy << '\t' << s.entropy_norm << '\t' << s.m_p
        << '\t' << s.raw_avg_len << '\t' << s.avg_len_norm << '\n';
  }
  return out.str();
}

std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream out;
  out << "bin_start,pct_positive,pct_negative,count\n";
  out.precision(17);
  for (const auto& bin : bins)
    out << bin.bin_start << ',' << bin.pct_positive << ',' << bin.pct_negative
        << ',' << bin.count << '\n';
  return out.str();
}

}  // namespace ctxdep
