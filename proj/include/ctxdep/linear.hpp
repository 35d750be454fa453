#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctxdep/corpus.hpp"

namespace ctxdep {

// Sparse feature vector, (id, value) sorted by id.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  void add(std::uint32_t id, double value);
  void finalize();  // sort by id, merge duplicates
};

// Frozen mapping from feature names to dense ids, built on training data.
class FeatureIndex {
 public:
  std::uint32_t intern(const std::string& name);          // adds when absent
  std::optional<std::uint32_t> find(const std::string& name) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  std::string to_json() const;
  static FeatureIndex from_json(const std::string& text);

 private:
  std::map<std::string, std::uint32_t> name_to_id_;
  std::vector<std::string> names_;
};

enum class LinearMode { kClassification, kRegression };

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  LinearMode mode = LinearMode::kClassification;
  double C = 1.0;
  double epsilon = 0.1;  // regression only
  double objective_first_epoch = 0.0;
  double objective_final = 0.0;

  std::string to_json(const FeatureIndex* index = nullptr) const;
  static LinearModel from_json(const std::string& text,
                               FeatureIndex* index = nullptr);
};

struct CvResult {
  double best_C = 0.0;
  std::vector<double> fold_accuracies;  // for best_C
  double mean_accuracy = 0.0;
  // mean held-out accuracy per grid value, aligned with the input grid
  std::vector<double> grid_mean_accuracies;
};

struct TrainOptions {
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
};

// Unigram + bigram presence counts, plus per-tag frequencies when POS tags
// are supplied. When `grow` is true unseen features are added to the index;
// otherwise they are dropped.
FeatureVector extract_ngram_features(const TokenSeq& msg,
                                     const std::vector<std::string>* tags,
                                     FeatureIndex& index, bool grow);

LinearModel train_linear(
    const std::vector<std::pair<FeatureVector, double>>& examples,
    LinearMode mode, double C, std::size_t feature_count,
    const TrainOptions& options = {}, double epsilon = 0.1);

double decision_value(const LinearModel& model, const FeatureVector& x);

CvResult kfold_cv(const std::vector<std::pair<FeatureVector, double>>& examples,
                  std::size_t k, const std::vector<double>& c_grid,
                  std::size_t feature_count, std::uint64_t seed,
                  const TrainOptions& options = {});

}  // namespace ctxdep
