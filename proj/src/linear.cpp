#include "ctxdep/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxdep/common.hpp"
#include "json.hpp"

namespace ctxdep {

void FeatureVector::add(std::uint32_t id, double value) {
  entries.emplace_back(id, value);
}

void FeatureVector::finalize() {
  std::sort(entries.begin(), entries.end());
  std::size_t out = 0;
  for (std::size_t i = 0; i < entries.size();) {
    std::uint32_t id = entries[i].first;
    double sum = 0.0;
    while (i < entries.size() && entries[i].first == id) sum += entries[i++].second;
    entries[out++] = {id, sum};
  }
  entries.resize(out);
}

std::uint32_t FeatureIndex::intern(const std::string& name) {
  auto it = name_to_id_.find(name);
  if (it != name_to_id_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(names_.size());
  name_to_id_.emplace(name, id);
  names_.push_back(name);
  return id;
}

std::optional<std::uint32_t> FeatureIndex::find(const std::string& name) const {
  auto it = name_to_id_.find(name);
  if (it == name_to_id_.end()) return std::nullopt;
  return it->second;
}

std::string FeatureIndex::to_json() const {
  nlohmann::json j = names_;
  return j.dump();
}

FeatureIndex FeatureIndex::from_json(const std::string& text) {
  auto names = nlohmann::json::parse(text).get<std::vector<std::string>>();
  FeatureIndex index;
  for (const auto& name : names) index.intern(name);
  return index;
}

FeatureVector extract_ngram_features(const TokenSeq& msg,
                                     const std::vector<std::string>* tags,
                                     FeatureIndex& index, bool grow) {
  if (tags && tags->size() != msg.tokens.size())
    throw ValidationError("POS tags do not align with message tokens");
  FeatureVector fv;
  auto emit = [&](const std::string& name, double value) {
    if (grow) {
      fv.add(index.intern(name), value);
    } else if (auto id = index.find(name)) {
      fv.add(*id, value);
    }
  };
  for (const auto& token : msg.tokens) emit("u:" + token, 1.0);
  for (std::size_t i = 0; i + 1 < msg.tokens.size(); ++i)
    emit("b:" + msg.tokens[i] + "\x1f" + msg.tokens[i + 1], 1.0);
  if (tags && !tags->empty()) {
    std::map<std::string, std::size_t> tag_counts;
    for (const auto& tag : *tags) ++tag_counts[tag];
    for (const auto& [tag, count] : tag_counts)
      emit("t:" + tag,
           static_cast<double>(count) / static_cast<double>(tags->size()));
  }
  fv.finalize();
  return fv;
}

namespace {

// Bias lives at index `feature_count` of the augmented weight vector with an
// implicit constant input of 1, so it shares the L2 regularizer.
double raw_score(const std::vector<double>& w, const FeatureVector& x) {
  double s = w.back();
  for (const auto& [id, value] : x.entries) {
    if (id + 1 < w.size()) s += w[id] * value;
  }
  return s;
}

double full_objective(const std::vector<double>& w,
                      const std::vector<std::pair<FeatureVector, double>>& examples,
                      LinearMode mode, double C, double epsilon) {
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (const auto& [x, y] : examples) {
    double s = raw_score(w, x);
    if (mode == LinearMode::kClassification) {
      loss += std::max(0.0, 1.0 - y * s);
    } else {
      loss += std::max(0.0, std::abs(y - s) - epsilon);
    }
  }
  return 0.5 * reg + C * loss;
}

}  // namespace

LinearModel train_linear(
    const std::vector<std::pair<FeatureVector, double>>& examples,
    LinearMode mode, double C, std::size_t feature_count,
    const TrainOptions& options, double epsilon) {
  if (feature_count == 0) throw ValidationError("empty feature space");
  if (examples.size() < 2) throw ValidationError("need at least 2 examples");
  if (C <= 0.0) throw ValidationError("C must be positive");
  if (mode == LinearMode::kClassification) {
    for (const auto& [x, y] : examples)
      if (y != 1.0 && y != -1.0)
        throw ValidationError("classification targets must be in {-1,+1}");
  }

  const std::size_t n = examples.size();
  const double lambda = 1.0 / (C * static_cast<double>(n));
  std::vector<double> w(feature_count + 1, 0.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);

  double first_epoch_objective = 0.0;
  double best_objective = 0.0;
  std::vector<double> best_w = w;
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      ++t;
      const auto& [x, y] = examples[idx];
      double eta = 1.0 / (lambda * static_cast<double>(t));
      double s = raw_score(w, x);
      double scale = 1.0 - eta * lambda;  // == 1 - 1/t
      for (auto& v : w) v *= scale;
      if (mode == LinearMode::kClassification) {
        if (y * s < 1.0) {
          for (const auto& [id, value] : x.entries) w[id] += eta * y * value;
          w.back() += eta * y;
        }
      } else {
        double r = y - s;
        if (std::abs(r) > epsilon) {
          double g = r > 0 ? 1.0 : -1.0;
          for (const auto& [id, value] : x.entries) w[id] += eta * g * value;
          w.back() += eta * g;
        }
      }
    }
    double obj = full_objective(w, examples, mode, C, epsilon);
    if (epoch == 0) {
      first_epoch_objective = obj;
      best_objective = obj;
      best_w = w;
    } else if (obj < best_objective) {
      best_objective = obj;
      best_w = w;
    }
  }

  LinearModel model;
  model.weights.assign(best_w.begin(), best_w.end() - 1);
  model.bias = best_w.back();
  model.mode = mode;
  model.C = C;
  model.epsilon = epsilon;
  model.objective_first_epoch = first_epoch_objective;
  model.objective_final = best_objective;
  return model;
}

double decision_value(const LinearModel& model, const FeatureVector& x) {
  double s = model.bias;
  for (const auto& [id, value] : x.entries) {
    if (id < model.weights.size()) s += model.weights[id] * value;
  }
  return s;
}

CvResult kfold_cv(const std::vector<std::pair<FeatureVector, double>>& examples,
                  std::size_t k, const std::vector<double>& c_grid,
                  std::size_t feature_count, std::uint64_t seed,
                  const TrainOptions& options) {
  if (k < 2 || k > examples.size())
    throw ValidationError("k must be in [2, example count]");
  if (c_grid.empty()) throw ValidationError("empty C grid");

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  // contiguous near-equal folds over the shuffled order
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < order.size(); ++i)
    folds[i * k / order.size()].push_back(order[i]);

  CvResult result;
  result.grid_mean_accuracies.assign(c_grid.size(), 0.0);
  std::vector<std::vector<double>> per_c_fold_acc(c_grid.size());
  for (std::size_t ci = 0; ci < c_grid.size(); ++ci) {
    double C = c_grid[ci];
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::pair<FeatureVector, double>> train;
      for (std::size_t g = 0; g < k; ++g) {
        if (g == f) continue;
        for (std::size_t idx : folds[g]) train.push_back(examples[idx]);
      }
      TrainOptions fold_options = options;
      fold_options.seed = seed + f + 1;
      LinearModel model = train_linear(train, LinearMode::kClassification, C,
                                       feature_count, fold_options);
      std::size_t correct = 0;
      for (std::size_t idx : folds[f]) {
        double s = decision_value(model, examples[idx].first);
        int pred = s > 0.0 ? 1 : -1;
        if (pred == static_cast<int>(examples[idx].second)) ++correct;
      }
      per_c_fold_acc[ci].push_back(static_cast<double>(correct) /
                                   static_cast<double>(folds[f].size()));
    }
    double mean = std::accumulate(per_c_fold_acc[ci].begin(),
                                  per_c_fold_acc[ci].end(), 0.0) /
                  static_cast<double>(k);
    result.grid_mean_accuracies[ci] = mean;
  }

  std::size_t best = 0;
  for (std::size_t ci = 1; ci < c_grid.size(); ++ci) {
    if (result.grid_mean_accuracies[ci] > result.grid_mean_accuracies[best] ||
        (result.grid_mean_accuracies[ci] == result.grid_mean_accuracies[best] &&
         c_grid[ci] < c_grid[best]))
      best = ci;
  }
  result.best_C = c_grid[best];
  result.fold_accuracies = per_c_fold_acc[best];
  result.mean_accuracy = result.grid_mean_accuracies[best];
  return result;
}

std::string LinearModel::to_json(const FeatureIndex* index) const {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["mode"] = mode == LinearMode::kClassification ? "classification" : "regression";
  j["C"] = C;
  j["epsilon"] = epsilon;
  j["bias"] = bias;
  j["weights"] = weights;
  if (index)
    j["feature_index"] = index->names();
  else
    j["feature_index"] = nlohmann::json::array();
  return j.dump();
}

LinearModel LinearModel::from_json(const std::string& text, FeatureIndex* index) {
  auto j = nlohmann::json::parse(text);
  LinearModel model;
  std::string mode = j.at("mode").get<std::string>();
  if (mode == "classification")
    model.mode = LinearMode::kClassification;
  else if (mode == "regression")
    model.mode = LinearMode::kRegression;
  else
    throw FormatError("unknown linear model mode: " + mode);
  model.C = j.at("C").get<double>();
  model.epsilon = j.at("epsilon").get<double>();
  model.bias = j.at("bias").get<double>();
  model.weights = j.at("weights").get<std::vector<double>>();
  if (index && j.contains("feature_index")) {
    *index = FeatureIndex::from_json(j.at("feature_index").dump());
  }
  return model;
}

}  // namespace ctxdep
