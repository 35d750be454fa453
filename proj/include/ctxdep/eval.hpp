#pragma once

#include <string>
#include <vector>

namespace ctxdep {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct SignTestResult {
  double p_value = 1.0;
  std::size_t discordant = 0;  // pairs where exactly one system is correct
  std::size_t wins_a = 0;      // discordant pairs won by system A
  bool no_evidence = false;    // zero discordant pairs
};

struct SystemResult {
  std::string name;
  double accuracy = 0.0;
  Confusion confusion;
};

struct PairwiseTest {
  std::string system_a;
  std::string system_b;
  SignTestResult test;
};

struct EvalReport {
  std::string dataset;
  std::vector<SystemResult> systems;
  std::string best_system;
  std::vector<PairwiseTest> sign_tests;  // each system vs the best one

  std::string to_json() const;
  std::string to_text() const;
};

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

Confusion confusion(const std::vector<int>& preds, const std::vector<int>& labels);

// Two-sided exact binomial sign test over discordant pairs.
SignTestResult sign_test(const std::vector<int>& preds_a,
                         const std::vector<int>& preds_b,
                         const std::vector<int>& labels);

EvalReport build_report(
    const std::vector<std::pair<std::string, std::vector<int>>>& systems,
    const std::vector<int>& labels, const std::string& dataset);

// predictions file: message_id <TAB> prediction
std::string predictions_to_tsv(const std::vector<int>& preds);
std::vector<int> predictions_from_tsv(const std::string& text);

}  // namespace ctxdep
