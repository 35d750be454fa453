// Pipeline CLI: each stage reads and writes files inside a workspace
// directory so any step can be rerun or audited in isolation.
//
// Exit codes: 0 success, 2 validation error, 3 dependency error,
// 4 numerical divergence.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctxdep/common.hpp"
#include "ctxdep/pipeline.hpp"

using namespace ctxdep;

int main(int argc, char** argv) {
  CLI::App app{"context-dependent message detection pipeline"};
  app.require_subcommand(1);

  PipelineConfig config;
  std::string format = "jsonl";
  std::string counting = "raw_tokens";
  app.add_option("--workspace", config.workspace, "artifact directory")
      ->capture_default_str();
  app.add_option("--seed", config.seed, "global seed")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  SyntheticSpec spec;
  synth->add_option("--n-messages", spec.n_messages)->capture_default_str();
  synth->add_option("--dependent-fraction", spec.dependent_fraction)
      ->capture_default_str();
  synth->add_option("--responses-min", spec.responses_min)->capture_default_str();
  synth->add_option("--responses-max", spec.responses_max)->capture_default_str();
  synth->add_option("--diverse-vocab", spec.diverse_vocab)->capture_default_str();
  synth->add_option("--concentrated-vocab", spec.concentrated_vocab)
      ->capture_default_str();
  synth->add_option("--synth-seed", spec.seed)->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "parse triples, group, build vocab");
  std::string input_path;
  ingest->add_option("--input", input_path, "triples file")->required();
  ingest->add_option("--format", format, "jsonl or tsv")->capture_default_str();
  ingest->add_flag("--lowercase,!--no-lowercase", config.lowercase);
  ingest->add_option("--stopwords", config.stopwords_path, "stopword file");
  ingest->add_option("--min-count", config.min_count)->capture_default_str();
  ingest->add_option("--min-responses", config.min_responses)->capture_default_str();

  auto* signals_cmd = app.add_subcommand("signals", "response diversity signals");
  signals_cmd->add_option("--stopwords", config.stopwords_path);
  signals_cmd->add_option("--counting", counting, "raw_tokens or post_stopword")
      ->capture_default_str();

  auto* hist = app.add_subcommand("histogram", "binned signal histograms");
  std::string labels_path;
  double bin_width = 0.05;
  hist->add_option("--labels", labels_path)->required();
  hist->add_option("--bin-width", bin_width)->capture_default_str();
  hist->add_option("--stopwords", config.stopwords_path);

  auto* comb = app.add_subcommand("train-combiner", "signal combiner SVM");
  comb->add_option("--labels", labels_path)->required();
  comb->add_option("--stopwords", config.stopwords_path);

  auto* weak = app.add_subcommand("weaklabel", "build the weak-label dataset");
  weak->add_option("--stopwords", config.stopwords_path);

  auto* train = app.add_subcommand("train-lstm", "train the LSTM regressor");
  std::string exclude_path;
  train->add_option("--exclude", exclude_path, "labels file of held-out messages");
  train->add_option("--d-w", config.dims.d_w)->capture_default_str();
  train->add_option("--d-h", config.dims.d_h)->capture_default_str();
  train->add_option("--d-s", config.dims.d_s)->capture_default_str();
  train->add_option("--learning-rate", config.lstm.learning_rate)
      ->capture_default_str();
  train->add_option("--epochs", config.lstm.epochs)->capture_default_str();
  train->add_option("--batch-size", config.lstm.batch_size)->capture_default_str();
  train->add_option("--dropout-rate", config.lstm.dropout_rate)
      ->capture_default_str();
  train->add_option("--init-scale", config.lstm.init_scale)->capture_default_str();
  train->add_option("--grad-clip", config.lstm.grad_clip)->capture_default_str();

  auto* tune = app.add_subcommand("tune-threshold", "tune the decision threshold");
  std::string system = "lstm";
  tune->add_option("--labels", labels_path)->required();
  tune->add_option("--system", system, "lstm, length, or mdf")
      ->capture_default_str();

  auto* pred = app.add_subcommand("predict", "classify messages");
  std::string messages_path;
  pred->add_option("--messages", messages_path, "labels-format file")->required();
  pred->add_option("--system", system)->capture_default_str();

  auto* eval_cmd = app.add_subcommand("evaluate", "accuracy report + sign tests");
  std::vector<std::string> system_specs;
  eval_cmd->add_option("--labels", labels_path)->required();
  eval_cmd->add_option("--system", system_specs,
                       "name=predictions.tsv (repeatable)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (format == "tsv")
      config.format = TripleFormat::kTsv;
    else if (format != "jsonl")
      throw ValidationError("--format must be jsonl or tsv");
    if (counting == "post_stopword")
      config.counting = LengthCounting::kPostStopword;
    else if (counting != "raw_tokens")
      throw ValidationError("--counting must be raw_tokens or post_stopword");
    config.lstm.seed = config.seed;
    std::filesystem::create_directories(config.workspace);

    if (synth->parsed()) {
      stage_synth(config, spec);
    } else if (ingest->parsed()) {
      stage_ingest(config, input_path);
    } else if (signals_cmd->parsed()) {
      stage_signals(config);
    } else if (hist->parsed()) {
      stage_histogram(config, labels_path, bin_width);
    } else if (comb->parsed()) {
      CvResult cv = stage_train_combiner(config, labels_path);
      std::cout << "best C = " << cv.best_C
                << ", cv mean accuracy = " << cv.mean_accuracy << "\n";
    } else if (weak->parsed()) {
      WeakDatasetManifest m = stage_weaklabel(config);
      std::cout << "weak examples: " << m.eligible << " (flagged " << m.flagged
                << ", degenerate " << m.degenerate << ")\n";
    } else if (train->parsed()) {
      stage_train_lstm(config, exclude_path);
    } else if (tune->parsed()) {
      Threshold t = stage_tune_threshold(config, labels_path, system);
      std::cout << "T = " << t.T << ", tuned accuracy = " << t.tuned_accuracy
                << "\n";
    } else if (pred->parsed()) {
      stage_predict(config, messages_path, system);
    } else if (eval_cmd->parsed()) {
      std::vector<std::pair<std::string, std::string>> systems;
      for (const auto& s : system_specs) {
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
          throw ValidationError("--system expects name=path, got: " + s);
        systems.emplace_back(s.substr(0, eq), s.substr(eq + 1));
      }
      EvalReport report = stage_evaluate(config, labels_path, systems);
      std::cout << report.to_text();
    }
  } catch (const DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
