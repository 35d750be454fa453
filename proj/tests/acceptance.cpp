// End-to-end acceptance suite. Each numbered check prints one PASS/FAIL line;
// the process exits nonzero when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ctxdep/pipeline.hpp"

using namespace ctxdep;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %d %s (%s)\n", ok ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

std::string fmt(const char* format, double a, double b = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), format, a, b);
  return buffer;
}

// ---- 1. signal oracle equivalence -----------------------------------------

ResponseGroup random_group(Rng& rng) {
  ResponseGroup g;
  g.message.tokens = {"m" + std::to_string(rng.uniform_int(0, 999))};
  std::size_t n_responses = std::size_t(rng.uniform_int(2, 12));
  for (std::size_t r = 0; r < n_responses; ++r) {
    TokenSeq resp;
    std::size_t len = std::size_t(rng.uniform_int(1, 9));
    for (std::size_t t = 0; t < len; ++t)
      resp.tokens.push_back("t" + std::to_string(rng.uniform_int(0, 40)));
    g.responses.push_back(resp);
  }
  g.frequency = g.responses.size();
  return g;
}

void criterion_signals() {
  Timer timer;
  Rng rng(2024);
  std::vector<ResponseGroup> groups;
  for (int i = 0; i < 1000; ++i) groups.push_back(random_group(rng));
  auto table = compute_signals(groups, {}, LengthCounting::kRawTokens);

  double max_diff = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    // naive recount, independent of the pipeline's accumulation order
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& resp : groups[i].responses)
      for (const auto& tok : resp.tokens) {
        ++counts[tok];
        ++total;
      }
    double h = 0.0, max_p = 0.0;
    for (const auto& [tok, c] : counts) {
      double p = double(c) / double(total);
      h -= p * std::log2(p);
      max_p = std::max(max_p, p);
    }
    double avg = double(total) / double(groups[i].responses.size());
    max_diff = std::max(max_diff, std::abs(table.signals[i].raw_entropy - h));
    max_diff = std::max(max_diff, std::abs(table.signals[i].m_p - (1.0 - max_p)));
    max_diff = std::max(max_diff, std::abs(table.signals[i].raw_avg_len - avg));
  }
  double elapsed = timer.seconds();
  report(1, "signal oracle equivalence on 1000 random groups",
         max_diff < 1e-12 && elapsed < 10.0,
         fmt("max diff %.3g, %.1fs", max_diff, elapsed));
}

// ---- 2. gradient correctness ----------------------------------------------

void criterion_gradients() {
  Timer timer;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    LstmDims dims;
    dims.vocab_size = 20;
    dims.d_w = 8;
    dims.d_h = 8;
    dims.d_s = 4;
    auto params = init_params(dims, 0.08, seed);
    Rng rng(seed * 1000 + 7);
    for (std::size_t len = 1; len <= 7; ++len) {
      LstmExample example;
      for (std::size_t t = 0; t < len; ++t)
        example.ids.push_back(std::uint32_t(rng.uniform_int(0, 19)));
      example.y = rng.uniform(-1.0, 1.0);
      auto result = gradient_check(params, example, 1e-5);
      worst = std::max(worst, result.max_relative_error);
    }
  }
  double elapsed = timer.seconds();
  report(2, "finite-difference gradient check, 10 seeds, lengths 1-7",
         worst < 1e-4 && elapsed < 60.0,
         fmt("max relative error %.3g, %.1fs", worst, elapsed));
}

// ---- 3. teacher-student convergence ----------------------------------------

double eval_loss(const LstmParams& params, const std::vector<LstmExample>& data) {
  double total = 0.0;
  for (const auto& example : data) {
    double diff = forward(params, example.ids) - example.y;
    total += diff * diff;
  }
  return total / double(data.size());
}

struct TeacherStudent {
  std::vector<LstmExample> dataset;
  LstmDims dims;
  TrainConfig config;
};

TeacherStudent teacher_student_setup() {
  TeacherStudent ts;
  ts.dims.vocab_size = 12;
  ts.dims.d_w = 16;
  ts.dims.d_h = 16;
  ts.dims.d_s = 8;
  ts.config.epochs = 200;
  // Teacher kept in the same small-weight regime the student starts in, with
  // an opened update gate and a scaled readout so its targets vary on a scale
  // the default learning rate can actually reach within the epoch budget.
  auto teacher = init_params(ts.dims, 0.08, 777);
  for (Eigen::Index k = 0; k < teacher.b[3].size(); ++k) teacher.b[3](k) += 0.8;
  teacher.W2 *= 300.0;
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    LstmExample example;
    std::size_t len = std::size_t(rng.uniform_int(2, 8));
    for (std::size_t t = 0; t < len; ++t)
      example.ids.push_back(std::uint32_t(rng.uniform_int(0, 11)));
    example.y = forward(teacher, example.ids);
    ts.dataset.push_back(example);
  }
  return ts;
}

std::string criterion_teacher_student() {
  Timer timer;
  auto ts = teacher_student_setup();
  double before =
      eval_loss(init_params(ts.dims, ts.config.init_scale, ts.config.seed),
                ts.dataset);
  auto trained = train_lstm(ts.dataset, ts.dims, ts.config);
  double after = eval_loss(trained, ts.dataset);
  double elapsed = timer.seconds();
  double reduction = 1.0 - after / before;
  report(3, "teacher-student loss reduction within 200 epochs",
         reduction >= 0.9 && elapsed < 120.0,
         fmt("reduction %.1f%%, %.1fs", 100.0 * reduction, elapsed));
  return lstm_to_json(trained, ts.config, "unbound");
}

// ---- 4. end-to-end synthetic pipeline --------------------------------------

struct E2eOutcome {
  double weak_agreement = 0.0;
  double lstm_acc = 0.0;
  double length_acc = 0.0;
  double mdf_acc = 0.0;
  double p_value = 1.0;
  std::string best_baseline;
  double seconds = 0.0;
};

E2eOutcome run_e2e(const fs::path& workspace) {
  Timer timer;
  fs::remove_all(workspace);
  fs::create_directories(workspace);

  PipelineConfig config;
  config.workspace = workspace.string();
  config.dims.d_w = 64;
  config.dims.d_h = 64;
  config.dims.d_s = 32;
  config.seed = 1;
  config.lstm.seed = 1;

  SyntheticSpec spec;  // 2000 messages, 30% dependent, 10-20 responses
  stage_synth(config, spec);

  // labels.tsv is sorted by message text; shuffle before slicing so the
  // combiner / tuning / evaluation splits carry both classes
  auto labels = labels_from_tsv(read_file(config.path(artifacts::kLabels)));
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  Rng(123).shuffle(order);
  auto slice = [&](std::size_t begin, std::size_t count) {
    std::vector<LabeledMessage> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(labels[order[begin + i]]);
    return out;
  };
  std::string combiner_path = (workspace / "labels_combiner.tsv").string();
  std::string tune_path = (workspace / "labels_tune.tsv").string();
  std::string eval_path = (workspace / "labels_eval.tsv").string();
  write_file(combiner_path, labels_to_tsv(slice(0, 200)));
  write_file(tune_path, labels_to_tsv(slice(200, 200)));
  write_file(eval_path, labels_to_tsv(slice(400, 500)));

  stage_ingest(config, config.path(artifacts::kCorpus));
  stage_signals(config);
  stage_train_combiner(config, combiner_path);
  stage_weaklabel(config);
  stage_train_lstm(config, eval_path);
  std::vector<std::pair<std::string, std::string>> preds;
  for (std::string system : {"lstm", "length", "mdf"}) {
    stage_tune_threshold(config, tune_path, system);
    stage_predict(config, eval_path, system);
    preds.emplace_back(system, config.path(predictions_artifact(system)));
  }
  auto eval_report = stage_evaluate(config, eval_path, preds);

  E2eOutcome out;
  auto weak = weak_dataset_from_jsonl(read_file(config.path(artifacts::kWeak)));
  std::map<std::string, double> weak_y;
  for (const auto& example : weak) weak_y[example.message.joined()] = example.y;
  std::size_t agree = 0;
  for (const auto& lm : labels) {
    auto it = weak_y.find(lm.message.joined());
    if (it == weak_y.end()) continue;
    int pred = it->second > 0.0 ? 1 : -1;
    if (pred == lm.label) ++agree;
  }
  out.weak_agreement = double(agree) / double(labels.size());

  for (const auto& system : eval_report.systems) {
    if (system.name == "lstm") out.lstm_acc = system.accuracy;
    if (system.name == "length") out.length_acc = system.accuracy;
    if (system.name == "mdf") out.mdf_acc = system.accuracy;
  }
  out.best_baseline = out.length_acc >= out.mdf_acc ? "length" : "mdf";
  for (const auto& pairwise : eval_report.sign_tests)
    if (pairwise.system_a == out.best_baseline ||
        pairwise.system_b == out.best_baseline)
      out.p_value = pairwise.test.p_value;
  out.seconds = timer.seconds();
  return out;
}

void criterion_e2e(const E2eOutcome& out) {
  bool ok = out.weak_agreement >= 0.95 && out.lstm_acc >= 0.85 &&
            out.lstm_acc > out.length_acc && out.lstm_acc > out.mdf_acc &&
            out.seconds < 300.0;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "weak agreement %.1f%%, lstm %.3f, length %.3f, mdf %.3f, "
                "sign test vs %s p=%.3g, %.1fs",
                100.0 * out.weak_agreement, out.lstm_acc, out.length_acc,
                out.mdf_acc, out.best_baseline.c_str(), out.p_value, out.seconds);
  report(4, "end-to-end synthetic pipeline", ok, detail);
}

// ---- 5. threshold tuner exactness ------------------------------------------

double dense_grid_best(const std::vector<double>& scores,
                       const std::vector<int>& labels) {
  double lo = *std::min_element(scores.begin(), scores.end()) - 1.0;
  double hi = *std::max_element(scores.begin(), scores.end()) + 1.0;
  double best = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    double T = lo + (hi - lo) * i / 10000.0;
    std::size_t correct = 0;
    for (std::size_t j = 0; j < scores.size(); ++j)
      if ((scores[j] > T ? 1 : -1) == labels[j]) ++correct;
    best = std::max(best, double(correct) / double(scores.size()));
  }
  return best;
}

void criterion_tuner() {
  Rng rng(404);
  std::size_t checked = 0, exact = 0;
  while (checked < 100) {
    std::size_t n = 2 + std::size_t(rng.uniform_int(0, 98));
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
      scores.push_back(rng.uniform(-4.0, 4.0));
      labels.push_back(rng.uniform() < 0.5 ? 1 : -1);
    }
    if (std::count(labels.begin(), labels.end(), 1) == 0 ||
        std::count(labels.begin(), labels.end(), -1) == 0)
      continue;
    ++checked;
    auto tuned = tune_threshold(scores, labels);
    if (tuned.tuned_accuracy == dense_grid_best(scores, labels)) ++exact;
  }
  report(5, "threshold tuner matches dense-grid brute force",
         exact == checked, fmt("%.0f/%.0f exact", double(exact), double(checked)));
}

// ---- 6. sign-test exactness -------------------------------------------------

double binomial_tail_oracle(std::size_t n, std::size_t k) {
  auto choose = [](std::size_t n, std::size_t j) {
    double c = 1.0;
    for (std::size_t i = 0; i < j; ++i) c = c * double(n - i) / double(i + 1);
    return c;
  };
  double scale = std::pow(0.5, double(n));
  double lower = 0.0, upper = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    double pmf = choose(n, j) * scale;
    if (j <= k) lower += pmf;
    if (j >= k) upper += pmf;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

SignTestResult sign_test_for(std::size_t n, std::size_t k) {
  std::vector<int> a, b, labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(1);
    a.push_back(i < k ? 1 : -1);
    b.push_back(i < k ? -1 : 1);
  }
  labels.push_back(1);
  a.push_back(1);
  b.push_back(1);
  return sign_test(a, b, labels);
}

void criterion_sign_test() {
  double max_diff = 0.0;
  for (std::size_t n = 1; n <= 30; ++n)
    for (std::size_t k = 0; k <= n; ++k)
      max_diff = std::max(max_diff, std::abs(sign_test_for(n, k).p_value -
                                             binomial_tail_oracle(n, k)));
  double pinned = sign_test_for(10, 10).p_value;
  bool ok = max_diff < 1e-12 && std::abs(pinned - 0.001953125) < 1e-12;
  report(6, "exact binomial sign test for all n<=30",
         ok, fmt("max diff %.3g, p(10,10)=%.9f", max_diff, pinned));
}

// ---- 7. determinism ----------------------------------------------------------

std::string read_or_empty(const fs::path& path) {
  return fs::exists(path) ? read_file(path.string()) : std::string();
}

void criterion_determinism(const std::string& model_a, const fs::path& ws_a,
                           const fs::path& ws_b) {
  auto ts = teacher_student_setup();
  auto retrained = train_lstm(ts.dataset, ts.dims, ts.config);
  bool model_same = lstm_to_json(retrained, ts.config, "unbound") == model_a;

  run_e2e(ws_b);
  bool files_same = true;
  std::string mismatched;
  for (const char* name : {artifacts::kLstmModel, artifacts::kCombiner,
                           artifacts::kWeak, artifacts::kReportJson,
                           artifacts::kReportText, artifacts::kTrainLog}) {
    if (read_or_empty(ws_a / name) != read_or_empty(ws_b / name)) {
      files_same = false;
      mismatched += std::string(" ") + name;
    }
  }
  report(7, "reruns with identical seeds are byte-identical",
         model_same && files_same,
         model_same && files_same
             ? "teacher-student model and all pipeline artifacts match"
             : ("mismatch:" + std::string(model_same ? "" : " ts-model") +
                mismatched));
}

// ---- 8. cross-validation protocol --------------------------------------------

void criterion_cv() {
  SyntheticSpec spec;
  auto corpus = generate_synthetic(spec);
  auto groups = group_by_message(corpus.triples, TokenizerConfig{}, 2);
  auto table = compute_signals(groups, {}, LengthCounting::kRawTokens);
  std::vector<std::pair<FeatureVector, double>> examples;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!table.eligible[i]) continue;
    examples.emplace_back(signal_features(table.signals[i]),
                          double(corpus.labels[i].label));
  }

  std::vector<double> grid = {0.01, 0.1, 1.0, 10.0, 100.0};
  auto cv = kfold_cv(examples, 5, grid, 3, 42);

  // exhaustive re-evaluation: one independent single-value run per grid point
  double grid_max = 0.0;
  bool per_value_match = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double mean = kfold_cv(examples, 5, {grid[i]}, 3, 42).mean_accuracy;
    grid_max = std::max(grid_max, mean);
    if (mean != cv.grid_mean_accuracies[i]) per_value_match = false;
  }
  bool ok = per_value_match && cv.mean_accuracy == grid_max;
  report(8, "5-fold CV selects a C attaining the grid maximum", ok,
         fmt("best C %.2f, mean accuracy %.4f", cv.best_C, cv.mean_accuracy));
}

}  // namespace

int main() {
  fs::path base = fs::temp_directory_path() / "ctxdep_acceptance";
  fs::path ws_a = base / "run_a";
  fs::path ws_b = base / "run_b";

  criterion_signals();
  criterion_gradients();
  std::string model_a = criterion_teacher_student();
  criterion_e2e(run_e2e(ws_a));
  criterion_tuner();
  criterion_sign_test();
  criterion_determinism(model_a, ws_a, ws_b);
  criterion_cv();

  fs::remove_all(base);
  std::printf("%s\n", failures == 0 ? "all acceptance checks passed"
                                    : "acceptance checks FAILED");
  return failures == 0 ? 0 : 1;
}
