#include <cstdlib>
#include <filesystem>
#include <regex>
#include <string>

#include "ctxdep/common.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kCli = CTXDEP_CLI_PATH;

int run(const std::string& args) {
  std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string strip_timestamp(std::string text) {
  return std::regex_replace(text, std::regex("\"timestamp\": *[0-9]+"),
                            "\"timestamp\": 0");
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() /
          ("ctxdep_cli_test_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string ws() const { return "--workspace " + dir.string() + " "; }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  static int counter;
};
int Workspace::counter = 0;

}  // namespace

TEST_CASE("stage run out of order reports the missing dependency") {
  Workspace w;
  CHECK(run(w.ws() + "signals") == 3);
  CHECK(run(w.ws() + "weaklabel") == 3);
}

TEST_CASE("invalid flags are validation errors") {
  Workspace w;
  CHECK(run(w.ws() + "synth --n-messages 10") == 0);
  CHECK(run(w.ws() + "ingest --input " + w.path("corpus.jsonl") +
            " --format bogus") == 2);
}

TEST_CASE("full synthetic pipeline produces a report") {
  Workspace w;
  REQUIRE(run(w.ws() + "synth --n-messages 120 --dependent-fraction 0.4") == 0);

  // deterministic interleaved split of the sorted labels file
  auto labels = ctxdep::read_file(w.path("labels.tsv"));
  std::string train, tune, eval_set;
  std::size_t start = 0, line_no = 0;
  while (start < labels.size()) {
    std::size_t end = labels.find('\n', start);
    std::string line = labels.substr(start, end - start + 1);
    (line_no % 3 == 0 ? train : line_no % 3 == 1 ? tune : eval_set) += line;
    start = end + 1;
    ++line_no;
  }
  ctxdep::write_file(w.path("l_train.tsv"), train);
  ctxdep::write_file(w.path("l_tune.tsv"), tune);
  ctxdep::write_file(w.path("l_eval.tsv"), eval_set);

  REQUIRE(run(w.ws() + "ingest --input " + w.path("corpus.jsonl")) == 0);
  REQUIRE(run(w.ws() + "signals") == 0);
  REQUIRE(run(w.ws() + "histogram --labels " + w.path("labels.tsv")) == 0);
  REQUIRE(run(w.ws() + "train-combiner --labels " + w.path("l_train.tsv")) == 0);
  REQUIRE(run(w.ws() + "weaklabel") == 0);
  REQUIRE(run(w.ws() +
              "train-lstm --d-w 16 --d-h 16 --d-s 8 --epochs 10 --exclude " +
              w.path("l_eval.tsv")) == 0);
  REQUIRE(run(w.ws() + "tune-threshold --labels " + w.path("l_tune.tsv") +
              " --system lstm") == 0);
  REQUIRE(run(w.ws() + "tune-threshold --labels " + w.path("l_tune.tsv") +
              " --system length") == 0);
  REQUIRE(run(w.ws() + "tune-threshold --labels " + w.path("l_tune.tsv") +
              " --system mdf") == 0);
  for (std::string system : {"lstm", "length", "mdf"})
    REQUIRE(run(w.ws() + "predict --messages " + w.path("l_eval.tsv") +
                " --system " + system) == 0);
  REQUIRE(run(w.ws() + "evaluate --labels " + w.path("l_eval.tsv") +
              " --system lstm=" + w.path("preds_lstm.tsv") +
              " --system length=" + w.path("preds_length.tsv") +
              " --system mdf=" + w.path("preds_mdf.tsv")) == 0);

  CHECK(fs::exists(w.path("report.json")));
  CHECK(fs::exists(w.path("report.txt")));
  CHECK(fs::exists(w.path("histogram_entropy.csv")));

  SUBCASE("rerunning a stage with unchanged inputs is byte-identical") {
    auto signals_before = ctxdep::read_file(w.path("signals.tsv"));
    auto stats_before = ctxdep::read_file(w.path("norm_stats.json"));
    auto manifest_before = ctxdep::read_file(w.path("signals.manifest.json"));
    REQUIRE(run(w.ws() + "signals") == 0);
    CHECK(ctxdep::read_file(w.path("signals.tsv")) == signals_before);
    CHECK(ctxdep::read_file(w.path("norm_stats.json")) == stats_before);
    CHECK(strip_timestamp(ctxdep::read_file(w.path("signals.manifest.json"))) ==
          strip_timestamp(manifest_before));
  }

  SUBCASE("manifests capture stage lineage") {
    auto manifest = ctxdep::read_file(w.path("train-lstm.manifest.json"));
    CHECK(manifest.find("\"stage\": \"train-lstm\"") != std::string::npos);
    CHECK(manifest.find("weak.jsonl") != std::string::npos);
    CHECK(manifest.find("\"seed\"") != std::string::npos);
  }
}
