#include "ctxdep/signals.hpp"
#include "ctxdep/synth.hpp"
#include "doctest.h"

using namespace ctxdep;

TEST_CASE("dependent_fraction zero yields all negative labels") {
  SyntheticSpec spec;
  spec.n_messages = 50;
  spec.dependent_fraction = 0.0;
  auto corpus = generate_synthetic(spec);
  CHECK(corpus.labels.size() == 50);
  for (const auto& lm : corpus.labels) CHECK(lm.label == -1);
}

TEST_CASE("fixed seed reproduces the corpus exactly") {
  SyntheticSpec spec;
  spec.n_messages = 80;
  auto a = generate_synthetic(spec);
  auto b = generate_synthetic(spec);
  CHECK(triples_to_jsonl(a.triples) == triples_to_jsonl(b.triples));
  CHECK(labels_to_tsv(a.labels) == labels_to_tsv(b.labels));
}

TEST_CASE("messages are distinct and labels sorted by message text") {
  SyntheticSpec spec;
  spec.n_messages = 200;
  auto corpus = generate_synthetic(spec);
  for (std::size_t i = 1; i < corpus.labels.size(); ++i)
    CHECK(corpus.labels[i - 1].message.joined() <
          corpus.labels[i].message.joined());
}

TEST_CASE("every message meets the responses-per-message floor") {
  SyntheticSpec spec;
  spec.n_messages = 60;
  spec.responses_min = 10;
  spec.responses_max = 15;
  auto corpus = generate_synthetic(spec);
  auto groups = group_by_message(corpus.triples, TokenizerConfig{}, 2);
  CHECK(groups.size() == 60);
  for (const auto& g : groups) {
    CHECK(g.frequency >= 10);
    CHECK(g.frequency <= 15);
  }
}

TEST_CASE("dependent messages have higher mean raw entropy than independent") {
  SyntheticSpec spec;
  spec.n_messages = 200;
  spec.dependent_fraction = 0.5;
  auto corpus = generate_synthetic(spec);
  auto groups = group_by_message(corpus.triples, TokenizerConfig{}, 2);
  auto table = compute_signals(groups, {}, LengthCounting::kRawTokens);

  // labels are sorted identically to groups
  REQUIRE(groups.size() == corpus.labels.size());
  double dep_sum = 0.0, ind_sum = 0.0;
  std::size_t dep_n = 0, ind_n = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    REQUIRE(groups[i].message.joined() == corpus.labels[i].message.joined());
    if (!table.eligible[i]) continue;
    if (corpus.labels[i].label > 0) {
      dep_sum += table.signals[i].raw_entropy;
      ++dep_n;
    } else {
      ind_sum += table.signals[i].raw_entropy;
      ++ind_n;
    }
  }
  REQUIRE(dep_n > 0);
  REQUIRE(ind_n > 0);
  CHECK(dep_sum / dep_n > ind_sum / ind_n);
}

TEST_CASE("invalid specs are rejected") {
  SyntheticSpec spec;
  spec.dependent_fraction = 1.5;
  CHECK_THROWS(generate_synthetic(spec));
  spec.dependent_fraction = 0.3;
  spec.responses_min = 5;
  spec.responses_max = 2;
  CHECK_THROWS(generate_synthetic(spec));
}
