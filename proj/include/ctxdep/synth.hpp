#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxdep/corpus.hpp"
#include "ctxdep/weaklabel.hpp"

namespace ctxdep {

struct SyntheticSpec {
  std::size_t n_messages = 2000;
  double dependent_fraction = 0.3;
  std::size_t responses_min = 10;
  std::size_t responses_max = 20;
  std::size_t diverse_vocab = 800;      // response vocabulary, dependent side
  std::size_t concentrated_vocab = 30;  // response vocabulary, independent side
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  std::vector<Triple> triples;
  std::vector<LabeledMessage> labels;  // one per distinct message, sorted
};

// Dependent messages get long responses drawn near-uniformly from a large
// vocabulary; independent messages repeat a handful of short phrases with a
// dominant one. Message texts carry class-leaning tokens mixed with a shared
// vocabulary so length and word-frequency cues stay weak.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

std::string triples_to_jsonl(const std::vector<Triple>& triples);

}  // namespace ctxdep
