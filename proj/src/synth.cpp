#include "ctxdep/synth.hpp"

#include <algorithm>
#include <set>

#include "ctxdep/common.hpp"
#include "json.hpp"

namespace ctxdep {

namespace {

std::string shared_token(Rng& rng) {
  return "w" + std::to_string(rng.uniform_int(0, 49));
}

std::string class_token(Rng& rng, bool dependent) {
  return (dependent ? "q" : "s") + std::to_string(rng.uniform_int(0, 19));
}

std::vector<std::string> make_message(Rng& rng, bool dependent) {
  std::size_t len = static_cast<std::size_t>(rng.uniform_int(2, 6));
  std::vector<std::string> tokens;
  tokens.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    if (rng.uniform() < 0.6)
      tokens.push_back(class_token(rng, dependent));
    else
      tokens.push_back(shared_token(rng));
  }
  return tokens;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// rank-weighted pick, weight 1/(rank+1)
std::size_t zipf_pick(Rng& rng, const std::vector<double>& cumulative) {
  double u = rng.uniform() * cumulative.back();
  auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<std::size_t>(it - cumulative.begin());
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.dependent_fraction < 0.0 || spec.dependent_fraction > 1.0)
    throw ValidationError("dependent_fraction must be in [0,1]");
  if (spec.responses_min < 1 || spec.responses_max < spec.responses_min)
    throw ValidationError("invalid responses-per-message range");

  Rng rng(spec.seed);
  std::vector<double> zipf_cum(spec.concentrated_vocab);
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.concentrated_vocab; ++i) {
    acc += 1.0 / static_cast<double>(i + 1);
    zipf_cum[i] = acc;
  }

  std::size_t n_dependent = static_cast<std::size_t>(
      spec.dependent_fraction * static_cast<double>(spec.n_messages) + 0.5);

  SyntheticCorpus corpus;
  std::set<std::string> seen;
  for (std::size_t m = 0; m < spec.n_messages; ++m) {
    bool dependent = m < n_dependent;
    std::vector<std::string> tokens;
    std::string text;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      tokens = make_message(rng, dependent);
      text = join(tokens);
      if (seen.insert(text).second) break;
      if (attempt == 999) throw ValidationError("synthetic message space exhausted");
    }

    LabeledMessage lm;
    lm.message.tokens = tokens;
    lm.label = dependent ? 1 : -1;
    corpus.labels.push_back(std::move(lm));

    std::size_t n_resp = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(spec.responses_min),
        static_cast<std::int64_t>(spec.responses_max)));

    if (dependent) {
      for (std::size_t r = 0; r < n_resp; ++r) {
        std::size_t len = static_cast<std::size_t>(rng.uniform_int(6, 12));
        std::vector<std::string> resp;
        resp.reserve(len);
        for (std::size_t i = 0; i < len; ++i)
          resp.push_back("r" + std::to_string(rng.uniform_int(
                                   0, static_cast<std::int64_t>(spec.diverse_vocab) - 1)));
        corpus.triples.push_back(Triple{"ctx", text, join(resp)});
      }
    } else {
      // three stock phrases per message; the first dominates
      std::vector<std::string> phrases;
      for (int p = 0; p < 3; ++p) {
        std::size_t len = static_cast<std::size_t>(rng.uniform_int(1, 3));
        std::vector<std::string> phrase;
        for (std::size_t i = 0; i < len; ++i)
          phrase.push_back("c" + std::to_string(zipf_pick(rng, zipf_cum)));
        phrases.push_back(join(phrase));
      }
      for (std::size_t r = 0; r < n_resp; ++r) {
        double u = rng.uniform();
        const std::string& phrase =
            u < 0.6 ? phrases[0] : (u < 0.9 ? phrases[1] : phrases[2]);
        corpus.triples.push_back(Triple{"ctx", text, phrase});
      }
    }
  }

  std::sort(corpus.labels.begin(), corpus.labels.end(),
            [](const LabeledMessage& a, const LabeledMessage& b) {
              return a.message.joined() < b.message.joined();
            });
  return corpus;
}

std::string triples_to_jsonl(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    nlohmann::ordered_json j;
    j["context"] = t.context;
    j["message"] = t.message;
    j["response"] = t.response;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace ctxdep
