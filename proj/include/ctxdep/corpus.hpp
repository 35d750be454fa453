#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ctxdep {

struct Triple {
  std::string context;  // may be empty
  std::string message;
  std::string response;
};

struct TokenSeq {
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> ids;  // optional; same length as tokens when set

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
  std::string joined() const;
};

struct ResponseGroup {
  TokenSeq message;
  std::string message_raw;
  std::vector<TokenSeq> responses;  // tokenized without stopword removal
  std::size_t frequency = 0;        // == responses.size()
  bool flagged = false;             // below min_responses; excluded from signals
};

enum class TripleFormat { kJsonl, kTsv };

struct ParseDiagnostics {
  std::size_t well_formed = 0;
  std::size_t malformed = 0;
  std::size_t dropped_empty = 0;  // empty message/response after tokenization
};

struct TokenizerConfig {
  bool lowercase = true;
  std::unordered_set<std::string> stopwords;  // applied to messages only here
};

// Vocabulary with reserved UNK=0 and PAD=1; dense ids assigned by
// descending corpus frequency, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr std::uint32_t kUnkId = 0;
  static constexpr std::uint32_t kPadId = 1;

  Vocabulary();

  std::uint32_t lookup(const std::string& token) const;  // UNK when absent
  const std::string& token(std::uint32_t id) const;
  std::size_t size() const { return id_to_token_.size(); }
  std::uint64_t frequency(const std::string& token) const;

  std::vector<std::uint32_t> encode(const TokenSeq& seq) const;

  const std::vector<std::string>& id_to_token() const { return id_to_token_; }

  // order-sensitive content hash, used to bind model files to a vocabulary
  std::string content_hash() const;

  std::string to_json() const;
  static Vocabulary from_json(const std::string& text);

  friend Vocabulary build_vocabulary(const std::vector<ResponseGroup>&,
                                     std::size_t);

 private:
  std::unordered_map<std::string, std::uint32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::uint64_t> frequencies_;
};

std::vector<Triple> parse_triples(std::istream& stream, TripleFormat format,
                                  ParseDiagnostics* diagnostics = nullptr);

TokenSeq tokenize(const std::string& text, bool lowercase,
                  const std::unordered_set<std::string>* stopwords = nullptr);

// One group per distinct tokenized message, sorted by message text.
// Groups with fewer than min_responses responses are flagged, not dropped.
std::vector<ResponseGroup> group_by_message(const std::vector<Triple>& triples,
                                            const TokenizerConfig& config,
                                            std::size_t min_responses,
                                            ParseDiagnostics* diagnostics = nullptr);

Vocabulary build_vocabulary(const std::vector<ResponseGroup>& groups,
                            std::size_t min_count);

std::unordered_set<std::string> load_stopwords(const std::string& path);

// groups <-> JSONL {message, frequency, responses:[...]}
std::string groups_to_jsonl(const std::vector<ResponseGroup>& groups);
std::vector<ResponseGroup> groups_from_jsonl(const std::string& text);

}  // namespace ctxdep
