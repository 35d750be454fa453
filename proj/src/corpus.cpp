#include "ctxdep/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <sstream>

#include "ctxdep/common.hpp"
#include "json.hpp"

namespace ctxdep {

std::string TokenSeq::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<Triple> parse_triples(std::istream& stream, TripleFormat format,
                                  ParseDiagnostics* diagnostics) {
  if (!stream) throw IoError("unreadable triple stream");
  std::vector<Triple> triples;
  ParseDiagnostics diag;
  std::string line;
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (format == TripleFormat::kJsonl) {
      auto rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object() || !rec.contains("message") ||
          !rec.contains("response") || !rec["message"].is_string() ||
          !rec["response"].is_string()) {
        ++diag.malformed;
        continue;
      }
      Triple t;
      if (rec.contains("context") && rec["context"].is_string())
        t.context = rec["context"].get<std::string>();
      t.message = rec["message"].get<std::string>();
      t.response = rec["response"].get<std::string>();
      triples.push_back(std::move(t));
      ++diag.well_formed;
    } else {
      std::size_t first = line.find('\t');
      std::size_t second = first == std::string::npos
                               ? std::string::npos
                               : line.find('\t', first + 1);
      if (first == std::string::npos || second == std::string::npos ||
          line.find('\t', second + 1) != std::string::npos) {
        ++diag.malformed;
        continue;
      }
      triples.push_back(Triple{line.substr(0, first),
                               line.substr(first + 1, second - first - 1),
                               line.substr(second + 1)});
      ++diag.well_formed;
    }
  }
  if (stream.bad()) throw IoError("I/O failure while reading triples");
  std::size_t total = diag.well_formed + diag.malformed;
  if (total > 0 && diag.malformed * 2 > total)
    throw FormatError(">50% malformed records; wrong --format?");
  if (diagnostics) *diagnostics = diag;
  return triples;
}

namespace {

bool is_punct_only(const std::string& token) {
  for (unsigned char c : token) {
    if (c >= 0x80 || !std::ispunct(c)) return false;
  }
  return !token.empty();
}

// ASCII whitespace plus NBSP (U+00A0) and ideographic space (U+3000)
void split_whitespace(const std::string& text, std::vector<std::string>& out) {
  std::string cur;
  std::size_t i = 0;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  while (i < text.size()) {
    unsigned char c = text[i];
    if (std::isspace(c)) {
      flush();
      ++i;
    } else if (c == 0xc2 && i + 1 < text.size() &&
               static_cast<unsigned char>(text[i + 1]) == 0xa0) {
      flush();
      i += 2;
    } else if (c == 0xe3 && i + 2 < text.size() &&
               static_cast<unsigned char>(text[i + 1]) == 0x80 &&
               static_cast<unsigned char>(text[i + 2]) == 0x80) {
      flush();
      i += 3;
    } else {
      cur.push_back(static_cast<char>(c));
      ++i;
    }
  }
  flush();
}

}  // namespace

TokenSeq tokenize(const std::string& text, bool lowercase,
                  const std::unordered_set<std::string>* stopwords) {
  std::vector<std::string> raw;
  split_whitespace(text, raw);
  TokenSeq seq;
  for (auto& token : raw) {
    if (lowercase) {
      for (auto& c : token)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (is_punct_only(token)) continue;
    if (stopwords && stopwords->count(token)) continue;
    seq.tokens.push_back(std::move(token));
  }
  return seq;
}

std::vector<ResponseGroup> group_by_message(const std::vector<Triple>& triples,
                                            const TokenizerConfig& config,
                                            std::size_t min_responses,
                                            ParseDiagnostics* diagnostics) {
  // std::map keeps groups sorted by message text, which downstream stages
  // rely on for determinism.
  std::map<std::string, ResponseGroup> groups;
  ParseDiagnostics diag;
  for (const auto& triple : triples) {
    TokenSeq msg = tokenize(triple.message, config.lowercase,
                            config.stopwords.empty() ? nullptr : &config.stopwords);
    TokenSeq resp = tokenize(triple.response, config.lowercase, nullptr);
    if (msg.empty() || resp.empty()) {
      ++diag.dropped_empty;
      continue;
    }
    std::string key = msg.joined();
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
      it->second.message = std::move(msg);
      it->second.message_raw = triple.message;
    }
    it->second.responses.push_back(std::move(resp));
  }
  std::vector<ResponseGroup> out;
  out.reserve(groups.size());
  for (auto& [key, group] : groups) {
    group.frequency = group.responses.size();
    group.flagged = group.frequency < min_responses;
    out.push_back(std::move(group));
  }
  if (diagnostics) *diagnostics = diag;
  return out;
}

Vocabulary::Vocabulary() {
  id_to_token_ = {"<unk>", "<pad>"};
  token_to_id_ = {{"<unk>", kUnkId}, {"<pad>", kPadId}};
}

std::uint32_t Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(std::uint32_t id) const {
  if (id >= id_to_token_.size()) throw ValidationError("token id out of range");
  return id_to_token_[id];
}

std::uint64_t Vocabulary::frequency(const std::string& token) const {
  auto it = frequencies_.find(token);
  return it == frequencies_.end() ? 0 : it->second;
}

std::vector<std::uint32_t> Vocabulary::encode(const TokenSeq& seq) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(seq.tokens.size());
  for (const auto& token : seq.tokens) ids.push_back(lookup(token));
  return ids;
}

std::string Vocabulary::content_hash() const {
  std::string blob;
  for (const auto& token : id_to_token_) {
    blob += token;
    blob.push_back('\n');
  }
  return fnv1a64_hex(blob);
}

std::string Vocabulary::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["tokens"] = id_to_token_;
  nlohmann::ordered_json freqs = nlohmann::ordered_json::object();
  for (const auto& token : id_to_token_) {
    auto it = frequencies_.find(token);
    freqs[token] = it == frequencies_.end() ? 0 : it->second;
  }
  j["frequencies"] = freqs;
  return j.dump();
}

Vocabulary Vocabulary::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  Vocabulary v;
  v.id_to_token_ = j.at("tokens").get<std::vector<std::string>>();
  if (v.id_to_token_.size() < 2 || v.id_to_token_[0] != "<unk>" ||
      v.id_to_token_[1] != "<pad>")
    throw FormatError("vocabulary file missing reserved tokens");
  v.token_to_id_.clear();
  for (std::uint32_t i = 0; i < v.id_to_token_.size(); ++i)
    v.token_to_id_[v.id_to_token_[i]] = i;
  if (j.contains("frequencies")) {
    for (auto& [token, count] : j.at("frequencies").items())
      v.frequencies_[token] = count.get<std::uint64_t>();
  }
  return v;
}

Vocabulary build_vocabulary(const std::vector<ResponseGroup>& groups,
                            std::size_t min_count) {
  if (min_count < 1) throw ValidationError("min_count must be >= 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& group : groups) {
    for (const auto& token : group.message.tokens) ++counts[token];
    for (const auto& resp : group.responses)
      for (const auto& token : resp.tokens) ++counts[token];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [token, count] : counts)
    if (count >= min_count) kept.emplace_back(token, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (auto& [token, count] : kept) {
    v.token_to_id_[token] = static_cast<std::uint32_t>(v.id_to_token_.size());
    v.id_to_token_.push_back(token);
  }
  v.frequencies_ = std::move(counts);
  return v;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::istringstream in(read_file(path));
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

std::string groups_to_jsonl(const std::vector<ResponseGroup>& groups) {
  std::string out;
  for (const auto& group : groups) {
    nlohmann::ordered_json j;
    j["message"] = group.message.tokens;
    j["message_raw"] = group.message_raw;
    j["frequency"] = group.frequency;
    j["flagged"] = group.flagged;
    auto responses = nlohmann::ordered_json::array();
    for (const auto& resp : group.responses) responses.push_back(resp.tokens);
    j["responses"] = responses;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<ResponseGroup> groups_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::vector<ResponseGroup> groups;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    ResponseGroup group;
    group.message.tokens = j.at("message").get<std::vector<std::string>>();
    group.message_raw = j.value("message_raw", group.message.joined());
    group.frequency = j.at("frequency").get<std::size_t>();
    group.flagged = j.value("flagged", false);
    for (const auto& resp : j.at("responses")) {
      TokenSeq seq;
      seq.tokens = resp.get<std::vector<std::string>>();
      group.responses.push_back(std::move(seq));
    }
    if (group.frequency != group.responses.size())
      throw FormatError("group frequency does not match response count");
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace ctxdep
