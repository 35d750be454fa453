#include <cmath>
#include <map>

#include "ctxdep/common.hpp"
#include "ctxdep/signals.hpp"
#include "doctest.h"

using namespace ctxdep;

namespace {

ResponseGroup make_group(std::vector<std::vector<std::string>> responses) {
  ResponseGroup g;
  g.message.tokens = {"m"};
  for (auto& r : responses) {
    TokenSeq seq;
    seq.tokens = std::move(r);
    g.responses.push_back(std::move(seq));
  }
  g.frequency = g.responses.size();
  return g;
}

WordDistribution make_dist(std::vector<double> probs) {
  WordDistribution d;
  for (std::size_t i = 0; i < probs.size(); ++i)
    d.probs.emplace_back("t" + std::to_string(i), probs[i]);
  return d;
}

// independent route: naive counting plus direct log2 evaluation
double brute_force_entropy(const ResponseGroup& g) {
  std::map<std::string, int> counts;
  int total = 0;
  for (const auto& r : g.responses)
    for (const auto& t : r.tokens) {
      ++counts[t];
      ++total;
    }
  double e = 0.0;
  for (const auto& [t, c] : counts) {
    double p = double(c) / total;
    e += -p * std::log(p) / std::log(2.0);
  }
  return e;
}

}  // namespace

TEST_CASE("word_distribution point mass") {
  auto d = word_distribution(make_group({{"night"}, {"night"}}), {});
  REQUIRE(d.support_size() == 1);
  CHECK(d.probs[0].second == doctest::Approx(1.0));
}

TEST_CASE("word_distribution uniform over pooled responses") {
  auto d = word_distribution(make_group({{"a", "b"}, {"c", "d"}}), {});
  REQUIRE(d.support_size() == 4);
  for (const auto& [t, p] : d.probs) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("word_distribution counts multiplicity") {
  auto d = word_distribution(make_group({{"a", "a", "b"}}), {});
  REQUIRE(d.support_size() == 2);
  CHECK(d.probs[0].second == doctest::Approx(2.0 / 3.0));
  CHECK(d.probs[1].second == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("word_distribution all-stopword responses is degenerate") {
  CHECK_THROWS_AS(word_distribution(make_group({{"the", "a"}}), {"the", "a"}),
                  DegenerateDistribution);
}

TEST_CASE("entropy on known distributions") {
  CHECK(entropy(make_dist({1.0})) == doctest::Approx(0.0));
  CHECK(entropy(make_dist({0.25, 0.25, 0.25, 0.25})) == doctest::Approx(2.0));
  CHECK(entropy(make_dist({0.5, 0.25, 0.25})) == doctest::Approx(1.5));
}

TEST_CASE("entropy matches brute-force recomputation on random groups") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<std::string>> responses;
    int n_resp = 2 + int(rng.uniform_int(0, 8));
    for (int r = 0; r < n_resp; ++r) {
      std::vector<std::string> tokens;
      int len = 1 + int(rng.uniform_int(0, 10));
      for (int i = 0; i < len; ++i)
        tokens.push_back("w" + std::to_string(rng.uniform_int(0, 40)));
      responses.push_back(tokens);
    }
    auto g = make_group(responses);
    CHECK(std::abs(entropy(word_distribution(g, {})) - brute_force_entropy(g)) <
          1e-12);
  }
}

TEST_CASE("entropy below log2(n) unless uniform") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 2 + std::size_t(rng.uniform_int(0, 20));
    std::vector<double> weights(n);
    double sum = 0.0;
    for (auto& w : weights) {
      w = 0.1 + rng.uniform();
      sum += w;
    }
    weights[0] += 1.0;  // force non-uniform
    sum += 1.0;
    for (auto& w : weights) w /= sum;
    CHECK(entropy(make_dist(weights)) < std::log2(double(n)) - 1e-12);
  }
}

TEST_CASE("max_mass_complement on known distributions") {
  CHECK(max_mass_complement(make_dist({1.0})) == doctest::Approx(0.0));
  CHECK(max_mass_complement(make_dist({0.2, 0.2, 0.2, 0.2, 0.2})) ==
        doctest::Approx(0.8));
  CHECK(max_mass_complement(make_dist({0.6, 0.3, 0.1})) == doctest::Approx(0.4));
}

TEST_CASE("max_mass_complement is permutation invariant") {
  Rng rng(17);
  std::vector<double> probs = {0.4, 0.3, 0.2, 0.1};
  double reference = max_mass_complement(make_dist(probs));
  for (int trial = 0; trial < 10; ++trial) {
    rng.shuffle(probs);
    CHECK(max_mass_complement(make_dist(probs)) == doctest::Approx(reference));
  }
}

TEST_CASE("average_response_length") {
  auto g = make_group({{"a", "b", "c"}, {"a", "b", "c", "d", "e"}});
  CHECK(average_response_length(g, LengthCounting::kRawTokens, {}) ==
        doctest::Approx(4.0));
  auto single = make_group({{"1", "2", "3", "4", "5", "6", "7"}});
  CHECK(average_response_length(single, LengthCounting::kRawTokens, {}) ==
        doctest::Approx(7.0));
  auto three = make_group({{"a", "b"}, {"a", "b"}, {"a", "b", "c", "d", "e", "f", "g", "h"}});
  CHECK(average_response_length(three, LengthCounting::kRawTokens, {}) ==
        doctest::Approx(4.0));
}

TEST_CASE("average_response_length post-stopword counting") {
  auto g = make_group({{"the", "cat"}, {"the", "the", "dog", "runs"}});
  CHECK(average_response_length(g, LengthCounting::kPostStopword, {"the"}) ==
        doctest::Approx(1.5));
}

TEST_CASE("normalize affine map") {
  auto n = normalize({0.0, 5.0, 10.0});
  CHECK(n.values[0] == doctest::Approx(0.0));
  CHECK(n.values[1] == doctest::Approx(0.5));
  CHECK(n.values[2] == doctest::Approx(1.0));
  CHECK(n.min == doctest::Approx(0.0));
  CHECK(n.max == doctest::Approx(10.0));
}

TEST_CASE("normalize degenerate all-equal maps to zero") {
  auto n = normalize({3.0, 3.0, 3.0});
  for (double v : n.values) CHECK(v == 0.0);
}

TEST_CASE("normalize round trip within 1e-12") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> values;
    for (int i = 0; i < 50; ++i) values.push_back(rng.uniform(-100.0, 100.0));
    auto n = normalize(values);
    for (std::size_t i = 0; i < values.size(); ++i) {
      double restored = n.values[i] * (n.max - n.min) + n.min;
      CHECK(std::abs(restored - values[i]) < 1e-12 * std::max(1.0, std::abs(values[i])));
    }
  }
}

TEST_CASE("normalize_with clamps out-of-range values") {
  CHECK(normalize_with(-5.0, 0.0, 10.0) == 0.0);
  CHECK(normalize_with(15.0, 0.0, 10.0) == 1.0);
  CHECK(normalize_with(2.5, 0.0, 10.0) == doctest::Approx(0.25));
}

TEST_CASE("histogram bins by fixed width") {
  auto bins = histogram({0.02, 0.03}, {1, -1}, 0.05);
  REQUIRE(bins.size() == 20);
  CHECK(bins[0].count == 2);
  CHECK(bins[0].pct_positive == doctest::Approx(0.5));
  CHECK(bins[0].pct_negative == doctest::Approx(0.5));
}

TEST_CASE("histogram final bin is closed at 1.0") {
  auto bins = histogram({1.0}, {1}, 0.05);
  CHECK(bins.back().count == 1);
  CHECK(bins.back().bin_start == doctest::Approx(0.95));
}

TEST_CASE("histogram empty bins report zero percentages") {
  auto bins = histogram({0.5}, {1}, 0.1);
  CHECK(bins[0].count == 0);
  CHECK(bins[0].pct_positive == 0.0);
  CHECK(bins[0].pct_negative == 0.0);
}

TEST_CASE("histogram counts sum to input size") {
  Rng rng(29);
  std::vector<double> values;
  std::vector<int> labels;
  for (int i = 0; i < 500; ++i) {
    values.push_back(rng.uniform());
    labels.push_back(rng.uniform() < 0.4 ? 1 : -1);
  }
  auto bins = histogram(values, labels, 0.05);
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == values.size());
}

TEST_CASE("histogram rejects out-of-range values") {
  CHECK_THROWS_AS(histogram({1.5}, {1}, 0.05), ValidationError);
}

TEST_CASE("compute_signals skips flagged and degenerate groups") {
  std::vector<ResponseGroup> groups;
  groups.push_back(make_group({{"a", "b"}, {"c"}}));
  groups.push_back(make_group({{"x"}}));
  groups[1].flagged = true;
  groups.push_back(make_group({{"the"}, {"the"}}));
  auto table = compute_signals(groups, {"the"}, LengthCounting::kRawTokens);
  CHECK(table.eligible[0]);
  CHECK_FALSE(table.eligible[1]);
  CHECK_FALSE(table.eligible[2]);
  CHECK(table.flagged_count == 1);
  CHECK(table.degenerate_count == 1);
}
