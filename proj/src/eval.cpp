#include "ctxdep/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "ctxdep/common.hpp"
#include "json.hpp"

namespace ctxdep {

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size() || preds.empty())
    throw ValidationError("accuracy: preds/labels length mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

Confusion confusion(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw ValidationError("confusion: preds/labels length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] > 0)
      ++(preds[i] > 0 ? c.tp : c.fn);
    else
      ++(preds[i] > 0 ? c.fp : c.tn);
  }
  return c;
}

namespace {

// P(X <= k) and P(X >= k) for X ~ Binomial(n, 1/2), via the pmf recurrence
// pmf(j+1) = pmf(j) * (n-j) / (j+1).
std::pair<double, double> binomial_tails(std::size_t n, std::size_t k) {
  double pmf = std::pow(0.5, static_cast<double>(n));
  double lower = 0.0, upper = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    if (j <= k) lower += pmf;
    if (j >= k) upper += pmf;
    pmf *= static_cast<double>(n - j) / static_cast<double>(j + 1);
  }
  return {lower, upper};
}

}  // namespace

SignTestResult sign_test(const std::vector<int>& preds_a,
                         const std::vector<int>& preds_b,
                         const std::vector<int>& labels) {
  if (preds_a.size() != labels.size() || preds_b.size() != labels.size())
    throw ValidationError("sign_test: prediction lists not aligned with labels");
  SignTestResult result;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool a_correct = preds_a[i] == labels[i];
    bool b_correct = preds_b[i] == labels[i];
    if (a_correct == b_correct) continue;
    ++result.discordant;
    if (a_correct) ++result.wins_a;
  }
  if (result.discordant == 0) {
    result.p_value = 1.0;
    result.no_evidence = true;
    return result;
  }
  auto [lower, upper] = binomial_tails(result.discordant, result.wins_a);
  result.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
  return result;
}

EvalReport build_report(
    const std::vector<std::pair<std::string, std::vector<int>>>& systems,
    const std::vector<int>& labels, const std::string& dataset) {
  if (systems.empty()) throw ValidationError("build_report: no systems");
  EvalReport report;
  report.dataset = dataset;
  for (const auto& [name, preds] : systems) {
    SystemResult sr;
    sr.name = name;
    sr.accuracy = accuracy(preds, labels);
    sr.confusion = confusion(preds, labels);
    report.systems.push_back(sr);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < report.systems.size(); ++i)
    if (report.systems[i].accuracy > report.systems[best].accuracy) best = i;
  report.best_system = report.systems[best].name;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    if (i == best) continue;
    PairwiseTest pt;
    pt.system_a = systems[best].first;
    pt.system_b = systems[i].first;
    pt.test = sign_test(systems[best].second, systems[i].second, labels);
    report.sign_tests.push_back(std::move(pt));
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["best_system"] = best_system;
  auto sys = nlohmann::ordered_json::array();
  for (const auto& s : systems) {
    sys.push_back({{"name", s.name},
                   {"accuracy", s.accuracy},
                   {"confusion",
                    {{"tp", s.confusion.tp},
                     {"fp", s.confusion.fp},
                     {"tn", s.confusion.tn},
                     {"fn", s.confusion.fn}}}});
  }
  j["systems"] = sys;
  auto tests = nlohmann::ordered_json::array();
  for (const auto& pt : sign_tests) {
    tests.push_back({{"system_a", pt.system_a},
                     {"system_b", pt.system_b},
                     {"p_value", pt.test.p_value},
                     {"discordant", pt.test.discordant},
                     {"wins_a", pt.test.wins_a},
                     {"no_evidence", pt.test.no_evidence}});
  }
  j["sign_tests"] = tests;
  return j.dump(2);
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "Evaluation: " << dataset << "\n";
  out << std::left << std::setw(24) << "system" << std::setw(10) << "accuracy"
      << std::setw(8) << "tp" << std::setw(8) << "fp" << std::setw(8) << "tn"
      << std::setw(8) << "fn" << "\n";
  for (const auto& s : systems) {
    out << std::left << std::setw(24) << s.name << std::setw(10) << std::fixed
        << std::setprecision(4) << s.accuracy << std::setw(8) << s.confusion.tp
        << std::setw(8) << s.confusion.fp << std::setw(8) << s.confusion.tn
        << std::setw(8) << s.confusion.fn << "\n";
  }
  out << "best system: " << best_system << "\n";
  for (const auto& pt : sign_tests) {
    out << "sign test " << pt.system_a << " vs " << pt.system_b << ": p="
        << std::setprecision(10) << pt.test.p_value
        << " (discordant=" << pt.test.discordant << ", wins=" << pt.test.wins_a;
    if (pt.test.no_evidence) out << ", no-evidence";
    out << ")\n";
  }
  return out.str();
}

std::string predictions_to_tsv(const std::vector<int>& preds) {
  std::string out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += std::to_string(i);
    out.push_back('\t');
    out += preds[i] > 0 ? "1" : "-1";
    out.push_back('\n');
  }
  return out;
}

std::vector<int> predictions_from_tsv(const std::string& text) {
  std::istringstream in(text);
  std::vector<int> preds;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("prediction row without tab separator");
    std::string value = line.substr(tab + 1);
    if (value == "1" || value == "+1")
      preds.push_back(1);
    else if (value == "-1")
      preds.push_back(-1);
    else
      throw FormatError("prediction must be +1 or -1, got: " + value);
  }
  return preds;
}

}  // namespace ctxdep
