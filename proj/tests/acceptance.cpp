// Acceptance gate: one pass/fail line per criterion, non-zero exit when any
// criterion fails. Every tolerance is pinned here.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "test_helpers.hpp"

using namespace certeval;
using namespace certeval::testing;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int number;
  std::string name;
  bool passed;
  std::string detail;
  double seconds;
};

std::vector<Criterion> g_results;

template <typename Fn>
void run_criterion(int number, const std::string& name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  bool passed = false;
  std::string detail;
  try {
    detail = fn();
    passed = detail.empty() || detail.rfind("ok", 0) == 0;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  g_results.push_back({number, name, passed, detail, seconds});
}

Query math_query(const std::string& id, int gold) {
  Query q;
  q.id = id;
  q.source_task = TaskKind::math;
  q.text = "compute";
  q.expected = CanonicalAnswer::numeric(gold);
  return q;
}

// Deterministic verifier endpoints used by the dominance criterion.
struct EchoGoldVerifier : JudgmentSource {  // sensitivity = specificity = 1
  std::string critique(const Query&, const Response& r) override {
    return *r.correct ? "Judgment: correct." : "Judgment: incorrect.";
  }
};
struct AcceptAllVerifier : JudgmentSource {
  std::string critique(const Query&, const Response&) override { return "Judgment: correct."; }
};
struct ConstantCorrectCritic : JudgmentSource {
  std::string critique(const Query&, const Response&) override { return "Judgment: correct."; }
};
struct NoVerdictCritic : JudgmentSource {
  std::string critique(const Query&, const Response&) override {
    return "the reasoning looks plausible";
  }
};

// --------------------------------------------------------------------------
// 1. Metric oracle equivalence over 1,000 seeded random bags.
// --------------------------------------------------------------------------
std::string criterion_metric_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(987654321);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(next_index(rng, 64));
    const int alphabet = 1 + static_cast<int>(next_index(rng, 8));
    std::vector<int> labels;
    labels.reserve(k);
    for (int i = 0; i < k; ++i) labels.push_back(static_cast<int>(next_index(rng, alphabet)));
    const AnswerBag bag = make_bag("q", labels);
    const BagOracle oracle{labels};

    if (uncertainty_rate_exact(bag) != oracle.uncertainty_rate())
      return "UR mismatch at trial " + std::to_string(trial);
    const double cert = certainty_score(bag);
    const Rational ur = oracle.uncertainty_rate();
    const double oracle_cert =
        ur == 0 ? std::numeric_limits<double>::infinity() : -std::log(to_double(ur));
    if (std::isinf(cert) != std::isinf(oracle_cert) ||
        (!std::isinf(cert) && std::abs(cert - oracle_cert) > 1e-12))
      return "certainty mismatch at trial " + std::to_string(trial);
    if (majority_vote(bag) != CanonicalAnswer::numeric(oracle.mode_label()))
      return "mode mismatch at trial " + std::to_string(trial);

    const int expected = static_cast<int>(next_index(rng, alphabet));
    const auto cr = correctness_rate_exact(bag, CanonicalAnswer::numeric(expected));
    const auto oracle_cr = oracle.correctness_rate(expected);
    if (oracle_cr ? (cr.is_inf || cr.value != *oracle_cr) : !cr.is_inf)
      return "CR mismatch at trial " + std::to_string(trial);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= 5.0) return "too slow: " + std::to_string(secs) + "s (budget 5s)";
  return "ok: 1000 bags, exact agreement";
}

// --------------------------------------------------------------------------
// 2. Uncertainty-rate illustration cases.
// --------------------------------------------------------------------------
std::string criterion_ur_illustration() {
  std::vector<int> labels(51, 1);
  labels.insert(labels.end(), 49, 2);
  if (uncertainty_rate_exact(make_bag("q", labels)) != Rational(49, 51))
    return "51/49 bag: UR != 49/51";

  const AnswerBag unanimous = make_bag("q", std::vector<int>(64, 7));
  if (uncertainty_rate_exact(unanimous) != 0) return "unanimous bag: UR != 0";
  if (!std::isinf(certainty_score(unanimous))) return "unanimous bag: certainty != +inf";

  const AnswerBag tied = make_bag("q", {1, 2, 1, 2});
  if (uncertainty_rate_exact(tied) != 1) return "tied bag: UR != 1";
  if (certainty_score(tied) != 0.0) return "tied bag: certainty != 0";
  return "ok: UR = 49/51, 0->+inf, 1->0";
}

// --------------------------------------------------------------------------
// 3. Error-reduction-rate arithmetic.
// --------------------------------------------------------------------------
std::string criterion_err_arithmetic() {
  const double a = error_reduction_rate(83.5, 84.0);
  const double b = error_reduction_rate(91.3, 92.7);
  const double c = error_reduction_rate(95.8, 96.2);
  if (std::abs(a - 3.03) > 0.005) return "83.5->84.0 gave " + std::to_string(a);
  if (std::abs(b - 16.09) > 0.005) return "91.3->92.7 gave " + std::to_string(b);
  if (std::abs(c - 9.52) > 0.005) return "95.8->96.2 gave " + std::to_string(c);
  const double mean = (a + b + c) / 3.0;
  if (std::abs(mean - 9.55) > 0.01) return "mean gave " + std::to_string(mean);
  return "ok: 3.03 / 16.09 / 9.52, mean 9.55";
}

// --------------------------------------------------------------------------
// 4. Perfect-verifier dominance over 10^4 seeded corpora.
// --------------------------------------------------------------------------
std::string criterion_perfect_verifier() {
  const auto start = std::chrono::steady_clock::now();
  EchoGoldVerifier perfect;
  AcceptAllVerifier accept_all;
  Sc2Config always_check;
  always_check.certainty_threshold = std::numeric_limits<double>::infinity();

  const int gold = 1;
  const Query query = math_query("q", gold);

  for (int corpus = 0; corpus < 10000; ++corpus) {
    Rng rng(1000000 + corpus);
    int sc_correct = 0, sc2_correct = 0;
    const int n_queries = 3;
    for (int qi = 0; qi < n_queries; ++qi) {
      // random distribution over answers 1..4
      std::vector<double> weights(4);
      for (auto& w : weights) w = 0.05 + next_unit(rng);
      std::vector<int> labels;
      labels.reserve(64);
      bool has_gold = false;
      for (int i = 0; i < 64; ++i) {
        const int label = static_cast<int>(next_discrete(rng, weights)) + 1;
        has_gold = has_gold || label == gold;
        labels.push_back(label);
      }
      AnswerBag bag = make_graded_bag("q", labels, gold);

      const CanonicalAnswer sc = majority_vote(bag);
      const auto result = sc2_vote(bag, query, perfect, always_check);
      if (!result.answer) return "unexpected abstention in corpus " + std::to_string(corpus);

      if (has_gold && *result.answer != CanonicalAnswer::numeric(gold))
        return "gold in bag but SC2 missed it, corpus " + std::to_string(corpus);
      sc_correct += sc == CanonicalAnswer::numeric(gold);
      sc2_correct += *result.answer == CanonicalAnswer::numeric(gold);

      const auto passthrough = sc2_vote(bag, query, accept_all, always_check);
      if (!passthrough.answer || *passthrough.answer != sc)
        return "accept-all verifier diverged from SC, corpus " + std::to_string(corpus);
    }
    if (sc2_correct < sc_correct)
      return "corpus accuracy regressed, corpus " + std::to_string(corpus);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= 60.0) return "too slow: " + std::to_string(secs) + "s (budget 60s)";
  std::ostringstream out;
  out << "ok: 10000 corpora, dominance and accept-all identity hold (" << secs << "s)";
  return out.str();
}

// --------------------------------------------------------------------------
// 5. Certainty-bin accuracy is monotone when critic error falls with
//    certainty (linear: error = 0.4 - 0.12 * certainty).
// --------------------------------------------------------------------------
std::string criterion_monotone_bins() {
  const std::vector<double> edges{0, 0.5, 1.0, 1.5, 2.0,
                                  std::numeric_limits<double>::infinity()};
  int monotone_runs = 0;
  for (int run = 0; run < 1000; ++run) {
    Rng rng(5000000 + run);
    std::vector<CertaintyObservation> obs;
    obs.reserve(10000);
    for (int q = 0; q < 10000; ++q) {
      CertaintyObservation o;
      o.certainty = 2.5 * next_unit(rng);
      const double accuracy = 1.0 - (0.4 - 0.12 * o.certainty);
      o.critique_accuracy = next_bernoulli(rng, accuracy) ? 1.0 : 0.0;
      obs.push_back(o);
    }
    const auto table = certainty_correlation_report(obs, edges);
    bool monotone = true;
    double prev = -1;
    for (const auto& bin : table.bins) {
      if (bin.count == 0) continue;
      if (bin.mean_accuracy < prev) monotone = false;
      prev = bin.mean_accuracy;
    }
    monotone_runs += monotone;
  }
  if (monotone_runs < 990)
    return "only " + std::to_string(monotone_runs) + "/1000 runs monotone (need 990)";
  return "ok: " + std::to_string(monotone_runs) + "/1000 runs monotone";
}

// --------------------------------------------------------------------------
// 6. Selective self-check yields positive error reduction on the calibrated
//    synthetic corpus (30% low-certainty slice, 40% wrong-majority within it,
//    verifier sensitivity = specificity = 0.8, threshold C = 1).
// --------------------------------------------------------------------------

// Exact probability that the filtered vote lands on gold for a bag laid out
// wrong-first as [wrong x n_wrong][other x n_other][gold x n_gold], with
// keep probabilities 0.8 for correct and 0.2 for incorrect responses.
// First-seen tie-breaking means gold must strictly beat both rivals.
double filtered_vote_gold_probability(int n_wrong, int n_other, int n_gold, bool sc_is_gold) {
  auto binom_pmf = [](int n, double p) {
    std::vector<double> pmf(n + 1);
    for (int k = 0; k <= n; ++k) {
      double log_c = std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
      pmf[k] = std::exp(log_c + k * std::log(p) + (n - k) * std::log(1 - p));
    }
    return pmf;
  };
  const auto pw = binom_pmf(n_wrong, 0.2);
  const auto po = binom_pmf(n_other, 0.2);
  const auto pg = binom_pmf(n_gold, 0.8);
  double p_gold = 0;
  for (int g = 0; g <= n_gold; ++g)
    for (int w = 0; w <= n_wrong; ++w)
      for (int o = 0; o <= n_other; ++o) {
        const double p = pg[g] * pw[w] * po[o];
        if (g == 0 && w == 0 && o == 0) {
          if (sc_is_gold) p_gold += p;  // empty filter falls back to the SC vote
        } else if (g > w && g > o) {
          p_gold += p;
        }
      }
  return p_gold;
}

std::string criterion_positive_err() {
  // Corpus recipe per run: 200 queries; 140 high-certainty (4 wrong / 60
  // gold, certainty ~ 2.7); 60 low-certainty (certainty ~ 0.14): 24
  // wrong-majority (30 wrong / 8 other / 26 gold) and 36 correct-majority
  // (26 wrong / 8 other / 30 gold). Baseline SC accuracy is exactly 88%.
  const int gold = 1, wrong = 2, other = 3;
  auto shape = [&](int n_wrong, int n_other, int n_gold) {
    std::vector<int> labels(n_wrong, wrong);
    labels.insert(labels.end(), n_other, other);
    labels.insert(labels.end(), n_gold, gold);
    return labels;
  };
  const auto high = shape(4, 0, 60);
  const auto low_wrong_majority = shape(30, 8, 26);
  const auto low_correct_majority = shape(26, 8, 30);

  // Calibration oracle: exact expected SC2 accuracy under the verifier.
  const double p_flip = filtered_vote_gold_probability(30, 8, 26, false);
  const double p_retain = filtered_vote_gold_probability(26, 8, 30, true);
  const double expected_sc2_acc = (140.0 + 24.0 * p_flip + 36.0 * p_retain) / 200.0 * 100.0;
  const double sc_acc = 88.0;
  if (expected_sc2_acc <= sc_acc + 2.0)
    return "calibration: expected SC2 accuracy " + std::to_string(expected_sc2_acc) +
           "% leaves no margin over SC " + std::to_string(sc_acc) + "%";

  const Query query = math_query("q", gold);
  Sc2Config cfg;
  cfg.certainty_threshold = 1.0;

  int positive = 0;
  for (int run = 0; run < 500; ++run) {
    SyntheticCritic verifier(0.8, 0.8, 7000000 + run);
    int sc_hits = 0, sc2_hits = 0;
    auto play = [&](const std::vector<int>& labels, int count) {
      for (int i = 0; i < count; ++i) {
        AnswerBag bag = make_graded_bag("q", labels, gold);
        const auto result = sc2_vote(bag, query, verifier, cfg);
        sc_hits += result.sc_answer == CanonicalAnswer::numeric(gold);
        sc2_hits += result.answer && *result.answer == CanonicalAnswer::numeric(gold);
      }
    };
    play(high, 140);
    play(low_wrong_majority, 24);
    play(low_correct_majority, 36);
    const double base = 100.0 * sc_hits / 200.0;
    const double improved = 100.0 * sc2_hits / 200.0;
    positive += base < 100.0 && error_reduction_rate(base, improved) > 0;
  }
  if (positive < 475)
    return "positive ERR in only " + std::to_string(positive) + "/500 runs (need 475)";
  std::ostringstream out;
  out << "ok: positive ERR in " << positive << "/500 runs (oracle expects SC2 "
      << expected_sc2_acc << "% vs SC 88%)";
  return out.str();
}

// --------------------------------------------------------------------------
// 7. Benchmark balance and byte-identical reruns through the CLI.
// --------------------------------------------------------------------------
std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string criterion_benchmark_balance() {
  const fs::path dir = fs::temp_directory_path() / "certeval_acceptance_bench";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // a graded corpus with a mix of clean, contested, and all-correct bags
  std::vector<Query> queries;
  std::vector<AnswerBag> bags;
  Rng rng(424242);
  for (int i = 0; i < 30; ++i) {
    const std::string id = "q" + std::to_string(i);
    queries.push_back(math_query(id, 1));
    std::vector<int> labels;
    for (int j = 0; j < 16; ++j) labels.push_back(1 + static_cast<int>(next_index(rng, 3)));
    bags.push_back(make_graded_bag(id, labels, 1));
  }
  write_jsonl((dir / "queries.jsonl").string(), queries);
  write_jsonl((dir / "bags.jsonl").string(), bags);
  {
    std::ofstream out(dir / "config.json");
    out << R"({"seed": 99, "selection": {"seed": 99}})";
  }

  auto invoke = [&](const std::string& out_dir) {
    const std::string cmd = std::string(CLI_PATH) + " build-bench --config " +
                            (dir / "config.json").string() + " --bags " +
                            (dir / "bags.jsonl").string() + " --queries " +
                            (dir / "queries.jsonl").string() + " --out " +
                            (dir / out_dir).string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  if (invoke("a") != 0) return "first build-bench run failed";
  if (invoke("b") != 0) return "second build-bench run failed";

  const std::string run_a = read_file(dir / "a" / "triplets.jsonl");
  if (run_a != read_file(dir / "b" / "triplets.jsonl"))
    return "reruns with the same seed are not byte-identical";
  if (run_a.empty()) return "benchmark came out empty";

  const auto triplets = read_jsonl<BenchmarkTriplet>((dir / "a" / "triplets.jsonl").string());
  int n_correct = 0, n_incorrect = 0;
  for (const auto& t : triplets) {
    if (t.gold_judgment == Judgment::correct) {
      ++n_correct;
      continue;
    }
    ++n_incorrect;
    const AnswerBag* bag = nullptr;
    for (const auto& b : bags)
      if (b.query_id == t.query.id) bag = &b;
    if (!bag) return "triplet references an unknown bag";
    const auto convincing = pick_convincing_wrong(*bag);
    if (!convincing || !t.response.answer || *t.response.answer != *convincing->front().answer)
      return "incorrect triplet for " + t.query.id + " does not carry the modal wrong answer";
  }
  if (n_correct != n_incorrect)
    return "unbalanced: " + std::to_string(n_correct) + " correct vs " +
           std::to_string(n_incorrect) + " incorrect";
  return "ok: " + std::to_string(n_correct) + "/" + std::to_string(n_incorrect) +
         " split, byte-identical rerun";
}

// --------------------------------------------------------------------------
// 8. Softmax selection law over complexities [1, 2].
// --------------------------------------------------------------------------
std::string criterion_softmax_law() {
  std::vector<Response> cands;
  for (int c : {1, 2}) {
    Response r = make_response("q", c, c - 1);
    r.complexity = c;
    cands.push_back(r);
  }
  auto frequency_of_max = [&](double temperature, long draws, std::uint64_t seed) {
    Rng rng(seed);
    long hits = 0;
    for (long i = 0; i < draws; ++i)
      hits += *complexity_softmax_sample(cands, temperature, rng).complexity == 2;
    return static_cast<double>(hits) / draws;
  };

  const double e = std::exp(1.0);
  const double at_unit = frequency_of_max(1.0, 1000000, 81);
  if (std::abs(at_unit - e / (1 + e)) > 0.005)
    return "T=1: max picked at " + std::to_string(at_unit) + ", want e/(1+e)";

  const double at_hot = frequency_of_max(1e6, 1000000, 82);
  if (std::abs(at_hot - 0.5) > 0.01) return "T=1e6: not uniform, " + std::to_string(at_hot);

  const double at_cold = frequency_of_max(1e-6, 1000000, 83);
  if (at_cold <= 0.999) return "T=1e-6: max frequency only " + std::to_string(at_cold);
  return "ok: e/(1+e) at T=1, uniform at T=1e6, argmax at T=1e-6";
}

// --------------------------------------------------------------------------
// 9. Judgment protocol conformance.
// --------------------------------------------------------------------------
std::string criterion_protocol() {
  std::vector<BenchmarkTriplet> triplets;
  for (int i = 0; i < 8; ++i) {
    const Query q = math_query("q" + std::to_string(i), 1);
    Response good = make_response(q.id, 1, 0);
    good.correct = true;
    Response bad = make_response(q.id, 2, 1);
    bad.correct = false;
    triplets.push_back({q, good, Judgment::correct});
    triplets.push_back({q, bad, Judgment::incorrect});
  }

  ConstantCorrectCritic constant;
  CriticEvalConfig cfg;
  const auto report = evaluate_critic(triplets, "constant", constant, cfg);
  if (report.mean_accuracy != 0.5)
    return "constant critic scored " + std::to_string(report.mean_accuracy) + ", want 0.5 exact";
  if (report.judgment_temperature != 0.6)
    return "report temperature is " + std::to_string(report.judgment_temperature);
  if (report.runs_per_model != 8)
    return "report run count is " + std::to_string(report.runs_per_model);
  if (static_cast<int>(report.per_run_accuracy.size()) != 8)
    return "per-run accuracy vector has wrong length";

  NoVerdictCritic silent;
  const auto silent_report = evaluate_critic(triplets, "silent", silent, cfg);
  if (silent_report.mean_accuracy != 0.5)
    return "missing judgment pattern did not default to correct";
  if (extract_judgment("no verdict anywhere", {}) != Judgment::correct)
    return "extract_judgment default is not correct";
  return "ok: 0.5 exact, default-correct, headers 0.6 / 8 runs";
}

}  // namespace

int main() {
  run_criterion(1, "metric oracle equivalence", criterion_metric_oracle);
  run_criterion(2, "uncertainty-rate illustration", criterion_ur_illustration);
  run_criterion(3, "error-reduction arithmetic", criterion_err_arithmetic);
  run_criterion(4, "perfect-verifier dominance", criterion_perfect_verifier);
  run_criterion(5, "monotone certainty bins", criterion_monotone_bins);
  run_criterion(6, "positive error reduction", criterion_positive_err);
  run_criterion(7, "benchmark balance and determinism", criterion_benchmark_balance);
  run_criterion(8, "softmax selection law", criterion_softmax_law);
  run_criterion(9, "judgment protocol conformance", criterion_protocol);

  int failures = 0;
  for (const auto& r : g_results) {
    failures += !r.passed;
    std::printf("%s  %d  %-34s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.number,
                r.name.c_str(), r.seconds, r.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", g_results.size() - failures, g_results.size());
  return failures == 0 ? 0 : 1;
}
