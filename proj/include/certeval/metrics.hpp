#ifndef CERTEVAL_METRICS_HPP_
#define CERTEVAL_METRICS_HPP_

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "certeval/answer.hpp"
#include "certeval/errors.hpp"
#include "certeval/rational.hpp"
#include "certeval/types.hpp"

namespace certeval {

// Non-negative rational extended with +inf. Thresholds treat +inf as larger
// than every finite value.
struct ExtRational {
  bool is_inf = false;
  Rational value = 0;

  static ExtRational infinity() { return {true, 0}; }
  static ExtRational finite(Rational v) { return {false, std::move(v)}; }

  double as_double() const {
    return is_inf ? std::numeric_limits<double>::infinity() : to_double(value);
  }
  std::string as_string() const { return is_inf ? "inf" : to_fraction_string(value); }

  bool operator==(const ExtRational& o) const {
    return is_inf == o.is_inf && (is_inf || value == o.value);
  }
  bool operator<(const ExtRational& o) const {
    if (is_inf) return false;
    if (o.is_inf) return true;
    return value < o.value;
  }
  bool operator<=(const ExtRational& o) const { return *this < o || *this == o; }

  static ExtRational parse(const std::string& s) {
    if (s == "inf") return infinity();
    auto r = parse_rational(s);
    if (!r) throw ConfigError("bad extended-rational literal: " + s);
    return finite(*r);
  }
};

// Multiset counts of canonical answers, in first-seen order. total is the
// bag's k; responses whose extraction failed are excluded from the counts
// but still counted in total.
struct FrequencyTable {
  struct Entry {
    CanonicalAnswer answer;
    int count = 0;
  };
  std::vector<Entry> entries;  // first-seen order
  int total = 0;               // k

  int parsed_count() const {
    int n = 0;
    for (const auto& e : entries) n += e.count;
    return n;
  }

  int count_of(const CanonicalAnswer& a) const {
    for (const auto& e : entries)
      if (e.answer == a) return e.count;
    return 0;
  }
};

inline FrequencyTable frequency_table(const AnswerBag& bag) {
  FrequencyTable table;
  table.total = bag.k;
  std::unordered_map<CanonicalAnswer, std::size_t, CanonicalAnswerHash> index;
  for (const auto& r : bag.responses) {
    if (!r.answer) continue;
    auto [it, inserted] = index.emplace(*r.answer, table.entries.size());
    if (inserted)
      table.entries.push_back({*r.answer, 1});
    else
      ++table.entries[it->second].count;
  }
  if (table.entries.empty())
    throw EmptyBagError("bag " + bag.query_id + " has no parsed answers");
  return table;
}

// Argmax by count; ties break by earliest first occurrence in the bag.
inline const CanonicalAnswer& mode_answer(const FrequencyTable& table) {
  if (table.entries.empty()) throw EmptyBagError("empty frequency table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.entries.size(); ++i)
    if (table.entries[i].count > table.entries[best].count) best = i;
  return table.entries[best].answer;
}

namespace detail {

// (top count, runner-up count); runner-up 0 when the answer is unique.
inline std::pair<int, int> top_two_counts(const FrequencyTable& table) {
  int top = 0, second = 0;
  for (const auto& e : table.entries) {
    if (e.count > top) {
      second = top;
      top = e.count;
    } else if (e.count > second) {
      second = e.count;
    }
  }
  return {top, second};
}

}  // namespace detail

// Frequency ratio of the runner-up answer to the top answer: 0 when all
// answers agree, 1 when the top two are tied.
inline Rational uncertainty_rate_exact(const FrequencyTable& table) {
  auto [top, second] = detail::top_two_counts(table);
  if (top == 0) throw EmptyBagError("empty frequency table");
  return Rational(second, top);
}

inline Rational uncertainty_rate_exact(const AnswerBag& bag) {
  return uncertainty_rate_exact(frequency_table(bag));
}

inline double uncertainty_rate(const AnswerBag& bag) {
  return to_double(uncertainty_rate_exact(bag));
}

// Negative natural log of the uncertainty rate; +inf on a unanimous bag.
inline double certainty_score_from_ur(const Rational& ur) {
  if (ur == 0) return std::numeric_limits<double>::infinity();
  return -std::log(to_double(ur));
}

inline double certainty_score(const FrequencyTable& table) {
  return certainty_score_from_ur(uncertainty_rate_exact(table));
}

inline double certainty_score(const AnswerBag& bag) {
  return certainty_score(frequency_table(bag));
}

// Frequency of the expected answer over the frequency of the most common
// wrong answer; +inf when nothing is wrong, 0 when the expected answer is
// absent. The vote is correct exactly when this exceeds 1 (unique max).
inline ExtRational correctness_rate_exact(const FrequencyTable& table,
                                          const CanonicalAnswer& expected) {
  if (table.entries.empty()) throw EmptyBagError("empty frequency table");
  if (expected.kind() != table.entries.front().answer.kind() ||
      expected.kind() == AnswerKind::pass_profile)
    throw IncomparableAnswersError("expected answer kind does not match bag answers");
  int expected_count = 0;
  int top_wrong = 0;
  for (const auto& e : table.entries) {
    if (e.answer == expected)
      expected_count = e.count;
    else if (e.count > top_wrong)
      top_wrong = e.count;
  }
  if (top_wrong == 0) return ExtRational::infinity();
  return ExtRational::finite(Rational(expected_count, top_wrong));
}

inline ExtRational correctness_rate_exact(const AnswerBag& bag, const CanonicalAnswer& expected) {
  return correctness_rate_exact(frequency_table(bag), expected);
}

inline double correctness_rate(const AnswerBag& bag, const CanonicalAnswer& expected) {
  return correctness_rate_exact(bag, expected).as_double();
}

// Code-task surrogate: #correct / #incorrect over unit-test-graded bags.
inline ExtRational surrogate_cr_code(const AnswerBag& bag) {
  int n_correct = 0, n_incorrect = 0;
  for (const auto& r : bag.responses) {
    if (!r.correct) throw UngradedBagError("bag " + bag.query_id + " has ungraded responses");
    (*r.correct ? n_correct : n_incorrect)++;
  }
  if (n_incorrect == 0) return ExtRational::infinity();
  return ExtRational::finite(Rational(n_correct, n_incorrect));
}

inline const CanonicalAnswer& majority_vote(const FrequencyTable& table) {
  return mode_answer(table);
}

inline CanonicalAnswer majority_vote(const AnswerBag& bag) {
  return mode_answer(frequency_table(bag));
}

// (new - baseline) / (100 - baseline) * 100, all in percent.
inline double error_reduction_rate(double baseline_acc, double new_acc) {
  if (baseline_acc < 0 || baseline_acc > 100 || new_acc < 0 || new_acc > 100)
    throw ConfigError("accuracies must be percentages in [0,100]");
  if (baseline_acc == 100)
    throw ConfigError("error reduction rate is degenerate at baseline 100%");
  return (new_acc - baseline_acc) / (100.0 - baseline_acc) * 100.0;
}

// Per-bag summary of every certainty metric.
struct CertaintyReport {
  CanonicalAnswer top_answer;
  int top_freq = 0;
  std::optional<CanonicalAnswer> runner_up;
  int runner_up_freq = 0;
  Rational uncertainty_rate = 0;
  double certainty_score = 0;
  std::optional<ExtRational> correctness_rate;  // present iff expected known
  int k = 0;
};

inline CertaintyReport make_certainty_report(const AnswerBag& bag,
                                             const std::optional<CanonicalAnswer>& expected = {}) {
  FrequencyTable table = frequency_table(bag);
  CertaintyReport rep;
  rep.k = bag.k;
  rep.top_answer = mode_answer(table);
  rep.top_freq = table.count_of(rep.top_answer);
  // runner-up: best count among other answers, first-seen tie break
  int best = 0;
  for (const auto& e : table.entries) {
    if (e.answer == rep.top_answer) continue;
    if (e.count > best) {
      best = e.count;
      rep.runner_up = e.answer;
      rep.runner_up_freq = e.count;
    }
  }
  rep.uncertainty_rate = uncertainty_rate_exact(table);
  rep.certainty_score = certainty_score_from_ur(rep.uncertainty_rate);
  if (expected) rep.correctness_rate = correctness_rate_exact(table, *expected);
  return rep;
}

inline void to_json(nlohmann::json& j, const CertaintyReport& r) {
  j = nlohmann::json{{"log_base", "e"},
                     {"k", r.k},
                     {"top_answer", r.top_answer},
                     {"top_freq", r.top_freq},
                     {"uncertainty_rate", to_double(r.uncertainty_rate)},
                     {"uncertainty_rate_exact", to_fraction_string(r.uncertainty_rate)},
                     {"certainty_score", std::isinf(r.certainty_score)
                                             ? nlohmann::json("inf")
                                             : nlohmann::json(r.certainty_score)}};
  if (r.runner_up) {
    j["runner_up"] = *r.runner_up;
    j["runner_up_freq"] = r.runner_up_freq;
  }
  if (r.correctness_rate) {
    j["correctness_rate"] = r.correctness_rate->is_inf
                                ? nlohmann::json("inf")
                                : nlohmann::json(r.correctness_rate->as_double());
    j["correctness_rate_exact"] = r.correctness_rate->as_string();
  }
}

}  // namespace certeval

#endif  // CERTEVAL_METRICS_HPP_
